"""FastLloyd: federated differentially private k-means over masked secure aggregation."""

__version__ = "1.0.0"
