"""Pydantic models for run configuration."""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator


class RadiusPolicy(str, Enum):
    CONSTANT = "constant"
    STEP = "step"


class PostProcessing(str, Enum):
    FOLD = "fold"
    TRUNCATE = "truncate"
    NONE = "none"


class AlgorithmKind(str, Enum):
    LLOYD = "lloyd"
    SU = "su"
    GAUSS = "gauss"
    FAST = "fast"


class SizeRatio(str, Enum):
    BALANCED = "balanced"
    LINEAR = "linear"
    JITTER = "jitter"  # sizes drawn from [0.7, 1.3] x average


class Role(str, Enum):
    SERVER = "server"
    CLIENT = "client"
    LOCAL = "local"


class ExecutionMode(str, Enum):
    CENTRAL = "central"
    LOOPBACK = "loopback"


class ProtocolParams(BaseModel):
    """Everything needed to make a run deterministic."""

    model_config = ConfigDict(frozen=True, use_enum_values=False)

    k: int = Field(default=2, ge=1)
    d: int = Field(default=2, ge=1)
    epsilon: float = Field(default=1.0, ge=0.0)
    delta: float | None = Field(default=None, gt=0.0, lt=1.0)  # None: 1/(N log N)
    bound: float = Field(default=1.0, gt=0.0)
    alpha: float = Field(default=0.8, gt=0.0, le=1.0)
    radius_policy: RadiusPolicy = RadiusPolicy.STEP
    q: int = Field(default=16, ge=0)
    w: int = 64
    clients: int = Field(default=2, ge=1)
    seed: int = 0
    t_override: int | None = None
    count_floor: float = 1.0
    rho: float | None = None  # baseline count-error constant, default bound / 2
    post_processing: PostProcessing = PostProcessing.FOLD
    radius_clipping: bool = True
    delta_log_base: str = "e"  # e, 2 or 10

    @model_validator(mode="after")
    def _check_invariants(self) -> ProtocolParams:
        if self.w not in (32, 64):
            raise ValueError(f"ring width must be 32 or 64, got {self.w}")
        if self.q >= self.w:
            raise ValueError(f"fraction bits q={self.q} must be below ring width w={self.w}")
        if self.delta_log_base not in ("e", "2", "10"):
            raise ValueError(f"delta_log_base must be e, 2 or 10, got {self.delta_log_base}")
        if self.rho is not None and self.rho <= 0:
            raise ValueError("rho must be positive")
        return self

    @property
    def effective_rho(self) -> float:
        return self.rho if self.rho is not None else self.bound / 2.0


class TransportConfig(BaseModel):
    role: Role = Role.LOCAL
    host: str = "127.0.0.1"
    port: int = 7070
    party_index: int = Field(default=0, ge=0)
    latency_ms: float = Field(default=0.0, ge=0.0)
    round_timeout_s: float = Field(default=30.0, gt=0.0)
    connect_timeout_s: float = Field(default=10.0, gt=0.0)
    noise_seed: int | None = None  # server-only; None draws from OS entropy
    n_total: int | None = None  # server in process mode: public dataset size


class SynthSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(default=10000, ge=1)
    k_true: int = Field(default=2, ge=1)
    d: int = Field(default=2, ge=1)
    separation: float = Field(default=0.5, ge=-1.0, le=1.0)
    size_ratio: SizeRatio = SizeRatio.LINEAR
    outliers: int | None = Field(default=None, ge=0)  # None: uniform draw from [0, 100]
    spread: float = Field(default=0.1, gt=0.0)
    seed: int = 0


class SweepConfig(BaseModel):
    eps_grid: list[float] = Field(default_factory=lambda: [0.1, 0.25, 0.5, 0.75, 1.0])
    runs: int = Field(default=10, ge=1)
    algos: list[AlgorithmKind] = Field(
        default_factory=lambda: [
            AlgorithmKind.LLOYD,
            AlgorithmKind.SU,
            AlgorithmKind.GAUSS,
            AlgorithmKind.FAST,
        ]
    )
    mode: ExecutionMode = ExecutionMode.CENTRAL
    workers: int = Field(default=1, ge=1)


class FastLloydConfig(BaseModel):
    algo: AlgorithmKind = AlgorithmKind.FAST
    params: ProtocolParams = Field(default_factory=ProtocolParams)
    transport: TransportConfig = Field(default_factory=TransportConfig)
    synth: SynthSpec | None = None
    dataset_path: str | None = None
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    output: str | None = None
    trace_path: str | None = None
