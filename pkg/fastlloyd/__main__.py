"""``python -m fastlloyd``."""

import sys

from fastlloyd.cli.main import main

sys.exit(main())
