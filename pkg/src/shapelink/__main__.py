"""Entry point for ``python -m shapelink``."""

import sys

from .cli import main

sys.exit(main())
