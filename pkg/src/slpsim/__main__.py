"""Allow `python -m slpsim`."""

import sys

from .cli import main

sys.exit(main())
