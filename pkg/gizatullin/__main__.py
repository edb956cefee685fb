"""Allow ``python -m gizatullin``."""

import sys

from .cli import main

sys.exit(main())
