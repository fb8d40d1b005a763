"""Allow ``python -m srdetect`` to run the command-line entry point."""

import sys

from srdetect.cli import main

sys.exit(main())
