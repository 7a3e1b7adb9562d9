"""Package entry point so ``python3 -m gridspace`` works like the script."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
