"""Entry point for running spoofguard as a module: python -m spoofguard"""

import sys

from spoofguard.cli import main

if __name__ == "__main__":
    sys.exit(main())
