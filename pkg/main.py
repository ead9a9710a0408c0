"""
Console entry point.

Run with: python main.py <validate|simulate|compare|identify|synthesize> ...
"""

import sys

from app.cli import main

if __name__ == "__main__":
    sys.exit(main())
