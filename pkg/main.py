#!/usr/bin/env python3
"""
xiangqi-zero launcher for running from a source checkout.
The installed console script is `xiangqi-zero`.
"""

import sys

from xiangqi_zero.main import main

if __name__ == "__main__":
    sys.exit(main())
