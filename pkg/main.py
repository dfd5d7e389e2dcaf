"""zdquant - zero-delay quantization toolkit"""

import sys

from zdquant.cli import main

if __name__ == "__main__":
    sys.exit(main())
