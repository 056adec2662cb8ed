import sys

from frachum.cli import main

sys.exit(main())
