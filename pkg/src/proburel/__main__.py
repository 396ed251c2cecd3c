import sys

from .lang.cli import main

sys.exit(main())
