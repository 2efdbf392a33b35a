import sys

from afc.cli import main

sys.exit(main())
