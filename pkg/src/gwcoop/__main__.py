import sys

from gwcoop.cli import main

sys.exit(main())
