import sys

from sfbank.cli import main

sys.exit(main())
