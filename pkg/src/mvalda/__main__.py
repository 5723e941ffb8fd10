import sys

from mvalda.cli import main

sys.exit(main())
