import sys

from ztrack.cli import main

sys.exit(main())
