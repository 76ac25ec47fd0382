import sys

from provtrail.cli import main

sys.exit(main())
