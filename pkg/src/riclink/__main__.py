import sys

from riclink.cli import main

sys.exit(main())
