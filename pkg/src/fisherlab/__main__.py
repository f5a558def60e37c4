import sys

from fisherlab.cli import main

sys.exit(main())
