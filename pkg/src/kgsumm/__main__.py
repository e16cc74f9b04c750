import sys

from kgsumm.cli import main

sys.exit(main())
