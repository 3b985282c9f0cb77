import sys

from cavityqst.cli import main

sys.exit(main())
