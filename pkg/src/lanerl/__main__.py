import sys

from lanerl.harness.cli import main

sys.exit(main())
