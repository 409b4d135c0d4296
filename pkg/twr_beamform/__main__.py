import sys

from twr_beamform.cli import main

sys.exit(main())
