import sys

from ridnc.cli import main

sys.exit(main())
