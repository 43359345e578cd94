import sys

from orrw.cli import main

sys.exit(main())
