import sys

from fedsat.cli import main

sys.exit(main())
