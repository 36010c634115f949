import sys

from alphaduplex.cli import main

sys.exit(main())
