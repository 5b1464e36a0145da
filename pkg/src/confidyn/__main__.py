import sys

from confidyn.cli import main

sys.exit(main())
