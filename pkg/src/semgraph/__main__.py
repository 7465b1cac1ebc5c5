import sys

from semgraph.cli import main

sys.exit(main())
