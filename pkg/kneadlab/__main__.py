import sys

from kneadlab.cli import main

sys.exit(main())
