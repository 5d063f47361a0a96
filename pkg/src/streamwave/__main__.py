import sys

from streamwave.cli import main

sys.exit(main())
