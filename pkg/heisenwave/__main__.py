import sys

from heisenwave.main import main

sys.exit(main())
