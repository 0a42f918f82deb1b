import sys

from tgscope.cli import main

sys.exit(main())
