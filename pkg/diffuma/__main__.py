import sys

from diffuma.cli import main


sys.exit(main())
