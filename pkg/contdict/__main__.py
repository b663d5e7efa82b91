import sys

from contdict.cli import main

if __name__ == '__main__':
    sys.exit(main())
