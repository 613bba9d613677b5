import sys

from modules import cli


def invperm():
    sys.exit(cli.main(sys.argv[1:]))


if __name__ == "__main__":
    invperm()
