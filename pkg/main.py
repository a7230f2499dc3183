"""
Main entry point for the lfmkit command line.
"""
import sys

from cli.commands import main

if __name__ == "__main__":
    sys.exit(main())
