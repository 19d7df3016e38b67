"""
Main entry point when package is run as module: python -m directed_currents
"""

from .main import main

if __name__ == "__main__":
    main()
