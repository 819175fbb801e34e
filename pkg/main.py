"""
NAMR spectrum simulator - Main Entry Point
Closed-form and time-domain TLR spectra with a qubit-coupled nanomechanical resonator
"""

import logging
import sys

from cli.commands import main


if __name__ == "__main__":
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    logging.captureWarnings(True)
    sys.exit(main())
