#!/usr/bin/env python3
"""
SVM Binary Choice Estimation - Main Entry Point

Command-line tool that fits the (class-weighted) soft-margin SVM and the
logistic QMLE to binary choice data, runs the Monte Carlo designs and checks
the non-severe imbalance condition.
"""

import logging
import os
import sys

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Add project root to path for imports
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from ui.cli import CommandLineUI


def main():
    """
    Main entry point for the command-line tool
    """
    logging.basicConfig(
        level=os.getenv("BCM_LOG_LEVEL", "WARNING").upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    ui = CommandLineUI()
    sys.exit(ui.run())


if __name__ == "__main__":
    main()
