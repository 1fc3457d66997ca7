#!/usr/bin/env python3
"""Reproduce the universal-bound bracket: 10^4 bound checks + sharpness sweeps."""

import sys

from fermicov.cli import main

if __name__ == "__main__":
    sys.exit(
        main(
            [
                "universal",
                "--count", "10000",
                "--epsilon-list", "0.1,0.01",
                "--seed", "606",
                "--out", "universal.csv",
            ]
        )
    )
