#!/usr/bin/env python3
"""
Main entry point for the spectral hierarchy CLI

Usage:
    python main.py engineer --gaps 1,2 --levels 8 --out out
    python main.py polys --gamma 1/2 --pmax 12 --out polys.csv
    python main.py verify --alpha-sweep 8
    python main.py riccati --gaps 1,2,3 --ansatz pole_poly --order 7 --tol 1e-10

All arguments are passed through to spectral_cli.main.
"""

import sys
from pathlib import Path

# Add src directory to Python path for imports
src_path = Path(__file__).parent / 'src'
sys.path.insert(0, str(src_path))

if __name__ == '__main__':
    from spectral_cli import main

    main()
