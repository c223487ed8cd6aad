#!/usr/bin/env python3
"""
Splat Dataflow Lab - command-line entry point

Usage:
    python splatflow.py gen-scene --n 2000 --out scene.ply --cameras-out cams.json
    python splatflow.py render --pipeline gcc --model scene.ply --cameras cams.json --out gcc.ppm
    python splatflow.py compare --model scene.ply --cameras cams.json --matched
"""

import sys

from app.cli import main

if __name__ == "__main__":
    sys.exit(main())
