#!/usr/bin/env python3
"""Rebuild the demo bundle in this directory (deterministic byte-for-byte)."""

import os

from batontrack.corpus import build_demo

if __name__ == "__main__":
    here = os.path.dirname(os.path.abspath(__file__))
    build_demo(here)
    print(f"demo bundle written to {here}")
