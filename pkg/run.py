#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Care Facility Policy Simulator - command-line runner
    python run.py run --condition closed --seed 300
    python run.py suite --seeds 300,400,500,600
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from app.cli import main

if __name__ == "__main__":
    sys.exit(main())
