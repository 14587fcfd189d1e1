import sys
from pathlib import Path

# frozen_values, published_ratios and oracles live beside the tests
sys.path.insert(0, str(Path(__file__).resolve().parent))
