"""Exact and approximate counts of smooth and semismooth integers."""
