# src/experiment/__init__.py
# Monte Carlo harness: simulate, estimate, match, score.
