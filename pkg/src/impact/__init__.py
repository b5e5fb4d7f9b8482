# src/impact/__init__.py
# Model-free point-of-impact detector.
