# src/kernel/__init__.py
