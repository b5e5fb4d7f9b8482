# src/common/__init__.py
# Shared infrastructure: logging, global CLI configuration and error types.
