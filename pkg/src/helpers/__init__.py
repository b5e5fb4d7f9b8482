# src/helpers/__init__.py
# Serialization helpers: JSON/YAML conversion and run fingerprints.
