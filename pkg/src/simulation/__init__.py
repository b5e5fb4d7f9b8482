# src/simulation/__init__.py
# Functional predictor processes, path samplers and the point-of-impact
# response model.
