# src/glm/__init__.py
# Quasi-likelihood GLM fitting on impact-point values and BIC selection.
