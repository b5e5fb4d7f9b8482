# src/functional/__init__.py
# Grid and dataset types shared by the estimation modules, plus CSV IO.
