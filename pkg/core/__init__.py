# Hyper-process modelling: zero-shot generation of regression models
__version__ = "1.0.0"
