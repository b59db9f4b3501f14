"""dforge: pseudo-data generation, multi-task pre-training, and evaluation for disfluency detection."""

__version__ = "0.1.0"
