"""FDR-controlled feature selection via single and multiple data splitting."""

__version__ = "0.1.0"
