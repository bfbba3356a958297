"""Pool-based active learning for privacy-policy segment classification."""

__version__ = "0.1.0"
