"""Multi-generator adversarial networks with mode separation."""

__version__ = "0.3.0"
