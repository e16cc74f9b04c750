"""Summary knowledge graphs from document-level IE output."""

__version__ = "0.1.0"
