"""aind-embedding-selector: two-stage evolutionary feature selection over deep embedding vectors."""
__version__ = "0.1.0"
