"""confmeta: conference-metadata extraction, curation, and batch compilation."""

__version__ = "0.1.0"
