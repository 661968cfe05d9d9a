"""Progressive retrieval-and-reasoning engine for multi-hop question
answering over knowledge graphs."""

__version__ = "0.1.0"
