"""Co-authorship network centralities and citation percentile modeling."""

__version__ = "0.1.0"
