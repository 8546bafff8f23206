"""Figure regeneration for hiermc result CSVs."""

__version__ = "0.1.0"
