"""One-inclusion hypergraph learners, their suffix aggregates, and desk-scale checks of their risk bounds."""

__version__ = "0.1.0"
