"""Departure-delay prediction from airport surface traffic, weather, and
schedule history: ingest, trajectory processing, feature extraction, four
regressor families, and a model x data-source evaluation grid."""

__version__ = "0.1.0"
