"""Golden fixtures for the published result tables."""
