"""Random walk in random environment: simulation and inference."""
