"""Dynamic Uncertain Causality Graph inference: exact, recursive and sampling backends."""
