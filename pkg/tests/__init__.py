"""cadet test suite."""
