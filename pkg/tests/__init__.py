"""tacloc test suite."""
