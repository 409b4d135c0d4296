"""Channel generation."""
