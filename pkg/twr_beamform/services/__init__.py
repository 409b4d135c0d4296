"""Link-level simulation and evaluation services."""
