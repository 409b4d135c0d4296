"""Data models for channels, designs and experiments."""
