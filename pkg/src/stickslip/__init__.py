"""Stick-slip relay feedback simulation toolkit."""
