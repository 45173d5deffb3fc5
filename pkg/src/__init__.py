"""Counting and entropy library behind the axial-entropy command."""
