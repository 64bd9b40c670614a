"""Repositories for reading PhysioNet databases from disk."""
