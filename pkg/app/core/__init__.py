"""Core cross-cutting components: configuration and the exception hierarchy."""
