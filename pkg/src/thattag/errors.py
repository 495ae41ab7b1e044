class ThattagError(Exception):
    """Base class for every error this package raises on purpose."""
