"""twinflip: exact quasi-flip computations on finite twin buildings."""

__version__ = "0.1.0"
