"""Energy bookkeeping of clock-driven measurements on spin chains."""

__version__ = "0.1.0"
