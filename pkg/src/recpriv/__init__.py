"""Rate-distortion-equivocation tradeoffs for lossy source coding with reconstruction privacy."""

__version__ = "0.1.0"
