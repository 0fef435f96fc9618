"""Hall-Littlewood random plane partitions: exact combinatorics, Glauber sampler, Fredholm numerics."""

__version__ = "0.1.0"
