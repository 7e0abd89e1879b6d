"""Design graphs with many spanning trees: greedy and convex edge selection with certificates."""

__version__ = "0.1.0"
