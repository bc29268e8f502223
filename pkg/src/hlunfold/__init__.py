"""Complete finite prefixes of symbolic unfoldings of safe high-level Petri nets."""

__version__ = "0.1.0"
