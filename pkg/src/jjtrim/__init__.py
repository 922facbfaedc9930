"""jjtrim: junction resistance trimming simulation and planning toolkit."""

__version__ = "0.1.0"
