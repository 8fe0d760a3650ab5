"""Setup-free asynchronous BFT building blocks over a deterministic simulated network."""

__version__ = "0.1.0"
