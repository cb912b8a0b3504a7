"""Channel-aware holographic decision fusion: channel synthesis, joint
fusion-rule / metasurface design, and Monte Carlo detection evaluation."""

__version__ = "0.1.0"
