"""
Splat Dataflow Lab - Tile vs Gaussian-wise 3DGS rendering
Instrumented rasterization pipelines with memory-traffic accounting
"""

__version__ = "1.0.0"
