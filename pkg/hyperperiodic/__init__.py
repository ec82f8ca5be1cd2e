"""Time-periodic solutions of linear hyperbolic systems with reflection boundary conditions."""

__version__ = "1.0.0"
