"""Nth coefficient of algebraic power series over finite fields."""
__version__ = "0.1.0"
