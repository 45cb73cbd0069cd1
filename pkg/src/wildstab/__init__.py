"""Log discrepancies under tame, wild and inseparable base change in characteristic p."""

from .series import Ring, Scalar, Series, NotAPthPower, parse_series

__all__ = ["Ring", "Scalar", "Series", "NotAPthPower", "parse_series"]
__version__ = "0.1.0"
