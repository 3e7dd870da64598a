"""Airspace- and ground-risk aware contingency landing planning."""

from landingrisk.geodesy import GeoPoint, GeoState

__version__ = "0.1.0"

__all__ = ["GeoPoint", "GeoState", "__version__"]
