"""Numerical laboratory for Cheeger-deformed metrics on S^3, S^7, Sp(2) and its quotients."""
from . import cheeger, curvature, geodesics, models, quaternion, serialize, star
from .cheeger import MetricSpec
from .errors import GeolabError
from .models import ManifoldPoint, TangentVector
from .quaternion import Quaternion

__all__ = [
    "GeolabError",
    "ManifoldPoint",
    "MetricSpec",
    "Quaternion",
    "TangentVector",
    "cheeger",
    "curvature",
    "geodesics",
    "models",
    "quaternion",
    "serialize",
    "star",
]
__version__ = "0.1.0"
