"""Numerical laboratory for norms of signed sums of vectors.

Random-rotation lower bounds over restricted sign sets, Gaussian small-ball
machinery, the calibration parameter t_{D,delta}, and small-ball bounds for
random points from convex bodies.
"""
from .geometry import (
    LinearImage,
    LpBall,
    Scaled,
    SignVector,
    lp_ball_volume,
    min_sign_norm,
    minkowski_norm,
    parse_body,
    signed_sum,
    volume,
    vrad,
)
from .randsrc import RandomStream
from .verdict import ConstantsTable, PreconditionError, TheoremVerdict

__version__ = "0.1.0"

__all__ = [
    "ConstantsTable",
    "LinearImage",
    "LpBall",
    "PreconditionError",
    "RandomStream",
    "Scaled",
    "SignVector",
    "TheoremVerdict",
    "lp_ball_volume",
    "min_sign_norm",
    "minkowski_norm",
    "parse_body",
    "signed_sum",
    "volume",
    "vrad",
]
