"""Empirical verifiers for the signed-sum lower bounds, plus baseline heuristics."""
from .balancing import beta_estimate, greedy_balance
from .hajela import hajela_threshold, hajela_thresholds, verify_hajela
from .random_points import (
    LpScalingReport,
    banaszczyk_lower,
    cor34_threshold,
    gluskin_milman_bound,
    normalize_volume_to_ball,
    rescale_to_volume,
    verify_cor34,
    verify_gluskin_milman,
    verify_lp_scaling,
    verify_thm15_ball,
    verify_thm16_body,
)
from .rotation import verify_rotation_general

__all__ = [
    "LpScalingReport",
    "banaszczyk_lower",
    "beta_estimate",
    "cor34_threshold",
    "gluskin_milman_bound",
    "greedy_balance",
    "hajela_threshold",
    "hajela_thresholds",
    "normalize_volume_to_ball",
    "rescale_to_volume",
    "verify_cor34",
    "verify_gluskin_milman",
    "verify_hajela",
    "verify_lp_scaling",
    "verify_rotation_general",
    "verify_thm15_ball",
    "verify_thm16_body",
]
