"""Result records shared by the verifiers."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any

# Monte Carlo allowance, in binomial standard deviations.
SIGMAS = 3.0


class PreconditionError(ValueError):
    """A theorem's hypothesis does not hold for the supplied inputs."""


@dataclass(frozen=True)
class ConstantsTable:
    """Absolute constants left unvalued in the statements, pinned from the proofs."""

    c_hajela: float = 0.25
    c_gm_threshold: float = 0.1
    c_dilate: float = 20.0
    c_banaszczyk: float = 0.1

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


DEFAULT_CONSTANTS = ConstantsTable()


@dataclass
class TheoremVerdict:
    """Outcome of one experiment.

    ``passed`` is ``empirical <= bound + slack``, except under the zero-failure
    contract (bound below Monte Carlo resolution), where it means no failing
    trial was observed.
    """

    theorem_id: str
    bound: float
    empirical: float
    threshold_used: float
    trials: int
    inner_samples: int
    passed: bool
    notes: str = ""
    slack: float = 0.0
    failures: int = 0
    zero_failure: bool = False
    params: dict[str, Any] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def binomial_sigma(p: float, trials: int) -> float:
    if trials <= 0:
        return math.inf
    p = min(max(p, 0.0), 1.0)
    return math.sqrt(p * (1.0 - p) / trials)


def resolution_floor(trials: int) -> float:
    """Smallest probability Monte Carlo with ``trials`` draws is trusted to see."""
    return 10.0 / trials if trials > 0 else math.inf


def failure_verdict(
    theorem_id: str,
    *,
    bound: float,
    failures: int,
    trials: int,
    threshold: float,
    inner_samples: int = 0,
    notes: str = "",
    params: dict | None = None,
    extra: dict | None = None,
    extra_slack: float = 0.0,
) -> TheoremVerdict:
    """Compare an observed failure count against a probability bound.

    Bounds below ``10 / trials`` are not statistically testable; those runs
    pass only with zero observed failures.  ``extra_slack`` carries Monte
    Carlo uncertainty of the bound itself.
    """
    empirical = failures / trials if trials else 0.0
    notes_list = [notes] if notes else []
    if bound < resolution_floor(trials):
        passed = failures == 0
        slack = 0.0
        zero = True
        notes_list.append("bound below resolution: zero-failure contract")
    else:
        slack = SIGMAS * binomial_sigma(bound, trials) + extra_slack
        passed = empirical <= bound + slack
        zero = False
    return TheoremVerdict(
        theorem_id=theorem_id,
        bound=bound,
        empirical=empirical,
        threshold_used=threshold,
        trials=trials,
        inner_samples=inner_samples,
        passed=bool(passed),
        notes="; ".join(notes_list),
        slack=slack,
        failures=int(failures),
        zero_failure=zero,
        params=dict(params or {}),
        extra=dict(extra or {}),
    )
