"""A posteriori bounds on the optimum of edge selection problems.

All primal bounds live in the log domain (tree-connectivity), so they stay
finite for graphs whose tree count overflows a float.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

__all__ = [
    "ZETA",
    "ZETA_MATROID",
    "Certificate",
    "DesignReport",
    "InconsistentBounds",
    "esp_bounds",
    "dual_bounds",
    "wolsey_gamma",
    "assess_design",
]

ZETA = 1.0 / (1.0 - 1.0 / math.e)
# partition-matroid greedy is only a 1/2-approximation
ZETA_MATROID = 2.0

ORDER_TOL = 1e-6
# ceil() slack for relaxation sums that sit a hair above an integer
CEIL_SLACK = 1e-6


class InconsistentBounds(ArithmeticError):
    """Lower bound above upper bound; one of the inputs came from a failed solve."""


@dataclass(frozen=True)
class Certificate:
    lower: float
    upper: float
    design_value: float
    additive_gap: float
    ratio_bound: float | None
    sources: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DesignReport:
    design_value: float
    upper: float
    gap: float
    ratio: float | None


def _ratio(num: float, den: float) -> float | None:
    return num / den if den > 0 else None


def esp_bounds(
    tau_init: float,
    tau_greedy: float,
    tau_cvx_rounded: float | None,
    tau_star_cvx: float | None,
    zeta: float = ZETA,
    tol: float = ORDER_TOL,
    cvx_source: str = "relaxation",
) -> Certificate:
    """Bracket the best achievable tree-connectivity.

    The lower bound is the better of the two designs; the upper bound is the
    tighter of the greedy guarantee ``zeta*tau_greedy + (1-zeta)*tau_init``
    and the relaxation optimum ``tau_star_cvx``.  Either convex input may be
    ``None`` when only the greedy run is available.
    """
    if tau_greedy < tau_init - tol:
        raise InconsistentBounds(f"tau_greedy={tau_greedy} below tau_init={tau_init}")
    lowers = {"greedy": tau_greedy}
    if tau_cvx_rounded is not None:
        lowers["cvx_rounded"] = tau_cvx_rounded
    uppers = {"greedy_guarantee": zeta * tau_greedy + (1.0 - zeta) * tau_init}
    if tau_star_cvx is not None:
        if tau_star_cvx < max(lowers.values()) - tol:
            raise InconsistentBounds(
                f"relaxation value {tau_star_cvx} below a feasible design {max(lowers.values())}"
            )
        uppers[cvx_source] = tau_star_cvx
    lo_src = max(lowers, key=lowers.get)
    up_src = min(uppers, key=uppers.get)
    lower, upper = lowers[lo_src], uppers[up_src]
    return Certificate(
        lower=lower,
        upper=upper,
        design_value=lower,
        additive_gap=upper - lower,
        ratio_bound=_ratio(upper, lower),
        sources={"lower": lo_src, "upper": up_src},
    )


def dual_bounds(
    k_greedy: int, k_cvx: int | None, sum_pi_star: float | None, gamma: float
) -> Certificate:
    """Integer bracket on the fewest edges reaching the target gain."""
    if gamma < 1.0:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    lowers = {"greedy_guarantee": math.ceil(k_greedy / gamma - CEIL_SLACK)}
    uppers = {"greedy": k_greedy}
    if sum_pi_star is not None:
        lowers["relaxation"] = math.ceil(sum_pi_star - CEIL_SLACK)
    if k_cvx is not None:
        uppers["cvx_rounded"] = k_cvx
    lo_src = max(lowers, key=lowers.get)
    up_src = min(uppers, key=uppers.get)
    lower, upper = lowers[lo_src], uppers[up_src]
    if lower > upper:
        raise InconsistentBounds(f"dual lower bound {lower} exceeds upper bound {upper}")
    return Certificate(
        lower=lower,
        upper=upper,
        design_value=upper,
        additive_gap=upper - lower,
        ratio_bound=_ratio(upper, lower),
        sources={"lower": lo_src, "upper": up_src},
    )


def wolsey_gamma(delta: float, phi_pre_terminal: float) -> float:
    """``1 + log(delta / (delta - phi))`` for the set one step before the greedy stopped."""
    if not 0.0 <= phi_pre_terminal < delta:
        raise ValueError(f"need 0 <= phi_pre_terminal < delta, got {phi_pre_terminal}, {delta}")
    return 1.0 + math.log(delta / (delta - phi_pre_terminal))


def assess_design(design_tau: float, cert: Certificate) -> DesignReport:
    """Worst-case distance of a design from the optimum, given a certificate."""
    return DesignReport(
        design_value=design_tau,
        upper=cert.upper,
        gap=cert.upper - design_tau,
        ratio=_ratio(cert.upper, design_tau),
    )
