"""Closed-form success probability, trash-gate angle, bounds and optimizers.

Angles are radians.  ``xi`` is the target gate angle, ``alpha`` the resource
angle of ``cos(alpha)|00> + sin(alpha)|11>``, and ``s`` stands for
``sin(alpha)**2`` wherever a function is parameterized the way the sweep
plots are.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

from .errors import ValidationError

QUARTER_PI = math.pi / 4
HALF_PI = math.pi / 2
# alpha given within this much above pi/4 (typed-in decimals, sin^2 = 0.5 grids)
# is taken to be pi/4
ALPHA_SNAP = 1e-6
# xi closer than this to pi/4 makes the optimal-alpha formula meaningless
SINGULAR_XI = 1e-6
FORM_AGREEMENT_TOL = 1e-12


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha <= 0:
        raise ValidationError(f"alpha must be positive, got {alpha!r}")
    if alpha > QUARTER_PI:
        if alpha - QUARTER_PI > ALPHA_SNAP:
            raise ValidationError(f"alpha must be <= pi/4, got {alpha!r}")
        alpha = QUARTER_PI
    return alpha


def check_xi(xi: float, upper: float = HALF_PI) -> float:
    xi = float(xi)
    if not math.isfinite(xi) or xi <= 0:
        raise ValidationError(f"xi must be positive, got {xi!r}")
    if xi >= upper:
        raise ValidationError(f"xi must be < {upper!r}, got {xi!r}")
    return xi


def alpha_from_s(s: float) -> float:
    """Resource angle with ``sin(alpha)**2 == s``; ``s`` must lie in (0, 1/2]."""
    s = float(s)
    if not math.isfinite(s) or s <= 0 or s > 0.5 + ALPHA_SNAP:
        raise ValidationError(f"sin^2(alpha) must lie in (0, 0.5], got {s!r}")
    return check_alpha(math.asin(math.sqrt(min(s, 0.5))))


def theta_angle(xi: float, alpha: float) -> float:
    """Angle of Alice's ``exp(i theta X)`` on the stator qubit."""
    xi, alpha = check_xi(xi), check_alpha(alpha)
    return math.atan(math.tan(xi) / math.tan(alpha))


def success_probability_from_theta(xi: float, alpha: float) -> float:
    """Weight of the ``|0_a>`` component after the rotation, via theta."""
    theta = theta_angle(xi, alpha)
    return (math.cos(alpha) * math.cos(theta)) ** 2 + (math.sin(alpha) * math.sin(theta)) ** 2


def _p_direct(xi: float, s: float) -> float:
    # s / (1 - (1-2s)/(1-s) cos^2 xi), with the denominator rewritten as
    # sin^2 xi + cos^2 xi * s/(1-s) so small xi and s do not cancel
    return s / (math.sin(xi) ** 2 + math.cos(xi) ** 2 * s / (1.0 - s))


def success_probability(xi: float, alpha: float) -> float:
    xi, alpha = check_xi(xi), check_alpha(alpha)
    p = _p_direct(xi, math.sin(alpha) ** 2)
    p_theta = success_probability_from_theta(xi, alpha)
    if abs(p - p_theta) > FORM_AGREEMENT_TOL:
        raise ArithmeticError(
            f"closed forms disagree at xi={xi!r}, alpha={alpha!r}: {p!r} vs {p_theta!r}")
    return p


def success_probability_s(xi: float, s: float) -> float:
    return success_probability(xi, alpha_from_s(s))


def trash_angle(xi: float, alpha: float) -> float:
    """Angle of the gate left behind on the failure branch.

    Evaluated as ``atan2(cos(a) sin(t), sin(a) cos(t))``, which is the
    arccos form ``acos(sin(a) cos(t) / sqrt(1-p))`` without its loss of
    precision near zero.  At alpha = pi/4 it returns xi.
    """
    theta = theta_angle(xi, alpha)
    alpha = check_alpha(alpha)
    return math.atan2(math.cos(alpha) * math.sin(theta), math.sin(alpha) * math.cos(theta))


def trash_angle_arccos(xi: float, alpha: float) -> float:
    theta = theta_angle(xi, alpha)
    alpha = check_alpha(alpha)
    p = success_probability(xi, alpha)
    return math.acos(min(1.0, math.sin(alpha) * math.cos(theta) / math.sqrt(1.0 - p)))


def xi_from_theta(xi: float, alpha: float) -> float:
    """Recover the success-branch angle from theta and p (arccos form)."""
    theta = theta_angle(xi, alpha)
    alpha = check_alpha(alpha)
    p = success_probability(xi, alpha)
    return math.acos(min(1.0, math.cos(alpha) * math.cos(theta) / math.sqrt(p)))


BINDING = "binding"
VACUOUS = "vacuous"


def majorization_bound(xi: float, alpha: float) -> tuple[float, str]:
    """Upper bound on the success probability from the majorization condition.

    Only informative for ``alpha < xi``; otherwise ``(1.0, "vacuous")``.
    """
    xi, alpha = check_xi(xi), check_alpha(alpha)
    if alpha < xi:
        return math.sin(alpha) ** 2 / math.sin(xi) ** 2, BINDING
    return 1.0, VACUOUS


def procrustean_probability(alpha: float) -> float:
    """Single-copy Procrustean distillation probability, ``2 sin^2(alpha)``."""
    alpha = check_alpha(alpha)
    if alpha == QUARTER_PI:
        return 1.0
    return min(1.0, 2.0 * math.sin(alpha) ** 2)


def _check_distribution(x: Sequence[float], name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0 or not np.all(np.isfinite(x)):
        raise ValidationError(f"{name} must be a nonempty 1-d vector of finite numbers")
    if np.any(x < -1e-12):
        raise ValidationError(f"{name} has negative entries")
    if abs(x.sum() - 1.0) > 1e-10:
        raise ValidationError(f"{name} must sum to 1, got {x.sum()!r}")
    if np.any(np.diff(x) > 1e-12):
        raise ValidationError(f"{name} must be sorted in descending order")
    return x


def _pad(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = max(x.size, y.size)
    return np.pad(x, (0, n - x.size)), np.pad(y, (0, n - y.size))


def majorizes(x: Sequence[float], y: Sequence[float]) -> bool:
    """True when every partial sum of ``x`` is at least that of ``y``."""
    x, y = _pad(_check_distribution(x, "x"), _check_distribution(y, "y"))
    return bool(np.all(np.cumsum(x) >= np.cumsum(y) - 1e-12))


def vidal_conversion_probability(source: Sequence[float], target: Sequence[float]) -> float:
    """Optimal LOCC probability of turning one pure state into another.

    ``min_l E_l(source) / E_l(target)`` over the tail sums ``E_l``, capped at 1.
    """
    x, y = _pad(_check_distribution(source, "source"), _check_distribution(target, "target"))
    tails_x = np.cumsum(x[::-1])[::-1]
    tails_y = np.cumsum(y[::-1])[::-1]
    best = 1.0
    for ex, ey in zip(tails_x[1:], tails_y[1:]):
        if ey > 1e-15:
            best = min(best, max(ex, 0.0) / ey)
    return float(best)


def alpha_opt_paper(xi: float) -> float | None:
    """``(sin^2 xi + sin(2 xi)/2) / cos(2 xi)`` as a value of sin^2(alpha).

    Returns ``None`` within ``SINGULAR_XI`` of pi/4 and clamps at 1.  This is
    not the maximizer of :func:`success_probability`; see
    :func:`maximize_success` for that.
    """
    xi = check_xi(xi, upper=QUARTER_PI + SINGULAR_XI)
    if abs(xi - QUARTER_PI) < SINGULAR_XI:
        return None
    value = (math.sin(xi) ** 2 + 0.5 * math.sin(2 * xi)) / math.cos(2 * xi)
    return min(value, 1.0)


def _p_of_s(xi: float, s: float) -> float:
    # p as a rational function of s = sin^2(alpha); no domain checks, for optimizers
    return s * (1.0 - s) / (math.sin(xi) ** 2 + s * math.cos(2 * xi))


def _dp_numerator(xi: float, s: float) -> float:
    a, c = math.sin(xi) ** 2, math.cos(2 * xi)
    return (1.0 - 2.0 * s) * (a + c * s) - c * s * (1.0 - s)


SCAN_POINTS = 1000


def maximize_success(xi: float) -> tuple[float, float]:
    """Numerically maximize the success probability over ``s`` in (0, 1/2].

    A coarse scan checks unimodality and brackets the peak, golden-section
    search narrows the bracket, and the stationary point is then polished by
    root-finding on the derivative (golden-section alone stalls around
    1e-8 in ``s`` because the peak is flat).  Returns ``(s_opt, p_max)``.
    """
    xi = check_xi(xi, upper=QUARTER_PI + SINGULAR_XI)
    grid = np.linspace(0.5 / SCAN_POINTS, 0.5, SCAN_POINTS)
    values = np.array([_p_of_s(xi, s) for s in grid])
    k = int(np.argmax(values))
    lo = grid[k - 1] if k > 0 else 1e-300
    hi = grid[min(k + 1, grid.size - 1)]

    steps = np.sign(np.diff(values))
    unimodal = bool(np.all(steps[:k] >= 0) and np.all(steps[k:] <= 0))
    if unimodal and 0 < k < grid.size - 1:
        res = optimize.minimize_scalar(lambda s: -_p_of_s(xi, s), bracket=(lo, grid[k], hi),
                                       method="golden", options={"xtol": 1e-12})
        s_golden = float(res.x)
        lo, hi = max(lo, s_golden - 1e-7), min(hi, s_golden + 1e-7)
    if _dp_numerator(xi, lo) > 0 > _dp_numerator(xi, hi):
        s_opt = optimize.brentq(lambda s: _dp_numerator(xi, s), lo, hi, xtol=1e-15, rtol=1e-15)
    else:
        # peak on the scan boundary (xi >= pi/4 puts it at s = 1/2)
        s_opt = grid[k]
    return float(s_opt), _p_of_s(xi, s_opt)


def alpha_crossing(xi: float) -> float:
    """sin^2(alpha) where the direct and Procrustean probabilities meet."""
    xi = check_xi(xi, upper=QUARTER_PI + SINGULAR_XI)
    c2 = math.cos(xi) ** 2
    return max(0.0, (2 * c2 - 1) / (4 * c2 - 1))


def alpha_opt_procrustean(xi: float) -> float:
    """sin^2(alpha) at which Procrustean distillation reaches the direct p_max."""
    return maximize_success(xi)[1] / 2.0


def linear_regimes(xi: float, s: float) -> tuple[float, float]:
    """``(s / sin^2 xi, 1 - s)``: the small-alpha and small-xi approximations."""
    xi = check_xi(xi)
    alpha_from_s(s)
    return s / math.sin(xi) ** 2, 1.0 - s


@dataclass(frozen=True)
class FormulaReport:
    xi: float
    alpha: float
    theta: float
    p: float
    xi_tilde: float
    bound_pmax: float
    bound_flag: str
    p_procrustean: float
    entropy_alpha: float
    gate_reducible: bool

    @property
    def sin2_alpha(self) -> float:
        return math.sin(self.alpha) ** 2


def formula_report(xi: float, alpha: float) -> FormulaReport:
    from .qsim import binary_entropy

    xi, alpha = check_xi(xi), check_alpha(alpha)
    bound, flag = majorization_bound(xi, alpha)
    return FormulaReport(
        xi=xi,
        alpha=alpha,
        theta=theta_angle(xi, alpha),
        p=success_probability(xi, alpha),
        xi_tilde=trash_angle(xi, alpha),
        bound_pmax=bound,
        bound_flag=flag,
        p_procrustean=procrustean_probability(alpha),
        entropy_alpha=binary_entropy(math.sin(alpha) ** 2),
        gate_reducible=xi > QUARTER_PI,
    )


@dataclass(frozen=True)
class OptimalityReport:
    xi: float
    s_opt_paper: float | None
    s_opt_numeric: float
    p_max_numeric: float
    p_max_paper_claim: float
    s_crossing: float
    s_opt_proc: float
    discrepancy_flag: bool

    @property
    def singular(self) -> bool:
        return self.s_opt_paper is None


def optimality_report(xi: float) -> OptimalityReport:
    """Optimal resource entanglement for one gate angle.

    ``s_opt_paper`` is the literal published formula and ``p_max_paper_claim``
    the published small-xi estimate ``1 - xi``; both are carried for
    comparison only.  The numeric maximizer drives ``s_opt_proc``.
    """
    xi = check_xi(xi, upper=QUARTER_PI + SINGULAR_XI)
    s_paper = alpha_opt_paper(xi)
    s_num, p_num = maximize_success(xi)
    flag = s_paper is None or abs(s_paper - s_num) > 1e-6 * max(s_num, 1e-300)
    return OptimalityReport(
        xi=xi,
        s_opt_paper=s_paper,
        s_opt_numeric=s_num,
        p_max_numeric=p_num,
        p_max_paper_claim=1.0 - xi,
        s_crossing=alpha_crossing(xi),
        s_opt_proc=p_num / 2.0,
        discrepancy_flag=bool(flag),
    )
