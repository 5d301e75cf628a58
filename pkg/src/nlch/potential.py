"""Single-well logarithmic potential, its convex split, and its regularization.

The potential is

    F(r) = -h*log(1-r) - r^3/3 - h*(r^2/2 + r)   for r in [0,1),  +inf otherwise,

with h = 1 - phi_bar and F'(phi_bar) = 0.  It splits into a convex singular
part F1(r) = -h*log(1-r) and a smooth concave-ish part F2.  The regularized
version F_lambda replaces the singularity beyond 1-lambda by a quadratic and
penalizes r < 0 by a lambda-scaled cubic; F2 gets a C^2 quadratic
continuation beyond r = 1.

All evaluators are vectorized over numpy arrays.  Singular values are the
literal float +inf, never an overflow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

__all__ = [
    "PotentialParams",
    "eval_F",
    "eval_F1",
    "eval_F2",
    "eval_dF",
    "eval_ddF",
    "eval_F_lambda",
    "eval_dF_lambda",
    "eval_ddF_lambda",
    "eval_F1_lambda",
    "eval_dF1_lambda",
    "eval_ddF1_lambda",
    "eval_F2_bar",
    "eval_dF2_bar",
    "eval_ddF2_bar",
    "check_junctions",
    "verify_growth_bound",
    "quadratic_lower_bound",
    "JunctionReport",
    "BoundReport",
]

LAMBDA_BAR_DEFAULT = 0.5


@dataclass(frozen=True)
class PotentialParams:
    """Parameters of the single-well potential.

    phi_bar is the zero of F' in (0,1); h = 1 - phi_bar.  lam is the
    regularization parameter (0 means unregularized; the solver requires
    lam > 0).  c0 = 2 + h - 3*h**(1/3) is the positive constant bounding
    the curvature deficit: min F'' on [0,1) equals -c0.
    """

    phi_bar: float
    lam: float = 0.0
    lambda_bar: float = LAMBDA_BAR_DEFAULT

    h: float = field(init=False)
    c0: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.phi_bar < 1.0:
            raise ValueError(f"phi_bar must be in (0,1), got {self.phi_bar}")
        if not 0.0 <= self.lam <= self.lambda_bar:
            raise ValueError(
                f"lambda must be in [0, {self.lambda_bar}], got {self.lam}"
            )
        if not 0.0 < self.lambda_bar < 1.0:
            raise ValueError("lambda_bar must be in (0,1)")
        object.__setattr__(self, "h", 1.0 - self.phi_bar)
        object.__setattr__(self, "c0", 2.0 + self.h - 3.0 * self.h ** (1.0 / 3.0))

    def require_regularized(self):
        if self.lam <= 0.0:
            raise ValueError("operation requires lambda > 0")


# --- exact potential ------------------------------------------------------

def eval_F1(r, p: PotentialParams):
    """Convex singular part: -h*log(1-r) on [0,1), +inf otherwise."""
    r = np.asarray(r, dtype=float)
    out = np.full(r.shape, np.inf)
    inside = (r >= 0.0) & (r < 1.0)
    out[inside] = -p.h * np.log1p(-r[inside])
    return out if out.ndim else float(out)


def eval_F2(r, p: PotentialParams):
    """Smooth part: -r^3/3 - h*(r^2/2 + r) for r < 1, +inf otherwise."""
    r = np.asarray(r, dtype=float)
    out = np.full(r.shape, np.inf)
    inside = r < 1.0
    ri = r[inside]
    out[inside] = -ri**3 / 3.0 - p.h * (ri**2 / 2.0 + ri)
    return out if out.ndim else float(out)


def eval_F(r, p: PotentialParams):
    """Total potential F = F1 + F2; +inf outside [0,1)."""
    r = np.asarray(r, dtype=float)
    out = np.full(r.shape, np.inf)
    inside = (r >= 0.0) & (r < 1.0)
    ri = r[inside]
    out[inside] = (
        -p.h * np.log1p(-ri) - ri**3 / 3.0 - p.h * (ri**2 / 2.0 + ri)
    )
    return out if out.ndim else float(out)


def eval_dF(r, p: PotentialParams):
    """F'(r) = h/(1-r) - r^2 - h*(r+1) on [0,1)."""
    r = np.asarray(r, dtype=float)
    if np.any((r < 0.0) | (r >= 1.0)):
        raise ValueError("eval_dF: argument outside [0,1)")
    out = p.h / (1.0 - r) - r**2 - p.h * (r + 1.0)
    return out if out.ndim else float(out)


def eval_ddF(r, p: PotentialParams):
    """F''(r) = h/(1-r)^2 - 2r - h on [0,1)."""
    r = np.asarray(r, dtype=float)
    if np.any((r < 0.0) | (r >= 1.0)):
        raise ValueError("eval_ddF: argument outside [0,1)")
    out = p.h / (1.0 - r) ** 2 - 2.0 * r - p.h
    return out if out.ndim else float(out)


# --- regularized potential ------------------------------------------------
#
# F_lambda = F1_lambda + F2_bar with
#   F1_lambda(r) = -r^3/lam + (h/2) r^2 + h r                 for r < 0
#                = -h log(1-r)                                 for 0 <= r < 1-lam
#                = -h log(lam) + 3h/2 - (2h/lam)(1-r)
#                  + (h/(2 lam^2))(1-r)^2                      for r >= 1-lam
#   F2_bar(r)    = F2(r)                                       for r < 1
#                = -1/3 - 3h/2 + (-1-2h)(r-1) + ((-2-h)/2)(r-1)^2  for r >= 1

def _branches_F1_lambda(r, p):
    lam, h = p.lam, p.h
    neg = r < 0.0
    mid = (r >= 0.0) & (r < 1.0 - lam)
    top = r >= 1.0 - lam
    return neg, mid, top, lam, h


def eval_F1_lambda(r, p: PotentialParams):
    p.require_regularized()
    r = np.asarray(r, dtype=float)
    out = np.empty(r.shape)
    neg, mid, top, lam, h = _branches_F1_lambda(r, p)
    rn = r[neg]
    out[neg] = -rn**3 / lam + (h / 2.0) * rn**2 + h * rn
    out[mid] = -h * np.log1p(-r[mid])
    s = 1.0 - r[top]
    out[top] = -h * np.log(lam) + 1.5 * h - (2.0 * h / lam) * s + (h / (2.0 * lam**2)) * s**2
    return out if out.ndim else float(out)


def eval_dF1_lambda(r, p: PotentialParams):
    p.require_regularized()
    r = np.asarray(r, dtype=float)
    out = np.empty(r.shape)
    neg, mid, top, lam, h = _branches_F1_lambda(r, p)
    rn = r[neg]
    out[neg] = -3.0 * rn**2 / lam + h * rn + h
    out[mid] = h / (1.0 - r[mid])
    s = 1.0 - r[top]
    out[top] = 2.0 * h / lam - (h / lam**2) * s
    return out if out.ndim else float(out)


def eval_ddF1_lambda(r, p: PotentialParams):
    p.require_regularized()
    r = np.asarray(r, dtype=float)
    out = np.empty(r.shape)
    neg, mid, top, lam, h = _branches_F1_lambda(r, p)
    out[neg] = -6.0 * r[neg] / lam + h
    out[mid] = h / (1.0 - r[mid]) ** 2
    out[top] = h / lam**2
    return out if out.ndim else float(out)


def eval_F2_bar(r, p: PotentialParams):
    r = np.asarray(r, dtype=float)
    h = p.h
    out = np.empty(r.shape)
    lo = r < 1.0
    rl = r[lo]
    out[lo] = -rl**3 / 3.0 - h * (rl**2 / 2.0 + rl)
    s = r[~lo] - 1.0
    out[~lo] = -1.0 / 3.0 - 1.5 * h + (-1.0 - 2.0 * h) * s + 0.5 * (-2.0 - h) * s**2
    return out if out.ndim else float(out)


def eval_dF2_bar(r, p: PotentialParams):
    r = np.asarray(r, dtype=float)
    h = p.h
    out = np.empty(r.shape)
    lo = r < 1.0
    rl = r[lo]
    out[lo] = -rl**2 - h * (rl + 1.0)
    s = r[~lo] - 1.0
    out[~lo] = (-1.0 - 2.0 * h) + (-2.0 - h) * s
    return out if out.ndim else float(out)


def eval_ddF2_bar(r, p: PotentialParams):
    r = np.asarray(r, dtype=float)
    h = p.h
    out = np.empty(r.shape)
    lo = r < 1.0
    out[lo] = -2.0 * r[lo] - h
    out[~lo] = -2.0 - h
    return out if out.ndim else float(out)


def eval_F_lambda(r, p: PotentialParams):
    return eval_F1_lambda(r, p) + eval_F2_bar(r, p)


def eval_dF_lambda(r, p: PotentialParams):
    return eval_dF1_lambda(r, p) + eval_dF2_bar(r, p)


def eval_ddF_lambda(r, p: PotentialParams):
    return eval_ddF1_lambda(r, p) + eval_ddF2_bar(r, p)


# --- structural checks ----------------------------------------------------

@dataclass(frozen=True)
class JunctionReport:
    """Worst branch mismatches of the piecewise regularization."""

    at_zero: float          # F1_lambda value+slope mismatch at r = 0
    at_one_minus_lam: float  # F1_lambda value+slope mismatch at r = 1-lambda
    at_one: float           # F2_bar value+slope+curvature mismatch at r = 1

    @property
    def worst(self) -> float:
        return max(self.at_zero, self.at_one_minus_lam, self.at_one)


def check_junctions(p: PotentialParams) -> JunctionReport:
    """Compare branch formulas of F1_lambda and F2_bar at their junctions."""
    p.require_regularized()
    lam, h = p.lam, p.h

    # r = 0: cubic branch vs log branch (value and slope)
    v_left = 0.0
    v_right = -h * np.log1p(-0.0)
    d_left = h
    d_right = h / (1.0 - 0.0)
    at_zero = max(abs(v_left - v_right), abs(d_left - d_right))

    # r = 1-lambda: log branch vs quadratic continuation
    v_left = -h * np.log(lam)
    v_right = -h * np.log(lam) + 1.5 * h - (2.0 * h / lam) * lam + (h / (2.0 * lam**2)) * lam**2
    d_left = h / lam
    d_right = 2.0 * h / lam - (h / lam**2) * lam
    at_mid = max(abs(v_left - v_right), abs(d_left - d_right))

    # r = 1: F2 vs its quadratic continuation (value, slope, curvature)
    v_left = -1.0 / 3.0 - h * 1.5
    v_right = -1.0 / 3.0 - 1.5 * h
    d_left = -1.0 - h * 2.0
    d_right = -1.0 - 2.0 * h
    c_left = -2.0 - h
    c_right = -2.0 - h
    at_one = max(abs(v_left - v_right), abs(d_left - d_right), abs(c_left - c_right))

    return JunctionReport(at_zero=at_zero, at_one_minus_lam=at_mid, at_one=at_one)


@dataclass(frozen=True)
class BoundReport:
    """Result of a sampled inequality check."""

    violations: int
    worst_slack: float  # min over samples of (rhs - lhs); negative => violated
    C1: float
    C2: float


def verify_growth_bound(
    p: PotentialParams,
    eps: float,
    n_r: int = 400,
    n_r0: int = 25,
    R: float = 3.0,
) -> BoundReport:
    """Sampled check of |F_lambda'(r)| <= C1*F_lambda'(r)*(r-r0) + C2.

    C1 = 2/eps; C2 = max |F'| on [0, r_bar] with r_bar = max(phi_bar, 1-eps/2).
    Requires lambda small enough that [0, r_bar] sits inside the exact branch.
    """
    p.require_regularized()
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must be in (0, 1/2)")
    r_bar = max(p.phi_bar, 1.0 - eps / 2.0)
    if 1.0 - p.lam <= r_bar:
        raise ValueError("lambda too large for the requested eps")

    C1 = 2.0 / eps
    grid = np.linspace(0.0, r_bar, 20001)
    C2 = float(np.max(np.abs(eval_dF(grid, p))))

    rs = np.linspace(-R, R, n_r)
    r0s = np.linspace(eps, 1.0 - eps, n_r0)
    dF = eval_dF_lambda(rs, p)
    lhs = np.abs(dF)[:, None]
    rhs = C1 * dF[:, None] * (rs[:, None] - r0s[None, :]) + C2
    slack = rhs - lhs
    return BoundReport(
        violations=int(np.sum(slack < 0)),
        worst_slack=float(np.min(slack)),
        C1=C1,
        C2=C2,
    )


def quadratic_lower_bound(
    p: PotentialParams, a_star: float, a_sup: float, R: float = 50.0
) -> tuple[float, float]:
    """Find (eps_hat, c2) with F_lambda(r) >= ((a_sup-a_star)/2 + eps_hat) r^2 - c2.

    eps_hat is chosen as large as the leading quadratic coefficients of
    F_lambda allow; c2 = -min(F_lambda(r) - q r^2), located numerically.
    """
    p.require_regularized()
    q_max = p.h / (2.0 * p.lam**2) - (2.0 + p.h) / 2.0  # r -> +inf coefficient
    base = (a_sup - a_star) / 2.0
    if q_max <= base:
        raise ValueError("lambda too large: no admissible eps_hat")
    eps_hat = min(1.0, 0.5 * (q_max - base))
    q = base + eps_hat

    def g(r):
        return float(eval_F_lambda(r, p)) - q * r * r

    res = minimize_scalar(g, bounds=(-R, R), method="bounded",
                          options={"xatol": 1e-12})
    # bounded search can miss the global min if g dips near the edges;
    # refine with a coarse scan
    scan = np.linspace(-R, R, 20001)
    gmin = min(float(np.min(eval_F_lambda(scan, p) - q * scan**2)), res.fun)
    c2 = max(0.0, -gmin) + 1e-12
    return eps_hat, c2
