"""Scalar functionals and monitors computed alongside a run.

Includes the non-local free energy, the mean-confinement envelope and its
guaranteed margin delta, the Lyapunov-style functional built from the
chemical potential, and the max-norm residuals of the discrete scheme
identities.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import brentq

from .grid import Field, Grid
from .kernel import DiscreteKernel
from .model import ModelParams, eval_S
from .potential import (
    PotentialParams,
    eval_dF,
    eval_dF1_lambda,
    eval_dF2_bar,
    eval_F,
    eval_F_lambda,
)

__all__ = [
    "DiagnosticsRecord",
    "energy",
    "mean_envelope",
    "delta_for_mean",
    "lyapunov_J",
    "weak_residuals",
    "separation_delta",
    "CSV_COLUMNS",
]

CSV_COLUMNS = (
    "t,mean_phi,mean_lo,mean_hi,min_phi,max_phi,min_sigma,max_sigma,"
    "energy,J,r_phi,r_sigma,r_mu,flags"
)


@dataclass
class DiagnosticsRecord:
    """One row of per-step monitors."""

    t: float
    mean_phi: float
    mean_lo: float
    mean_hi: float
    min_phi: float
    max_phi: float
    min_sigma: float
    max_sigma: float
    energy: float
    J_functional: float
    residual_phi_eq: float
    residual_sigma_eq: float
    residual_mu_eq: float
    flags: list = dc_field(default_factory=list)

    def csv_row(self) -> str:
        vals = [
            self.t, self.mean_phi, self.mean_lo, self.mean_hi,
            self.min_phi, self.max_phi, self.min_sigma, self.max_sigma,
            self.energy, self.J_functional,
            self.residual_phi_eq, self.residual_sigma_eq, self.residual_mu_eq,
        ]
        return ",".join(f"{v:.17g}" for v in vals) + "," + "|".join(self.flags)


def energy(phi: Field, k: DiscreteKernel, pot: PotentialParams) -> float:
    """Non-local free energy.

    The pairwise double sum (1/4) sum_xy J(x-y)|phi(x)-phi(y)|^2 vol^2 is
    evaluated via the identity  = (1/2)<a phi, phi> - (1/2)<J*phi, phi>,
    which the FFT convolution makes O(N log N).  Uses the regularized
    potential when lambda > 0; with lambda = 0 a value outside [0,1)
    yields the +inf sentinel.
    """
    grid = k.grid
    conv = k.convolve_fft(phi)
    nonlocal_term = 0.5 * grid.inner(k.a_field * phi, phi) - 0.5 * grid.inner(conv, phi)
    if pot.lam > 0.0:
        fvals = eval_F_lambda(phi, pot)
    else:
        fvals = eval_F(phi, pot)
        if np.any(np.isinf(fvals)):
            return np.inf
    return nonlocal_term + float(np.sum(fvals)) * grid.cell_volume


def energy_pairwise(phi: Field, k: DiscreteKernel, pot: PotentialParams) -> float:
    """O(N^2) double-sum reference for the non-local part (oracle use)."""
    grid = k.grid
    flat = phi.ravel()
    # pairwise J matrix via direct convolution columns would be O(N^3);
    # instead place the stencil explicitly
    n = flat.size
    if grid.dim == 1:
        x = grid.axes()[0]
        pts = x[:, None]
    else:
        X, Y = grid.coords()
        pts = np.column_stack([X.ravel(), Y.ravel()])
    diffs = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    J = k.spec.profile(diffs)
    # apply the same scaling as the stencil (amplitude + normalization)
    center = tuple(s // 2 for s in k.stencil.shape)
    scale = k.stencil[center]  # profile(0) == 1 for all families
    J = J * scale
    vol = grid.cell_volume
    quad = 0.25 * np.sum(J * (flat[:, None] - flat[None, :]) ** 2) * vol * vol
    fvals = eval_F_lambda(phi, pot) if pot.lam > 0 else eval_F(phi, pot)
    return float(quad) + float(np.sum(fvals)) * vol


def mean_envelope(t: float, y0: float, m: float, K: float) -> tuple[float, float]:
    """Two-sided bound on the spatial average: decay floor and supply ceiling."""
    if m <= 0 or K < 0 or not 0.0 < y0 < 1.0:
        raise ValueError("need m > 0, K >= 0, y0 in (0,1)")
    decay = np.exp(-m * t)
    return y0 * decay, y0 * decay + (1.0 - decay) * K / m


def delta_for_mean(y0: float, m: float, K: float, T: float) -> float:
    """Margin keeping the mean inside [delta, 1-delta] on [0, T]."""
    if K >= m:
        raise ValueError("requires K < m")
    if not 0.0 < y0 < 1.0:
        raise ValueError("y0 must be in (0,1)")
    return min(0.25, y0 * np.exp(-m * T), 1.0 - max(K / m, y0))


def lyapunov_J(
    s_prev, s, dt: float, p: ModelParams, grid: Grid
) -> tuple[float, float]:
    """Lyapunov functional of consecutive states and its coercivity ratio.

    J = (1/2)|grad mu|^2 - <S(phi,sigma), mu> + (tau/2)|dphi/dt|^2.
    The second return value is the empirical constant M with
    M*(J+1) >= |grad mu|^2 + |dphi/dt|^2 for this state pair.
    """
    dphi = (s.phi - s_prev.phi) / dt
    grad_mu_sq = grid.grad_sq_integral(s.mu)
    dphi_sq = grid.inner(dphi, dphi)
    Jval = (
        0.5 * grad_mu_sq
        - grid.inner(eval_S(s.phi, s.sigma, p), s.mu)
        + 0.5 * p.tau * dphi_sq
    )
    M_emp = (grad_mu_sq + dphi_sq) / (Jval + 1.0) if Jval + 1.0 > 0 else np.inf
    return Jval, M_emp


def weak_residuals(
    s_prev,
    s,
    dt: float,
    p: ModelParams,
    k: DiscreteKernel,
    pot: PotentialParams,
) -> tuple[float, float, float]:
    """Max-norm residuals of the three discrete scheme identities.

    These are the strong-form residuals of the time-discrete system the
    solver targets (sigma decoupled first, convex part of the potential
    implicit), so a converged step keeps all three at solver tolerance.
    """
    grid = k.grid
    sigma_S = p.sigma_S_field(grid)

    r_sig = (
        (s.sigma - s_prev.sigma) / dt
        - grid.laplacian(s.sigma)
        + p.B * (s.sigma - sigma_S)
        + p.C * s.sigma * p.h2.eval1(s_prev.phi)
    )

    S = eval_S(s_prev.phi, s.sigma, p)
    r_phi = (s.phi - s_prev.phi) / dt - grid.laplacian(s.mu) - S

    mu_pred = (
        p.tau * (s.phi - s_prev.phi) / dt
        + k.a_field * s.phi
        + eval_dF1_lambda(s.phi, pot)
        - k.convolve_fft(s_prev.phi)
        + eval_dF2_bar(s_prev.phi, pot)
        - p.chi * s.sigma
    )
    r_mu = s.mu - mu_pred

    return (
        grid.norm_Linf(r_phi),
        grid.norm_Linf(r_sig),
        grid.norm_Linf(r_mu),
    )


def separation_delta(R_inf: float, pot: PotentialParams) -> float:
    """A-posteriori separation margin from the sign condition.

    Returns the largest delta in (0, 1) such that F'(r) >= R_inf for all
    r in (1-delta, 1); R_inf is the run's sup of |mu + chi*sigma + J*phi|.
    F' is increasing near 1 and diverges, so the threshold is the largest
    root of F'(r) = R_inf in [phi_bar, 1).
    """
    R_inf = max(R_inf, 0.0)

    def g(r):
        return float(eval_dF(r, pot)) - R_inf

    hi = 1.0 - 1e-13
    if g(hi) <= 0:  # F' never reaches R_inf numerically
        return 1e-13
    # locate the largest r with F'(r) < R_inf (F' need not be monotone
    # below phi_bar, so take the last sign change on a dense scan)
    rs = np.linspace(0.0, hi, 200001)
    below = np.nonzero(eval_dF(rs, pot) < R_inf)[0]
    if below.size == 0:
        return 1.0 - 1e-13  # F' >= R_inf everywhere on [0,1)
    i = below[-1]
    r_star = brentq(g, rs[i], hi, xtol=1e-14)
    return 1.0 - r_star
