"""Time integration of the coupled phase-field / nutrient system.

One step of the convex-splitting scheme:

  1. nutrient, decoupled and linear:
       (sig' - sig)/dt - lap sig' + B (sig' - sig_S) + C sig' h2(phi) = 0
  2. phase / chemical potential, Newton on the pointwise nonlinearity:
       (phi' - phi)/dt - lap mu' = S(phi, sig')
       mu' = tau (phi' - phi)/dt + a phi' + F1_lambda'(phi')
             - J*phi + F2_bar'(phi) - chi sig'

The convex singular part F1_lambda is implicit, the concave smooth part and
the non-local interaction are explicit, which makes the free energy
non-increasing when the mass source is off.  The same code path handles
tau = 0 (the implicit monotone term keeps the system invertible).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.fft import dct, idct
from scipy.sparse.linalg import spsolve

from . import diagnostics as diag
from .grid import Field, Grid
from .kernel import DiscreteKernel
from .model import ModelParams, eval_S
from .potential import (
    PotentialParams,
    eval_dF1_lambda,
    eval_dF2_bar,
    eval_ddF1_lambda,
)

__all__ = ["State", "SchemeConfig", "StepError", "step", "run", "RunResult",
           "SpectralSolver1D"]

MP_TOL = 1e-8          # max-principle monitor slack
RESIDUAL_FLAG = 1e-8   # residual monitor threshold


@dataclass
class State:
    t: float
    phi: Field
    mu: Field
    sigma: Field

    def copy(self) -> "State":
        return State(self.t, self.phi.copy(), self.mu.copy(), self.sigma.copy())


@dataclass
class SchemeConfig:
    dt: float
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    splitting: str = "convex-split"

    def __post_init__(self):
        if self.dt <= 0 or self.newton_tol <= 0:
            raise ValueError("dt and newton_tol must be positive")
        if self.splitting not in ("convex-split",):
            raise ValueError(f"unsupported splitting {self.splitting!r}")


class StepError(RuntimeError):
    """Newton divergence; carries the last residual max-norm."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class _Workspace:
    """Per-grid cached operators."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self.L = grid.laplacian_matrix()
        self.I = sp.identity(self.L.shape[0], format="csr")


def _sigma_update(
    s: State, p: ModelParams, ws: _Workspace, dt: float
) -> Field:
    grid = ws.grid
    sigma_S = p.sigma_S_field(grid)
    react = p.B + p.C * p.h2.eval1(s.phi)
    A = ws.I / dt - ws.L + sp.diags(react.ravel())
    rhs = (s.sigma / dt + p.B * sigma_S).ravel()
    return spsolve(A.tocsc(), rhs).reshape(grid.shape)


def _phi_update(
    s: State,
    sigma_new: Field,
    p: ModelParams,
    pot: PotentialParams,
    k: DiscreteKernel,
    ws: _Workspace,
    cfg: SchemeConfig,
    dt: float,
) -> tuple[Field, Field]:
    grid = ws.grid
    S_expl = eval_S(s.phi, sigma_new, p)
    mu_expl = (
        -k.convolve_fft(s.phi) + eval_dF2_bar(s.phi, pot) - p.chi * sigma_new
    )
    a = k.a_field

    phi = s.phi.copy()
    res_scale = max(1.0, grid.norm_Linf(S_expl) + grid.norm_Linf(s.phi) / dt)
    last_res = np.inf
    for _ in range(cfg.newton_max_iter):
        mu_impl = p.tau * (phi - s.phi) / dt + a * phi + eval_dF1_lambda(phi, pot)
        mu = mu_impl + mu_expl
        G = (phi - s.phi) / dt - grid.laplacian(mu) - S_expl
        last_res = grid.norm_Linf(G)
        if not np.isfinite(last_res):
            raise StepError("Newton iterate diverged (non-finite residual)",
                            last_res)

        D = p.tau / dt + a + eval_ddF1_lambda(phi, pot)
        J = ws.I / dt - ws.L @ sp.diags(D.ravel())
        delta = spsolve(J.tocsc(), -G.ravel()).reshape(grid.shape)
        phi = phi + delta
        if (grid.norm_Linf(delta) < cfg.newton_tol
                and last_res < 100.0 * cfg.newton_tol * res_scale):
            mu_impl = (p.tau * (phi - s.phi) / dt + a * phi
                       + eval_dF1_lambda(phi, pot))
            return phi, mu_impl + mu_expl
    raise StepError(
        f"Newton did not converge in {cfg.newton_max_iter} iterations "
        f"(residual {last_res:g})",
        last_res,
    )


def step(
    s: State,
    p: ModelParams,
    pot: PotentialParams,
    k: DiscreteKernel,
    cfg: SchemeConfig,
    ws: Optional[_Workspace] = None,
    dt: Optional[float] = None,
) -> State:
    """One accepted time step; raises StepError on Newton failure."""
    pot.require_regularized()
    if ws is None:
        ws = _Workspace(k.grid)
    if dt is None:
        dt = cfg.dt
    sigma_new = _sigma_update(s, p, ws, dt)
    phi_new, mu_new = _phi_update(s, sigma_new, p, pot, k, ws, cfg, dt)
    return State(s.t + dt, phi_new, mu_new, sigma_new)


def _step_adaptive(s, p, pot, k, cfg, ws, dt, depth=0) -> State:
    """Step with automatic dt halving on Newton failure (depth <= 10)."""
    try:
        return step(s, p, pot, k, cfg, ws, dt)
    except StepError:
        if depth >= 10:
            raise
        mid = _step_adaptive(s, p, pot, k, cfg, ws, dt / 2.0, depth + 1)
        return _step_adaptive(mid, p, pot, k, cfg, ws, dt / 2.0, depth + 1)


@dataclass
class RunResult:
    """Trajectory, per-step diagnostics, and run-level summaries."""

    grid: Grid
    times: np.ndarray
    phi_traj: np.ndarray     # shape (nsteps+1, *grid.shape)
    sigma_traj: np.ndarray
    mu_traj: np.ndarray
    records: list = dc_field(default_factory=list)
    R_inf: float = 0.0       # sup over the run of |mu + chi sigma + J*phi|
    separation_delta: float = 0.0
    M_tau_empirical: float = 0.0
    aborted: Optional[str] = None

    @property
    def final(self) -> State:
        return State(
            float(self.times[-1]), self.phi_traj[-1], self.mu_traj[-1],
            self.sigma_traj[-1],
        )

    @property
    def flags(self) -> list:
        out = []
        for rec in self.records:
            for f in rec.flags:
                if f not in out:
                    out.append(f)
        return out

    def l2q_norm(self, traj: np.ndarray) -> float:
        """L^2(Omega x (0,T)) norm of a stored trajectory (trapezoid in t)."""
        sq = np.array([self.grid.inner(u, u) for u in traj])
        return float(np.sqrt(max(np.trapezoid(sq, self.times), 0.0)))


def run(
    grid: Grid,
    k: DiscreteKernel,
    pot: PotentialParams,
    p: ModelParams,
    cfg: SchemeConfig,
    phi0: Field,
    sigma0: Field,
    T: float,
) -> RunResult:
    """Integrate from t=0 to T with per-step diagnostics."""
    ws = _Workspace(grid)
    n_steps = int(round(T / cfg.dt)) if T > 0 else 0

    y0 = grid.mean(phi0)
    K = p.h1.sup

    mu0 = (
        k.a_field * phi0 + eval_dF1_lambda(phi0, pot)
        - k.convolve_fft(phi0) + eval_dF2_bar(phi0, pot)
        - p.chi * sigma0
    )
    s = State(0.0, phi0.copy(), mu0, sigma0.copy())

    shape = (n_steps + 1,) + grid.shape
    phi_traj = np.empty(shape)
    sigma_traj = np.empty(shape)
    mu_traj = np.empty(shape)
    phi_traj[0], sigma_traj[0], mu_traj[0] = s.phi, s.sigma, s.mu

    result = RunResult(
        grid=grid,
        times=np.arange(n_steps + 1) * cfg.dt,
        phi_traj=phi_traj,
        sigma_traj=sigma_traj,
        mu_traj=mu_traj,
    )

    def make_record(prev: Optional[State], cur: State) -> diag.DiagnosticsRecord:
        if p.m > 0:
            lo, hi = diag.mean_envelope(cur.t, y0, p.m, K)
        else:
            lo, hi = -np.inf, np.inf
        if prev is not None:
            Jval, M_emp = diag.lyapunov_J(prev, cur, cfg.dt, p, grid)
            r_phi, r_sig, r_mu = diag.weak_residuals(prev, cur, cfg.dt, p, k, pot)
            result.M_tau_empirical = max(result.M_tau_empirical, M_emp)
        else:
            Jval, r_phi, r_sig, r_mu = 0.0, 0.0, 0.0, 0.0
        rec = diag.DiagnosticsRecord(
            t=cur.t,
            mean_phi=grid.mean(cur.phi),
            mean_lo=lo,
            mean_hi=hi,
            min_phi=float(np.min(cur.phi)),
            max_phi=float(np.max(cur.phi)),
            min_sigma=float(np.min(cur.sigma)),
            max_sigma=float(np.max(cur.sigma)),
            energy=diag.energy(cur.phi, k, pot),
            J_functional=Jval,
            residual_phi_eq=r_phi,
            residual_sigma_eq=r_sig,
            residual_mu_eq=r_mu,
        )
        slack = 5.0 * cfg.dt
        if p.m > 0 and not (lo - slack <= rec.mean_phi <= hi + slack):
            rec.flags.append("mean-envelope")
        if rec.min_phi < -MP_TOL or rec.max_phi > 1.0 - pot.lam / 2.0 + MP_TOL:
            rec.flags.append("phi-range")
        if rec.min_sigma < -MP_TOL or rec.max_sigma > 1.0 + MP_TOL:
            rec.flags.append("sigma-range")
        if prev is not None and max(r_phi, r_sig, r_mu) > RESIDUAL_FLAG:
            rec.flags.append("residual")
        return rec

    def track_Rinf(cur: State):
        bound = grid.norm_Linf(
            cur.mu + p.chi * cur.sigma + k.convolve_fft(cur.phi)
        )
        result.R_inf = max(result.R_inf, bound)

    result.records.append(make_record(None, s))
    track_Rinf(s)

    for i in range(1, n_steps + 1):
        try:
            s_new = _step_adaptive(s, p, pot, k, cfg, ws, cfg.dt)
        except StepError as exc:
            result.aborted = str(exc)
            result.times = result.times[:i]
            result.phi_traj = phi_traj[:i]
            result.sigma_traj = sigma_traj[:i]
            result.mu_traj = mu_traj[:i]
            return result
        if not (np.all(np.isfinite(s_new.phi)) and np.all(np.isfinite(s_new.sigma))):
            result.aborted = "non-finite state"
            result.times = result.times[:i]
            result.phi_traj = phi_traj[:i]
            result.sigma_traj = sigma_traj[:i]
            result.mu_traj = mu_traj[:i]
            return result
        phi_traj[i], sigma_traj[i], mu_traj[i] = s_new.phi, s_new.sigma, s_new.mu
        result.records.append(make_record(s, s_new))
        track_Rinf(s_new)
        s = s_new

    result.separation_delta = diag.separation_delta(result.R_inf, pot)
    return result


# --- 1-D cosine-Galerkin cross-check -------------------------------------

class SpectralSolver1D:
    """Same time splitting in the first n Neumann cosine modes (1-D only).

    Nonlinear terms are evaluated on the grid and projected back with the
    orthogonal cosine projection; the Laplacian uses the continuum
    eigenvalues (k pi / L)^2.  Used as a cross-check of the finite
    difference path, not for production runs.
    """

    def __init__(self, grid: Grid, n_modes: int):
        if grid.dim != 1:
            raise ValueError("spectral cross-check is 1-D only")
        if not 1 <= n_modes <= grid.cells[0]:
            raise ValueError("need 1 <= n_modes <= cells")
        self.grid = grid
        self.n = n_modes
        L = grid.lengths[0]
        self.eigs = (np.arange(n_modes) * np.pi / L) ** 2

    # orthonormal DCT coefficients of the first n modes
    def coeffs(self, u: Field) -> np.ndarray:
        return dct(u, type=2, norm="ortho")[: self.n]

    def to_field(self, c: np.ndarray) -> Field:
        full = np.zeros(self.grid.cells[0])
        full[: self.n] = c
        return idct(full, type=2, norm="ortho")

    def project(self, u: Field) -> Field:
        return self.to_field(self.coeffs(u))

    def _proj_matrix(self, pointwise: Field) -> np.ndarray:
        """Matrix of c -> coeffs(pointwise * to_field(c))."""
        n = self.n
        M = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = 1.0
            M[:, j] = self.coeffs(pointwise * self.to_field(e))
        return M

    def step(
        self,
        s: State,
        p: ModelParams,
        pot: PotentialParams,
        k: DiscreteKernel,
        cfg: SchemeConfig,
    ) -> State:
        grid, n, dt = self.grid, self.n, cfg.dt
        lam = self.eigs

        # nutrient: linear solve in coefficient space
        sigma_S = p.sigma_S_field(grid)
        h2n = p.h2.eval1(s.phi)
        A = np.diag(1.0 / dt + lam + p.B) + p.C * self._proj_matrix(h2n)
        rhs = self.coeffs(s.sigma) / dt + p.B * self.coeffs(sigma_S)
        sig_c = np.linalg.solve(A, rhs)
        sigma_new = self.to_field(sig_c)

        # phase: Newton on the projected system
        S_expl = self.project(eval_S(s.phi, sigma_new, p))
        mu_expl = self.project(
            -k.convolve_fft(s.phi) + eval_dF2_bar(s.phi, pot)
            - p.chi * sigma_new
        )
        a = k.a_field
        phin_c = self.coeffs(s.phi)
        c = phin_c.copy()
        for _ in range(cfg.newton_max_iter):
            phi = self.to_field(c)
            mu = self.project(
                p.tau * (phi - s.phi) / dt + a * phi
                + eval_dF1_lambda(phi, pot)
            ) + mu_expl
            G = (c - phin_c) / dt + lam * self.coeffs(mu) - self.coeffs(S_expl)
            D = p.tau / dt + a + eval_ddF1_lambda(phi, pot)
            Jmat = np.diag(1.0 / dt * np.ones(n)) + lam[:, None] * self._proj_matrix(D)
            delta = np.linalg.solve(Jmat, -G)
            c = c + delta
            if np.max(np.abs(delta)) < cfg.newton_tol:
                break
        else:
            raise StepError("spectral Newton did not converge",
                            float(np.max(np.abs(G))))
        phi_new = self.to_field(c)
        mu_new = self.project(
            p.tau * (phi_new - s.phi) / dt + a * phi_new
            + eval_dF1_lambda(phi_new, pot)
        ) + mu_expl
        return State(s.t + dt, phi_new, mu_new, sigma_new)
