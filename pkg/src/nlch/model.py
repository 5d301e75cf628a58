"""Model parameters, source terms, and assumption validation.

The mass source has the generalized Cahn--Hilliard--Oono form
S(phi, sigma) = -m*phi + h1(phi, sigma) with bounded non-negative h1 whose
sup K stays below m.  The nutrient reaction uses a bounded continuous h2
and a supply field sigma_S with values in [0,1].  ``validate`` checks the
structural assumptions plus the quasi-static smallness condition
chi < min(sqrt(c0/2), 1) required for tau = 0 runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional, Union

import numpy as np

from .grid import Field, Grid
from .kernel import DiscreteKernel
from .potential import PotentialParams

__all__ = ["SourceSpec", "ModelParams", "eval_S", "validate", "ValidationReport"]

H1_FAMILIES = ("zero", "constant", "smooth-saturating")
H2_FAMILIES = ("zero", "constant", "saturating")


@dataclass(frozen=True)
class SourceSpec:
    """Closed-form source family with known bounds.

    h1 families (proliferation):
      zero:              h1 = 0                    (K = 0)
      constant:          h1 = value                (K = value; Oono form)
      smooth-saturating: h1 = K*s/(1+s), s = max(phi*sigma, 0)
                         (0 <= h1 < K, Lipschitz on bounded boxes)
    h2 families (consumption): zero, constant, saturating
      saturating:        h2 = value*s/(1+s), s = max(r, 0)
    """

    family: str
    value: float = 0.0

    def __post_init__(self):
        if self.family not in set(H1_FAMILIES) | set(H2_FAMILIES):
            raise ValueError(f"unknown source family {self.family!r}")

    # -- h1-style evaluation: two arguments --------------------------------
    def eval2(self, phi, sigma):
        if self.family == "zero":
            return np.zeros_like(np.asarray(phi, dtype=float))
        if self.family == "constant":
            return np.full_like(np.asarray(phi, dtype=float), self.value)
        s = np.maximum(np.asarray(phi, dtype=float) * np.asarray(sigma, dtype=float), 0.0)
        return self.value * s / (1.0 + s)

    # -- h2-style evaluation: one argument ---------------------------------
    def eval1(self, r):
        r = np.asarray(r, dtype=float)
        if self.family == "zero":
            return np.zeros_like(r)
        if self.family == "constant":
            return np.full_like(r, self.value)
        s = np.maximum(r, 0.0)
        return self.value * s / (1.0 + s)

    @property
    def sup(self) -> float:
        """Closed-form supremum of |h| over all arguments."""
        return 0.0 if self.family == "zero" else abs(self.value)

    @property
    def nonneg(self) -> bool:
        return self.family == "zero" or self.value >= 0.0

    def lipschitz_constant(self, box: float = 1.0) -> float:
        """Lipschitz constant in each argument on [0, box]^2 (h1 families)."""
        if self.family in ("zero", "constant"):
            return 0.0
        # |d/dphi K s/(1+s)| = K*sigma/(1+s)^2 <= K*box on the box
        return abs(self.value) * box


@dataclass
class ModelParams:
    """Physical parameters of the coupled system."""

    tau: float
    chi: float
    B: float
    C: float
    m: float
    h1: SourceSpec
    h2: SourceSpec
    sigma_S: Union[float, Field]
    strict_mode: bool = True

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must be in [0,1]")
        if self.B < 0 or self.C < 0:
            raise ValueError("B and C must be non-negative")

    def sigma_S_field(self, grid: Grid) -> Field:
        if np.isscalar(self.sigma_S):
            return grid.new_field(float(self.sigma_S))
        f = np.asarray(self.sigma_S, dtype=float)
        grid.check_field(f)
        return f


def eval_S(phi: Field, sigma: Field, p: ModelParams) -> Field:
    """Mass source S = -m*phi + h1(phi, sigma)."""
    phi = np.asarray(phi, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if phi.shape != sigma.shape:
        raise ValueError("phi and sigma shapes differ")
    return -p.m * phi + p.h1.eval2(phi, sigma)


@dataclass
class ValidationReport:
    """Per-assumption pass/fail with offending quantities."""

    checks: dict = dc_field(default_factory=dict)  # name -> (ok, detail)

    def record(self, name: str, ok: bool, detail: str):
        self.checks[name] = (bool(ok), detail)

    @property
    def ok(self) -> bool:
        return all(ok for ok, _ in self.checks.values())

    @property
    def failures(self) -> list[str]:
        return [n for n, (ok, _) in self.checks.items() if not ok]

    def summary(self) -> str:
        lines = []
        for name, (ok, detail) in self.checks.items():
            lines.append(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        return "\n".join(lines)


def validate(
    p: ModelParams,
    pot: PotentialParams,
    kernel: Optional[DiscreteKernel] = None,
    grid: Optional[Grid] = None,
) -> ValidationReport:
    """Check the structural assumptions; strict failures are fatal upstream."""
    rep = ValidationReport()

    K = p.h1.sup
    ok = p.h1.nonneg and (p.m > 0) and (K < p.m)
    rep.record(
        "A1 proliferation bound",
        ok,
        f"K={K:g}, m={p.m:g}, K-m={K - p.m:g}, h1>=0: {p.h1.nonneg}",
    )

    rep.record(
        "A2 consumption bounded",
        np.isfinite(p.h2.sup),
        f"sup|h2|={p.h2.sup:g}, h2>=0: {p.h2.nonneg}",
    )

    if np.isscalar(p.sigma_S):
        lo = hi = float(p.sigma_S)
    else:
        lo, hi = float(np.min(p.sigma_S)), float(np.max(p.sigma_S))
    rep.record(
        "A3 supply range",
        0.0 <= lo and hi <= 1.0,
        f"sigma_S in [{lo:g}, {hi:g}]",
    )

    if kernel is not None:
        rep.record(
            "A5 kernel mass",
            kernel.a_star >= pot.c0,
            f"a_star={kernel.a_star:g}, c0={pot.c0:g}",
        )

    if p.tau == 0.0:
        chi_max = min(np.sqrt(pot.c0 / 2.0), 1.0)
        rep.record(
            "quasi-static smallness",
            p.chi < chi_max,
            f"chi={p.chi:g}, bound={chi_max:g}",
        )

    return rep
