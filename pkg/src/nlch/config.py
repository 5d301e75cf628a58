"""Run configuration: TOML schema, parsing, and assembly of solver inputs.

A config file has the sections grid, kernel, potential, model, scheme,
initial, and output.  See ``example_config()`` for a full annotated
default that passes strict validation.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .grid import Field, Grid
from .kernel import DiscreteKernel, KernelSpec, build_kernel
from .model import ModelParams, SourceSpec
from .potential import PotentialParams
from .solver import SchemeConfig

__all__ = ["RunConfig", "ConfigError", "load_config", "example_config"]


class ConfigError(ValueError):
    pass


def _require(table: dict, key: str, section: str):
    if key not in table:
        raise ConfigError(f"missing key {key!r} in [{section}]")
    return table[key]


@dataclass
class InitialSpec:
    """Built-in initial-condition families.

    constant:            value
    smoothed-step:       lo + (hi-lo)/2 * (1 + tanh((x-center)/width))
    bump:                base + (peak-base) * exp(-((x-center)/width)^2)
    perturbed-constant:  value + amplitude-scaled random low-mode cosine
                         series (resolution-independent, seeded)
    file:                CSV produced by the snapshot writer (1-D)
    """

    kind: str
    params: dict

    def build(self, grid: Grid) -> Field:
        x = grid.coords()[0]
        kind, q = self.kind, self.params
        if kind == "constant":
            return grid.new_field(float(q["value"]))
        if kind == "smoothed-step":
            lo, hi = float(q["lo"]), float(q["hi"])
            center = float(q.get("center", grid.lengths[0] / 2.0))
            width = float(q.get("width", 0.1 * grid.lengths[0]))
            return lo + (hi - lo) * 0.5 * (1.0 + np.tanh((x - center) / width))
        if kind == "bump":
            base, peak = float(q["base"]), float(q["peak"])
            center = float(q.get("center", grid.lengths[0] / 2.0))
            width = float(q.get("width", 0.1 * grid.lengths[0]))
            return base + (peak - base) * np.exp(-(((x - center) / width) ** 2))
        if kind == "perturbed-constant":
            value = float(q["value"])
            amp = float(q.get("amplitude", 0.0))
            seed = q.get("seed")
            if amp != 0.0 and seed is None:
                raise ConfigError("perturbed-constant requires a seed")
            n_modes = int(q.get("modes", 8))
            rng = np.random.default_rng(int(seed) if seed is not None else 0)
            field = grid.new_field(value)
            L = grid.lengths[0]
            coeffs = rng.standard_normal(n_modes)
            coeffs /= max(np.sum(np.abs(coeffs)), 1e-30)
            for j, c in enumerate(coeffs, start=1):
                field = field + amp * c * np.cos(j * np.pi * x / L)
            if grid.dim == 2:
                y = grid.coords()[1]
                coeffs2 = rng.standard_normal(n_modes)
                coeffs2 /= max(np.sum(np.abs(coeffs2)), 1e-30)
                Ly = grid.lengths[1]
                for j, c in enumerate(coeffs2, start=1):
                    field = field + amp * c * np.cos(j * np.pi * y / Ly)
            return field
        if kind == "file":
            data = np.loadtxt(q["path"], delimiter=",", skiprows=1)
            vals = data[:, 1]
            grid.check_field(vals)
            return vals
        raise ConfigError(f"unknown initial-condition kind {self.kind!r}")


@dataclass
class RunConfig:
    grid: Grid
    kernel_spec: KernelSpec
    potential: PotentialParams
    model: ModelParams
    scheme: SchemeConfig
    T: float
    phi0_spec: InitialSpec
    sigma0_spec: InitialSpec
    snapshot_every: int = 0
    out_dir: Optional[Path] = None

    _kernel: Optional[DiscreteKernel] = None

    def kernel(self) -> DiscreteKernel:
        if self._kernel is None:
            self._kernel = build_kernel(self.kernel_spec, self.grid)
        return self._kernel

    def phi0(self) -> Field:
        return self.phi0_spec.build(self.grid)

    def sigma0(self) -> Field:
        return self.sigma0_spec.build(self.grid)

    def replace(self, **kw) -> "RunConfig":
        """Copy with some solver parameters overridden (tau, chi, lam, dt, T)."""
        import dataclasses

        cfg = dataclasses.replace(self, _kernel=self._kernel)
        if "lam" in kw:
            cfg.potential = PotentialParams(
                phi_bar=cfg.potential.phi_bar, lam=kw.pop("lam"),
                lambda_bar=cfg.potential.lambda_bar,
            )
        if "tau" in kw or "chi" in kw:
            m = cfg.model
            cfg.model = ModelParams(
                tau=kw.pop("tau", m.tau), chi=kw.pop("chi", m.chi),
                B=m.B, C=m.C, m=m.m, h1=m.h1, h2=m.h2,
                sigma_S=m.sigma_S, strict_mode=m.strict_mode,
            )
        if "dt" in kw:
            s = cfg.scheme
            cfg.scheme = SchemeConfig(
                dt=kw.pop("dt"), newton_tol=s.newton_tol,
                newton_max_iter=s.newton_max_iter, splitting=s.splitting,
            )
        if "T" in kw:
            cfg.T = kw.pop("T")
        if kw:
            raise TypeError(f"unknown overrides: {sorted(kw)}")
        return cfg


def _source_spec(table, section) -> SourceSpec:
    if not isinstance(table, dict):
        raise ConfigError(f"[{section}] must be a table with a 'family' key")
    family = _require(table, "family", section)
    return SourceSpec(family=family, value=float(table.get("value", 0.0)))


def _initial_spec(table, section) -> InitialSpec:
    if not isinstance(table, dict):
        raise ConfigError(f"[{section}] must be a table with a 'kind' key")
    kind = _require(table, "kind", section)
    return InitialSpec(kind=kind, params={k: v for k, v in table.items() if k != "kind"})


def parse_config(data: dict) -> RunConfig:
    try:
        g = data["grid"]
        grid = Grid(lengths=tuple(_require(g, "lengths", "grid")),
                    cells=tuple(_require(g, "cells", "grid")))

        kt = data["kernel"]
        kspec = KernelSpec(
            family=_require(kt, "family", "kernel"),
            width=float(_require(kt, "width", "kernel")),
            amplitude=float(kt.get("amplitude", 1.0)),
            cutoff_radius=float(kt.get("cutoff", 0.0)),
            normalize=kt.get("normalize", "none"),
        )

        pt = data["potential"]
        pot = PotentialParams(
            phi_bar=float(_require(pt, "phi_bar", "potential")),
            lam=float(pt.get("lambda", 1e-3)),
            lambda_bar=float(pt.get("lambda_bar", 0.5)),
        )

        mt = data["model"]
        model = ModelParams(
            tau=float(_require(mt, "tau", "model")),
            chi=float(_require(mt, "chi", "model")),
            B=float(mt.get("B", 0.0)),
            C=float(mt.get("C", 0.0)),
            m=float(_require(mt, "m", "model")),
            h1=_source_spec(_require(mt, "h1", "model"), "model.h1"),
            h2=_source_spec(_require(mt, "h2", "model"), "model.h2"),
            sigma_S=float(mt.get("sigma_s", 0.0)),
            strict_mode=bool(mt.get("strict", True)),
        )

        st = data["scheme"]
        scheme = SchemeConfig(
            dt=float(_require(st, "dt", "scheme")),
            newton_tol=float(st.get("newton_tol", 1e-10)),
            newton_max_iter=int(st.get("newton_max_iter", 50)),
        )
        T = float(_require(st, "T", "scheme"))

        it = data["initial"]
        phi0 = _initial_spec(_require(it, "phi", "initial"), "initial.phi")
        sigma0 = _initial_spec(_require(it, "sigma", "initial"), "initial.sigma")

        out = data.get("output", {})
        snapshot_every = int(out.get("snapshot_every", 0))
    except KeyError as exc:
        raise ConfigError(f"missing section [{exc.args[0]}]") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc

    return RunConfig(
        grid=grid, kernel_spec=kspec, potential=pot, model=model,
        scheme=scheme, T=T, phi0_spec=phi0, sigma0_spec=sigma0,
        snapshot_every=snapshot_every,
    )


def load_config(path) -> RunConfig:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data)


EXAMPLE_TOML = """\
# Default strict-mode configuration (1-D, unit interval).

[grid]
lengths = [1.0]
cells = [256]

[kernel]
family = "gaussian"
width = 0.06
amplitude = 1.0
cutoff = 0.25
normalize = "interior-one"   # interior a(x) equals the amplitude

[potential]
phi_bar = 0.6                # critical point of the potential; h = 0.4
lambda = 1e-3                # regularization; must stay positive

[model]
tau = 0.05                   # viscous relaxation
chi = 0.2                    # chemotactic sensitivity
B = 1.0                      # nutrient supply rate
C = 1.0                      # nutrient consumption rate
m = 1.0                      # mass-source decay rate
sigma_s = 0.8                # constant supply concentration, in [0,1]
strict = true
h1 = { family = "constant", value = 0.5 }
h2 = { family = "constant", value = 1.0 }

[scheme]
dt = 1e-3
T = 1.0
newton_tol = 1e-10
newton_max_iter = 50

[initial]
phi = { kind = "perturbed-constant", value = 0.5, amplitude = 0.03, seed = 7 }
sigma = { kind = "constant", value = 0.8 }

[output]
snapshot_every = 0           # 0 disables field snapshots
"""


def example_config() -> RunConfig:
    """The shipped default configuration (passes strict validation)."""
    return parse_config(tomllib.loads(EXAMPLE_TOML))
