"""Thermalization-time sweeps, exponential fits and figure data."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

from .evolution import (
    DT_MAX,
    EvolutionPlan,
    epsilon_at,
    evolve,
    ground_band_projector,
)
from .exceptions import NoDecayError
from .hamiltonians import (
    LatticeSpec,
    Preconditioner,
    Schedule,
    build_h0,
    build_heisenberg_xz,
)
from .io import UNITS_NOTE, dumps_json
from .optimize import APPROACHES, OptimizeResult, OptimizeSpec, select_preconditioner
from .spectral import BandSelector, gap_profile, resolve_sector, _sector_arg

FIT_FLOOR = 1e-12
FIT_CEILING = 0.5


def geometric_taus(tau_min: float = 1.0, tau_max: float = 300.0, points: int = 30) -> tuple[float, ...]:
    if not 0 < tau_min < tau_max or points < 2:
        raise ValueError("need 0 < tau_min < tau_max and at least two points")
    return tuple(float(t) for t in np.geomspace(tau_min, tau_max, points))


@dataclass(frozen=True)
class SweepConfig:
    model: LatticeSpec = field(default_factory=LatticeSpec)
    schedule: Schedule = field(default_factory=Schedule)
    approaches: tuple[str, ...] = APPROACHES
    tau_grid: tuple[float, ...] = field(default_factory=geometric_taus)
    band: BandSelector = field(default_factory=lambda: BandSelector(k=1, sector="auto"))
    stepper: str = "trotter2"
    dt: float = DT_MAX
    dt_max: float = DT_MAX
    search: OptimizeSpec = field(default_factory=OptimizeSpec)
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        taus = tuple(float(t) for t in self.tau_grid)
        if not taus or any(t <= 0 or not math.isfinite(t) for t in taus):
            raise ValueError("tau_grid entries must be finite and positive")
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValueError("tau_grid must be strictly increasing")
        object.__setattr__(self, "tau_grid", taus)
        bad = [a for a in self.approaches if a not in APPROACHES]
        if bad or not self.approaches:
            raise ValueError(f"approaches must be a non-empty subset of {APPROACHES}, got {self.approaches}")
        object.__setattr__(self, "approaches", tuple(self.approaches))
        if not 0 < self.dt <= self.dt_max:
            raise ValueError(f"dt must lie in (0, dt_max={self.dt_max}], got {self.dt}")


class SweepRow(NamedTuple):
    approach: str
    ratio: float
    tau: float
    epsilon_at: float
    n_steps: int
    dt: float


@dataclass(frozen=True)
class PreparedApproach:
    """Everything fixed before the tau loop for one approach."""

    approach: str
    preconditioner: Preconditioner
    optimization: OptimizeResult
    band: BandSelector
    initial_basis: np.ndarray = field(repr=False)
    target: object = field(repr=False)


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    prepared: dict

    def points(self, approach: str):
        sel = [r for r in self.rows if r.approach == approach]
        return np.array([r.tau for r in sel]), np.array([r.epsilon_at for r in sel])


def prepare(h1, approach: str, schedule: Schedule, band: BandSelector,
            search: OptimizeSpec | None = None, n_jobs: int = 1) -> PreparedApproach:
    """Pick the preconditioner for ``approach`` and build both band projectors."""
    spec = replace(search or OptimizeSpec(), approach=approach)
    m, result = select_preconditioner(h1, approach, schedule, band, spec, n_jobs=n_jobs)
    h0 = build_h0(h1, m)
    sector = resolve_sector(_sector_arg(band), h0, h1)
    resolved = replace(band, sector=sector)
    p0 = ground_band_projector(h0, resolved)
    p1 = ground_band_projector(h1, resolved)
    return PreparedApproach(approach, m, result, resolved, p0.basis, p1)


def prepare_approach(cfg: SweepConfig, approach: str) -> PreparedApproach:
    return prepare(build_heisenberg_xz(cfg.model), approach, cfg.schedule, cfg.band,
                   cfg.search, cfg.n_jobs)


def _epsilon_for_tau(h0, h1, f, prepared: PreparedApproach, tau, dt, stepper, dt_max):
    plan = EvolutionPlan.from_dt(tau, dt, stepper, dt_max)
    out = evolve(h0, h1, f, plan, prepared.initial_basis)
    return epsilon_at(prepared.target, out), plan.n_steps, plan.dt


def sweep_tau(cfg: SweepConfig) -> SweepResult:
    """Optimize each approach, then record ``eps_AT`` over the tau grid."""
    h1 = build_heisenberg_xz(cfg.model)
    taus = sorted(cfg.tau_grid)
    rows = []
    prepared = {}
    order = sorted(cfg.approaches, key=APPROACHES.index)
    for approach in order:
        prep = prepare_approach(cfg, approach)
        prepared[approach] = prep
        h0 = build_h0(h1, prep.preconditioner)
        args = (h0, h1, cfg.schedule, prep)
        if cfg.n_jobs == 1:
            values = [_epsilon_for_tau(*args, t, cfg.dt, cfg.stepper, cfg.dt_max) for t in taus]
        else:
            from joblib import Parallel, delayed

            values = Parallel(n_jobs=cfg.n_jobs)(
                delayed(_epsilon_for_tau)(*args, t, cfg.dt, cfg.stepper, cfg.dt_max) for t in taus
            )
        for tau, (eps, n_steps, dt) in zip(taus, values):
            rows.append(SweepRow(approach, cfg.model.ratio, tau, eps, n_steps, dt))
    return SweepResult(tuple(rows), prepared)


@dataclass(frozen=True)
class FitResult:
    g_fit: float
    c_fit: float
    std_g: float
    std_c: float
    r_squared: float
    points_used: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def fit_exponential(taus: Sequence[float], eps: Sequence[float],
                    floor: float = FIT_FLOOR, ceiling: float = FIT_CEILING) -> FitResult:
    """Least-squares fit of ``ln eps = c_fit - tau / g_fit``.

    Only points with ``floor < eps < ceiling`` enter the fit.  Standard
    deviations follow from the linear-fit covariance.
    """
    taus = np.asarray(taus, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if taus.shape != eps.shape:
        raise ValueError("taus and eps must have the same length")
    keep = (eps > floor) & (eps < ceiling)
    if keep.sum() < 3:
        raise NoDecayError(f"only {int(keep.sum())} points inside ({floor:g}, {ceiling:g}); need 3")
    x, y = taus[keep], np.log(eps[keep])
    if np.ptp(x) == 0:
        raise NoDecayError("all usable points share the same tau")
    fit = stats.linregress(x, y)
    if not fit.slope < 0:
        raise NoDecayError(f"no decay: fitted slope {fit.slope:.3g} is non-negative")
    g = -1.0 / fit.slope
    return FitResult(
        g_fit=float(g),
        c_fit=float(fit.intercept),
        std_g=float(fit.stderr / fit.slope**2),
        std_c=float(fit.intercept_stderr),
        r_squared=float(min(1.0, max(0.0, fit.rvalue**2))),
        points_used=int(keep.sum()),
    )


class RatioRow(NamedTuple):
    ratio: float
    approach: str
    g_fit: float
    std_g: float
    c_fit: float
    std_c: float
    r_squared: float
    points_used: int


def fit_sweep(result: SweepResult) -> dict[str, FitResult]:
    fits = {}
    for approach in result.prepared:
        fits[approach] = fit_exponential(*result.points(approach))
    return fits


def sweep_coupling_ratio(cfg: SweepConfig, ratios: Sequence[float]):
    """Run a tau sweep and fit per ``Jx/Jz`` ratio; returns ``(rows, sweeps)``."""
    rows = []
    sweeps = {}
    for ratio in ratios:
        sub = replace(cfg, model=cfg.model.with_ratio(float(ratio)))
        result = sweep_tau(sub)
        sweeps[float(ratio)] = result
        for approach, fit in fit_sweep(result).items():
            rows.append(RatioRow(float(ratio), approach, fit.g_fit, fit.std_g, fit.c_fit,
                                 fit.std_c, fit.r_squared, fit.points_used))
    return rows, sweeps


def characteristic_time(cfg: SweepConfig, approach: str = "none"):
    """Gap profile (with ``g~``) for the approach's chosen preconditioner."""
    prep = prepare_approach(cfg, approach)
    h1 = build_heisenberg_xz(cfg.model)
    h0 = build_h0(h1, prep.preconditioner)
    return gap_profile(h0, h1, cfg.schedule, prep.band)


# -- figure data -----------------------------------------------------------

def fig2_data(result: SweepResult) -> str:
    """gnuplot blocks (``index`` per approach) of ``tau eps_AT``."""
    out = [f"# {UNITS_NOTE}", "# columns: tau epsilon_at"]
    for approach in result.prepared:
        out.append(f"# approach {approach}")
        out += [f"{r.tau!r} {r.epsilon_at!r}" for r in result.rows if r.approach == approach]
        out += ["", ""]
    return "\n".join(out) + "\n"


def fig3_data(rows: Sequence[RatioRow]) -> str:
    out = [f"# {UNITS_NOTE}", "# columns: ratio g_fit std_g"]
    for approach in dict.fromkeys(r.approach for r in rows):
        out.append(f"# approach {approach}")
        out += [f"{r.ratio!r} {r.g_fit!r} {r.std_g!r}" for r in rows if r.approach == approach]
        out += ["", ""]
    return "\n".join(out) + "\n"


def fit_summary(fits: dict[str, FitResult], prepared: dict | None = None) -> str:
    body = {}
    for approach, fit in fits.items():
        entry = {"fit": fit.to_dict()}
        if prepared and approach in prepared:
            entry["alphas"] = list(prepared[approach].preconditioner.alphas)
        body[approach] = entry
    return dumps_json({"units": UNITS_NOTE, "fits": body})
