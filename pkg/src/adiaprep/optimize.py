"""Choice of the preconditioner weights by derivative-free search."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import GapClosureError
from .hamiltonians import PauliSum, Preconditioner, Schedule, build_h0
from .spectral import BandSelector, gap_profile, operator_norm

APPROACHES = ("none", "delta-norm", "g-tilde")


@dataclass(frozen=True)
class OptimizeSpec:
    """Search settings.  ``bounds=None`` picks ``+-2 ||H1|| / L`` per weight."""

    approach: str = "g-tilde"
    bounds: tuple[float, float] | None = None
    points: int = 21
    rounds: int = 3
    translation_invariant: bool = True

    def __post_init__(self):
        if self.approach not in APPROACHES:
            raise ValueError(f"approach must be one of {APPROACHES}, got {self.approach!r}")
        if self.bounds is not None:
            lo, hi = (float(b) for b in self.bounds)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"bounds must be finite with low < high, got {self.bounds}")
            object.__setattr__(self, "bounds", (lo, hi))
        if int(self.points) < 3:
            raise ValueError(f"need at least 3 grid points per coordinate, got {self.points}")
        if int(self.rounds) < 0:
            raise ValueError("rounds must be >= 0")


@dataclass(frozen=True)
class OptimizeResult:
    alphas: tuple[float, ...]
    objective_value: float
    objective_kind: str
    trace: tuple[tuple[tuple[float, ...], float], ...] = field(default=(), repr=False)

    def preconditioner(self, translation_invariant: bool = False) -> Preconditioner:
        return Preconditioner(self.alphas, translation_invariant=translation_invariant)

    def to_dict(self) -> dict:
        return {
            "alphas": list(self.alphas),
            "objective_value": _finite_or_none(self.objective_value),
            "objective_kind": self.objective_kind,
            "trace": [
                {"alphas": list(a), "objective": _finite_or_none(v)} for a, v in self.trace
            ],
        }


def _finite_or_none(x):
    return float(x) if math.isfinite(x) else None


def default_bounds(h1: PauliSum) -> tuple[float, float]:
    scale = 2.0 * operator_norm(h1) / h1.n_qubits
    return (-scale, scale)


def delta_norm_objective(h1: PauliSum, alphas) -> float:
    h0 = build_h0(h1, Preconditioner(tuple(alphas)))
    return operator_norm(h1 - h0)


def g_tilde_objective(h1: PauliSum, f: Schedule, sel: BandSelector, alphas, grid=None) -> float:
    """``g~`` for the given weights; a closing gap scores ``+inf``."""
    h0 = build_h0(h1, Preconditioner(tuple(alphas)))
    try:
        return gap_profile(h0, h1, f, sel, grid=grid).g_tilde
    except GapClosureError:
        return math.inf


class _Search:
    """Coarse grid, then coordinate descent with a halving step."""

    def __init__(self, objective, n_params, spec: OptimizeSpec, bounds, n_jobs=1):
        self.objective = objective
        self.n = n_params
        self.spec = spec
        self.lo, self.hi = bounds
        self.n_jobs = n_jobs
        self.cache: dict[tuple[float, ...], float] = {}
        self.trace: list[tuple[tuple[float, ...], float]] = []

    def rank(self, alphas):
        # ties: smaller l1 norm, then lexicographic
        return (self.cache[alphas], sum(abs(a) for a in alphas), alphas)

    def evaluate(self, candidates):
        fresh = list(dict.fromkeys(c for c in candidates if c not in self.cache))
        if self.n_jobs == 1 or len(fresh) < 2:
            values = [self.objective(c) for c in fresh]
        else:
            from joblib import Parallel, delayed

            values = Parallel(n_jobs=self.n_jobs)(delayed(self.objective)(c) for c in fresh)
        for c, v in zip(fresh, values):
            self.cache[c] = float(v)
            self.trace.append((c, float(v)))
        return min(candidates, key=self.rank)

    def clip(self, x):
        return min(self.hi, max(self.lo, x))

    def descend(self, best, uniform):
        step = (self.hi - self.lo) / (int(self.spec.points) - 1)
        for _ in range(int(self.spec.rounds)):
            step *= 0.5
            for _ in range(100):
                start = best
                if uniform:
                    moves = [(self.clip(best[0] + d),) * self.n for d in (-step, step)]
                    best = self.evaluate([best] + moves)
                else:
                    for j in range(self.n):
                        moves = [best[:j] + (self.clip(best[j] + d),) + best[j + 1:] for d in (-step, step)]
                        best = self.evaluate([best] + moves)
                if best == start:
                    break
        return best

    def run(self):
        grid = np.linspace(self.lo, self.hi, int(self.spec.points))
        if self.lo <= 0.0 <= self.hi:
            grid = np.union1d(grid, [0.0])
        grid = [float(g) for g in grid]
        best = self.evaluate([(g,) * self.n for g in grid])
        # uniform refinement first, so per-site mode never ends above it
        best = self.descend(best, uniform=True)
        if self.spec.translation_invariant or self.n == 1:
            return best
        for j in range(self.n):
            best = self.evaluate([best] + [best[:j] + (g,) + best[j + 1:] for g in grid])
        return self.descend(best, uniform=False)


def _run(objective, kind, h1, spec, n_jobs):
    bounds = spec.bounds or default_bounds(h1)
    search = _Search(objective, h1.n_qubits, spec, bounds, n_jobs=n_jobs)
    best = search.run()
    return OptimizeResult(best, search.cache[best], kind, tuple(search.trace))


def minimize_delta_norm(h1: PauliSum, spec: OptimizeSpec, n_jobs: int = 1) -> OptimizeResult:
    """Weights minimizing ``||H1 - H0(alpha)||``."""
    return _run(lambda a: delta_norm_objective(h1, a), "delta-norm", h1, spec, n_jobs)


def minimize_g_tilde(
    h1: PauliSum,
    f: Schedule,
    sel: BandSelector,
    spec: OptimizeSpec,
    grid=None,
    n_jobs: int = 1,
) -> OptimizeResult:
    """Weights minimizing the characteristic time ``g~``."""
    result = _run(lambda a: g_tilde_objective(h1, f, sel, a, grid), "g-tilde", h1, spec, n_jobs)
    if not math.isfinite(result.objective_value):
        raise GapClosureError("every candidate preconditioner closes the gap")
    return result


def select_preconditioner(
    h1: PauliSum,
    approach: str,
    f: Schedule | None = None,
    sel: BandSelector | None = None,
    spec: OptimizeSpec | None = None,
    n_jobs: int = 1,
) -> tuple[Preconditioner, OptimizeResult]:
    """Dispatch on the preparation approach: ``none``, ``delta-norm`` or ``g-tilde``."""
    spec = OptimizeSpec(approach=approach) if spec is None else spec
    if approach == "none":
        zero = Preconditioner.zero(h1.n_qubits)
        return zero, OptimizeResult(zero.alphas, 0.0, "none", ())
    if approach == "delta-norm":
        result = minimize_delta_norm(h1, spec, n_jobs=n_jobs)
    elif approach == "g-tilde":
        result = minimize_g_tilde(h1, f or Schedule(), sel or BandSelector(), spec, n_jobs=n_jobs)
    else:
        raise ValueError(f"unknown approach {approach!r}")
    return result.preconditioner(spec.translation_invariant), result
