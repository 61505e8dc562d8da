"""Spectra, gap/bandwidth profiles and the characteristic decay time."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import minimize_scalar

from .exceptions import ConvergenceError, GapClosureError
from .hamiltonians import (
    DENSE_MAX_QUBITS,
    PauliString,
    PauliSum,
    Schedule,
    interpolated,
    to_matrix,
)

DEFAULT_GRID_POINTS = 51
DEFAULT_REFINE_TOL = 1e-3
RHO_TOL = 1e-10
RHO_REL_TOL = 1e-14
RHO_CIRCLE_SAMPLES = 4096


# -- symmetry sectors ------------------------------------------------------

def resolve_sector(sector, h0: PauliSum, h1: PauliSum) -> dict[str, int] | None:
    """Turn a sector request into an explicit ``{"Z": +1, "X": +1}``-style map.

    ``None`` keeps the full Hilbert space.  ``"auto"`` keeps the +1 sector
    of every global parity (``Z...Z`` first, then ``X...X``) that commutes
    with both Hamiltonians and with the parities already chosen.
    """
    if sector is None:
        return None
    n = h0.n_qubits
    if isinstance(sector, str):
        if sector != "auto":
            raise ValueError(f"sector must be None, 'auto' or a mapping, got {sector!r}")
        chosen: dict[str, int] = {}
        for name in ("Z", "X"):
            letters = name * n
            if not (h0.commutes_with_string(letters) and h1.commutes_with_string(letters)):
                continue
            if all(PauliString(letters).commutes_with(k * n) for k in chosen):
                chosen[name] = 1
        return chosen or None
    chosen = {}
    for name, value in dict(sector).items():
        name = str(name).upper()
        if name not in ("X", "Z"):
            raise ValueError(f"unknown parity {name!r}; expected 'X' or 'Z'")
        if int(value) not in (1, -1):
            raise ValueError(f"parity eigenvalue must be +1 or -1, got {value}")
        letters = name * n
        if not (h0.commutes_with_string(letters) and h1.commutes_with_string(letters)):
            raise ValueError(f"global {name} parity is not conserved by the Hamiltonians")
        chosen[name] = int(value)
    if len(chosen) == 2 and n % 2:
        raise ValueError("X and Z parities anticommute for an odd number of qubits")
    return chosen or None


def sector_basis(n_qubits: int, sector: Mapping[str, int] | None):
    """Real isometry (CSR, ``2**L x m``) onto the joint parity eigenspace."""
    if not sector:
        return None
    dim = 1 << n_qubits
    idx = np.arange(dim)
    keep = np.ones(dim, dtype=bool)
    if "Z" in sector:
        pop = np.array([bin(i).count("1") for i in range(dim)])
        keep &= (1 - 2 * (pop & 1)) == sector["Z"]
    if "X" not in sector:
        cols = idx[keep]
        return sp.csr_matrix(
            (np.ones(cols.size), (cols, np.arange(cols.size))), shape=(dim, cols.size)
        )
    flip = dim - 1
    lo = idx[keep & (idx < (idx ^ flip))]
    rows = np.concatenate([lo, lo ^ flip])
    cols = np.concatenate([np.arange(lo.size)] * 2)
    vals = np.concatenate([np.ones(lo.size), sector["X"] * np.ones(lo.size)]) / math.sqrt(2)
    return sp.csr_matrix((vals, (rows, cols)), shape=(dim, lo.size))


def restrict(matrix, basis):
    if basis is None:
        return matrix
    out = basis.T @ matrix @ basis
    return out.toarray() if sp.issparse(out) and not sp.issparse(matrix) else out


# -- eigen-solvers ---------------------------------------------------------

def spectrum(h, k: int | None = None, return_vectors: bool = False, tol: float = 0.0, maxiter: int | None = None):
    """Sorted eigenvalues (and optionally orthonormal eigenvectors).

    Dense matrices are fully diagonalized.  For sparse input with ``k`` set
    the ``k`` lowest pairs come from ARPACK's Lanczos iteration.
    """
    if isinstance(h, PauliSum):
        h = to_matrix(h)
    dim = h.shape[0]
    if sp.issparse(h) and k is not None and k < dim - 1:
        try:
            vals, vecs = spla.eigsh(h, k=k, which="SA", tol=tol, maxiter=maxiter)
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError(f"Lanczos did not converge for k={k}") from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    else:
        dense = h.toarray() if sp.issparse(h) else np.asarray(h)
        if return_vectors:
            vals, vecs = la.eigh(dense)
        else:
            vals, vecs = la.eigvalsh(dense), None
        if k is not None:
            vals = vals[:k]
            vecs = None if vecs is None else vecs[:, :k]
    return (vals, vecs) if return_vectors else vals


def operator_norm(h) -> float:
    """Operator norm of a Hermitian operator, ``max |eigenvalue|``."""
    if isinstance(h, PauliSum):
        if len(h) == 0:
            return 0.0
        h = to_matrix(h)
    if sp.issparse(h) and h.shape[0] > (1 << DENSE_MAX_QUBITS):
        try:
            val = spla.eigsh(h, k=1, which="LM", return_eigenvectors=False)
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError("Lanczos did not converge for the operator norm") from exc
        return float(abs(val[0]))
    dense = h.toarray() if sp.issparse(h) else np.asarray(h)
    vals = la.eigvalsh(dense)
    return float(max(abs(vals[0]), abs(vals[-1])))


# -- band selection --------------------------------------------------------

@dataclass(frozen=True)
class BandSelector:
    """Which part of the instantaneous spectrum is tracked.

    ``mode="lowest-k"`` keeps the ``k`` lowest levels; ``mode="energy-window"``
    keeps the eigenvalues inside ``window``.  ``degeneracy_tol=None`` means
    ``1e-9 * ||H(s)||``.  ``sector`` restricts the spectrum to a global
    parity sector (see :func:`resolve_sector`).
    """

    mode: str = "lowest-k"
    k: int = 1
    window: tuple[float, float] | None = None
    degeneracy_tol: float | None = None
    sector: object = None

    def __post_init__(self):
        if self.mode not in ("lowest-k", "energy-window"):
            raise ValueError(f"band mode must be 'lowest-k' or 'energy-window', got {self.mode!r}")
        if self.mode == "lowest-k" and int(self.k) < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if self.mode == "energy-window":
            if self.window is None or len(self.window) != 2 or not self.window[0] <= self.window[1]:
                raise ValueError("energy-window mode needs window=(low, high) with low <= high")
            object.__setattr__(self, "window", (float(self.window[0]), float(self.window[1])))
        if self.degeneracy_tol is not None and self.degeneracy_tol < 0:
            raise ValueError("degeneracy_tol must be >= 0")
        if isinstance(self.sector, Mapping):
            object.__setattr__(self, "sector", tuple(sorted(dict(self.sector).items())))


def _sector_arg(sel: BandSelector):
    return dict(sel.sector) if isinstance(sel.sector, tuple) else sel.sector


@dataclass(frozen=True)
class SpectralSnapshot:
    s: float
    eigenvalues: tuple[float, ...]
    band_indices: tuple[int, ...]
    d: float
    D: float


def select_band(eigenvalues: np.ndarray, sel: BandSelector, tol: float):
    """Return ``(band_indices, d, D)`` for sorted ``eigenvalues``."""
    e = np.asarray(eigenvalues)
    if sel.mode == "lowest-k":
        k = int(sel.k)
        if k > e.size:
            raise ValueError(f"band size {k} exceeds the {e.size} available levels")
        band = np.arange(k)
        d = float(e[k] - e[k - 1]) if k < e.size else math.inf
    else:
        lo, hi = sel.window
        band = np.flatnonzero((e >= lo) & (e <= hi))
        if band.size == 0:
            raise ValueError(f"no eigenvalues inside the energy window {sel.window}")
        d_plus = float(e[band[-1] + 1] - e[band[-1]]) if band[-1] + 1 < e.size else math.inf
        d_minus = float(e[band[0]] - e[band[0] - 1]) if band[0] > 0 else math.inf
        d = min(d_plus, d_minus)
    D = float(e[band[-1]] - e[band[0]])
    return tuple(int(i) for i in band), d, D


class _PathSpectra:
    """Spectra of ``H(s)`` on a fixed parity sector."""

    def __init__(self, h0: PauliSum, h1: PauliSum, f: Schedule, sel: BandSelector):
        self.h0, self.h1, self.f, self.sel = h0, h1, f, sel
        self.sector = resolve_sector(_sector_arg(sel), h0, h1)
        self.basis = sector_basis(h0.n_qubits, self.sector)
        sparse = h0.n_qubits > DENSE_MAX_QUBITS
        self.m0 = restrict(to_matrix(h0, sparse=sparse), self.basis)
        self.m1 = restrict(to_matrix(h1, sparse=sparse), self.basis)
        self.sparse = sparse
        self.norm_bound = sum(abs(t.coefficient) for t in h0) + sum(abs(t.coefficient) for t in h1)

    def matrix(self, s: float):
        fs = float(self.f(s))
        return (1.0 - fs) * self.m0 + fs * self.m1

    def eigenvalues(self, s: float) -> np.ndarray:
        mat = self.matrix(s)
        if self.sparse and self.sel.mode == "lowest-k" and self.sel.k + 4 < mat.shape[0] - 1:
            return spectrum(mat, k=int(self.sel.k) + 4)
        return spectrum(mat.toarray() if sp.issparse(mat) else mat)

    def snapshot(self, s: float) -> SpectralSnapshot:
        e = self.eigenvalues(s)
        if self.sel.degeneracy_tol is not None:
            tol = self.sel.degeneracy_tol
        elif e.size == self.m0.shape[0]:
            tol = 1e-9 * max(abs(e[0]), abs(e[-1]))
        else:
            tol = 1e-9 * self.norm_bound
        band, d, D = select_band(e, self.sel, tol)
        if d <= tol:
            raise GapClosureError(f"band gap closes at s={s:.6g} (d={d:.3e})", s=s, gap=d)
        return SpectralSnapshot(float(s), tuple(float(x) for x in e), band, d, D)


def spectral_snapshot(h0: PauliSum, h1: PauliSum, f: Schedule, sel: BandSelector, s: float) -> SpectralSnapshot:
    return _PathSpectra(h0, h1, f, sel).snapshot(s)


# -- characteristic time ---------------------------------------------------

def w_factor(d: float, D: float) -> float:
    """``[2^8 (1 + 2D/(pi d))^2 (pi^2/3 + 4/d)]^(7/3)``."""
    if not d > 0:
        raise ValueError(f"gap d must be positive, got {d}")
    if D < 0:
        raise ValueError(f"bandwidth D must be non-negative, got {D}")
    return (2.0**8 * (1.0 + 2.0 * D / (math.pi * d)) ** 2 * (math.pi**2 / 3.0 + 4.0 / d)) ** (7.0 / 3.0)


def _increment_coefficients(f: Schedule, s: float) -> np.ndarray:
    """Coefficients of ``f(s + rho) - f(s)`` in powers of ``rho``."""
    shifted = np.polynomial.Polynomial(f.coefficients)(np.polynomial.Polynomial([s, 1.0]))
    coef = shifted.coef.copy()
    coef[0] = 0.0
    return coef


def _circle_max(coef: np.ndarray, r: float, phases: np.ndarray) -> float:
    # expanding around s avoids cancellation in f(s + rho) - f(s) for small rho
    return float(np.max(np.abs(np.polynomial.polynomial.polyval(r * phases, coef))))


def rho_radius(f: Schedule, s: float, x: float) -> float:
    """Largest ``r`` with ``|f(s + rho) - f(s)| < x`` on the whole disk ``|rho| <= r``."""
    if x == math.inf:
        return math.inf
    if not x > 0:
        raise ValueError(f"threshold x must be positive, got {x}")
    if f.is_linear:
        return float(x)
    # maximum modulus: the disk check reduces to its boundary circle
    phases = np.exp(2j * np.pi * np.arange(RHO_CIRCLE_SAMPLES) / RHO_CIRCLE_SAMPLES)
    coef = _increment_coefficients(f, s)
    if not np.any(coef):
        return math.inf
    lo, hi = 0.0, float(x)
    while _circle_max(coef, hi, phases) < x:
        lo, hi = hi, 2.0 * hi
    # absolute 1e-10, tightened to near machine precision relative to r
    while hi - lo > min(RHO_TOL, RHO_REL_TOL * hi):
        mid = 0.5 * (lo + hi)
        if _circle_max(coef, mid, phases) < x:
            lo = mid
        else:
            hi = mid
    return lo


def g_of_s(d: float, D: float, f: Schedule, s: float, delta_norm: float) -> float:
    """Local decay time ``4 W(d, D) / rho(s, d / (4 ||Delta||))``."""
    if delta_norm < 0:
        raise ValueError("delta_norm must be non-negative")
    w = w_factor(d, D)
    x = math.inf if delta_norm == 0 else d / (4.0 * delta_norm)
    rho = rho_radius(f, s, x)
    return 0.0 if rho == math.inf else 4.0 * w / rho


def g_tilde_linear(d_min: float, D_max: float, delta_norm: float) -> float:
    return 16.0 * (delta_norm / d_min) * w_factor(d_min, D_max)


def min_rho(f: Schedule, x: float, n_grid: int = 101) -> float:
    """``inf_{s in [0,1]} rho(s, x)``: grid scan refined around the minimum."""
    if x == math.inf or f.is_linear:
        return rho_radius(f, 0.0, x)
    grid = np.linspace(0.0, 1.0, n_grid)
    vals = np.array([rho_radius(f, s, x) for s in grid])
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, n_grid - 1)]
    res = minimize_scalar(lambda s: rho_radius(f, s, x), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-8})
    return float(min(vals[i], res.fun))


def g_tilde(d_min: float, D_max: float, delta_norm: float, f: Schedule) -> float:
    """``4 W(d_min, D_max) / inf_s rho(s, d_min / (4 ||Delta||))``; 0 when Delta vanishes."""
    if not d_min > 0:
        raise GapClosureError(f"minimum gap must be positive, got {d_min}", gap=d_min)
    if delta_norm == 0:
        return 0.0
    rho = min_rho(f, d_min / (4.0 * delta_norm))
    return 4.0 * w_factor(d_min, D_max) / rho


# -- gap profile -----------------------------------------------------------

@dataclass(frozen=True)
class GapProfile:
    snapshots: tuple[SpectralSnapshot, ...]
    d_min: float
    D_max: float
    delta_norm: float
    g_tilde: float
    s_at_d_min: float = 0.0
    s_at_D_max: float = 0.0
    sector: dict | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["snapshots"] = [asdict(s) for s in self.snapshots]
        for snap in out["snapshots"]:
            snap["eigenvalues"] = list(snap["eigenvalues"])
            snap["band_indices"] = list(snap["band_indices"])
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _refine(fun, grid: np.ndarray, i: int, tol: float) -> tuple[float, float]:
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(fun, bounds=(lo, hi), method="bounded",
                          options={"xatol": tol * (hi - lo)})
    return float(res.x), float(res.fun)


def gap_profile(
    h0: PauliSum,
    h1: PauliSum,
    f: Schedule,
    sel: BandSelector,
    grid: Sequence[float] | None = None,
    refine_tol: float = DEFAULT_REFINE_TOL,
    n_jobs: int = 1,
) -> GapProfile:
    """Sample ``d(s)`` and ``D(s)`` along the path and assemble ``g~``.

    Raises :class:`GapClosureError` if the tracked band touches the rest
    of the spectrum at any sampled or refined point.
    """
    grid = np.linspace(0.0, 1.0, DEFAULT_GRID_POINTS) if grid is None else np.asarray(grid, float)
    if grid.ndim != 1 or grid.size < 2 or grid[0] < 0 or grid[-1] > 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a strictly increasing sequence inside [0, 1]")
    path = _PathSpectra(h0, h1, f, sel)
    if n_jobs == 1:
        snaps = [path.snapshot(s) for s in grid]
    else:
        from joblib import Parallel, delayed

        snaps = Parallel(n_jobs=n_jobs)(delayed(path.snapshot)(s) for s in grid)
    d = np.array([sn.d for sn in snaps])
    D = np.array([sn.D for sn in snaps])

    i = int(np.argmin(d))
    s_d, d_min = float(grid[i]), float(d[i])
    if grid.size > 2 and np.isfinite(d_min):
        s_ref, d_ref = _refine(lambda s: path.snapshot(s).d, grid, i, refine_tol)
        if d_ref < d_min:
            s_d, d_min = s_ref, d_ref
    j = int(np.argmax(D))
    s_D, D_max = float(grid[j]), float(D[j])
    if grid.size > 2 and D_max > 0:
        s_ref, neg = _refine(lambda s: -path.snapshot(s).D, grid, j, refine_tol)
        if -neg > D_max:
            s_D, D_max = s_ref, -neg

    delta_norm = operator_norm(h1 - h0)
    return GapProfile(
        snapshots=tuple(snaps),
        d_min=d_min,
        D_max=D_max,
        delta_norm=delta_norm,
        g_tilde=g_tilde(d_min, D_max, delta_norm, f),
        s_at_d_min=s_d,
        s_at_D_max=s_D,
        sector=path.sector,
    )
