"""State-vector evolution along the interpolation path and leakage errors."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import GapClosureError
from .hamiltonians import (
    DENSE_MAX_QUBITS,
    PauliString,
    PauliSum,
    Schedule,
    diagonal_vector,
    interpolated,
    offdiagonal_part,
    to_matrix,
)
from .spectral import (
    BandSelector,
    _sector_arg,
    resolve_sector,
    restrict,
    sector_basis,
    select_band,
)

DT_MAX = 0.01
STEPPERS = ("trotter2", "exact-step")


@dataclass(frozen=True)
class EvolutionPlan:
    tau: float
    n_steps: int = 1
    stepper: str = "trotter2"
    dt_max: float = DT_MAX

    def __post_init__(self):
        if not (math.isfinite(self.tau) and self.tau >= 0):
            raise ValueError(f"tau must be finite and non-negative, got {self.tau}")
        if int(self.n_steps) < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.stepper not in STEPPERS:
            raise ValueError(f"stepper must be one of {STEPPERS}, got {self.stepper!r}")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        if self.dt > self.dt_max * (1 + 1e-12):
            raise ValueError(f"dt={self.dt:.3g} exceeds dt_max={self.dt_max:.3g}")

    @classmethod
    def from_dt(cls, tau: float, dt: float, stepper: str = "trotter2", dt_max: float | None = None) -> "EvolutionPlan":
        n_steps = max(1, math.ceil(tau / dt - 1e-9))
        return cls(float(tau), n_steps, stepper, dt if dt_max is None else dt_max)

    @property
    def dt(self) -> float:
        return self.tau / self.n_steps


def _phase_on_gather(term: PauliString, n_qubits: int):
    """Index map and phases with ``(P psi)[j] = phase[j] * psi[gather[j]]``."""
    xmask, zmask, n_y = term.masks
    gather = np.arange(1 << n_qubits, dtype=np.int64) ^ xmask
    parity = np.zeros(gather.shape, dtype=np.int64)
    z = gather & zmask
    while np.any(z):
        parity ^= z & 1
        z >>= 1
    return gather, (1j**n_y) * (1 - 2 * parity)


def commuting_groups(terms: list[PauliString]) -> list[list[int]]:
    """Greedy partition of term indices into mutually commuting groups."""
    groups: list[list[int]] = []
    for i, term in enumerate(terms):
        for group in groups:
            if all(term.commutes_with(terms[j].letters) for j in group):
                group.append(i)
                break
        else:
            groups.append([i])
    return groups


class _TrotterKernel:
    """Second-order split: diagonal half-steps around the off-diagonal layers."""

    def __init__(self, h0: PauliSum, h1: PauliSum):
        n = h0.n_qubits
        self.diag0 = diagonal_vector(h0)
        self.diag1 = diagonal_vector(h1)
        c0 = offdiagonal_part(h0).as_dict()
        c1 = offdiagonal_part(h1).as_dict()
        letters = list(dict.fromkeys(list(c0) + list(c1)))
        self.c0 = np.array([c0.get(k, 0.0) for k in letters])
        self.c1 = np.array([c1.get(k, 0.0) for k in letters])
        terms = [PauliString(k) for k in letters]
        self.ops = [_phase_on_gather(t, n) for t in terms]
        groups = commuting_groups(terms)
        # symmetric sweep over non-commuting groups keeps the step second order
        seq = [(g, 0.5) for g in groups[:-1]]
        seq += [(groups[-1], 1.0)] if groups else []
        seq += [(g, 0.5) for g in reversed(groups[:-1])]
        self.sequence = seq

    def diagonal(self, fs: float) -> np.ndarray:
        return (1.0 - fs) * self.diag0 + fs * self.diag1

    def apply_offdiagonal(self, psi: np.ndarray, fs: float, dt: float) -> np.ndarray:
        coeffs = (1.0 - fs) * self.c0 + fs * self.c1
        for group, weight in self.sequence:
            for j in group:
                theta = weight * dt * coeffs[j]
                if theta == 0.0:
                    continue
                gather, phase = self.ops[j]
                psi = math.cos(theta) * psi - 1j * math.sin(theta) * (phase[:, None] * psi[gather])
        return psi


def _as_columns(psi0) -> tuple[np.ndarray, bool]:
    psi = np.asarray(psi0, dtype=complex)
    if psi.ndim == 1:
        return psi[:, None].copy(), True
    if psi.ndim == 2:
        return psi.copy(), False
    raise ValueError("psi0 must be a state vector or a matrix of column states")


def evolve(
    h0: PauliSum,
    h1: PauliSum,
    f: Schedule,
    plan: EvolutionPlan,
    psi0,
    diagnostics: list | None = None,
) -> np.ndarray:
    """Apply the discretized ``U_tau`` for ``H(s) = (1-f)h0 + f h1``.

    Step ``k`` samples ``H`` at the midpoint ``s_k = (k - 1/2)/n_steps``.
    ``psi0`` may be one state or a ``(2**L, k)`` matrix of column states.
    When ``diagnostics`` is a list, one ``(s_k, energy, norm_drift)`` row per
    step is appended (energy of the first column).
    """
    if h0.n_qubits != h1.n_qubits:
        raise ValueError(f"qubit count mismatch: {h0.n_qubits} vs {h1.n_qubits}")
    psi, single = _as_columns(psi0)
    dim = 1 << h0.n_qubits
    if psi.shape[0] != dim:
        raise ValueError(f"state has dimension {psi.shape[0]}, expected {dim}")
    if plan.tau == 0:
        return psi[:, 0] if single else psi
    n, dt = plan.n_steps, plan.dt
    mids = (np.arange(1, n + 1) - 0.5) / n
    fvals = [float(f(s)) for s in mids]

    if plan.stepper == "trotter2":
        kern = _TrotterKernel(h0, h1)
        pending = np.exp(-0.5j * dt * kern.diagonal(fvals[0]))
        for k, fs in enumerate(fvals):
            psi = pending[:, None] * psi
            psi = kern.apply_offdiagonal(psi, fs, dt)
            half = -0.5j * dt * kern.diagonal(fs)
            if k + 1 < n and diagnostics is None:
                # merge this trailing half-step with the next leading one
                pending = np.exp(half - 0.5j * dt * kern.diagonal(fvals[k + 1]))
            else:
                psi = np.exp(half)[:, None] * psi
                pending = np.exp(-0.5j * dt * kern.diagonal(fvals[k + 1])) if k + 1 < n else None
            if diagnostics is not None:
                diagnostics.append(_diag_row(h0, h1, mids[k], fs, psi))
    else:
        sparse = h0.n_qubits > DENSE_MAX_QUBITS
        m0, m1 = to_matrix(h0, sparse=sparse), to_matrix(h1, sparse=sparse)
        for k, fs in enumerate(fvals):
            mat = (1.0 - fs) * m0 + fs * m1
            if sparse:
                psi = spla.expm_multiply(-1j * dt * mat, psi)
            else:
                w, u = la.eigh(mat)
                psi = u @ (np.exp(-1j * dt * w)[:, None] * (u.conj().T @ psi))
            if diagnostics is not None:
                diagnostics.append(_diag_row(h0, h1, mids[k], fs, psi))
    return psi[:, 0] if single else psi


def _diag_row(h0, h1, s, fs, psi):
    col = psi[:, 0]
    mat = to_matrix((1.0 - fs) * h0 + fs * h1, sparse=True)
    energy = float(np.real(np.vdot(col, mat @ col)))
    drift = float(np.max(np.abs(np.linalg.norm(psi, axis=0) - 1.0)))
    return (float(s), energy, drift)


def format_diagnostics(rows) -> str:
    lines = ["# s_k\tenergy\tnorm_drift"]
    lines += [f"{s!r}\t{e!r}\t{d!r}" for s, e, d in rows]
    return "\n".join(lines) + "\n"


def phase_gate_layer(alphas, theta: float) -> np.ndarray:
    """Diagonal of ``exp(-i theta M)`` as a product of single-qubit phase gates."""
    alphas = np.asarray(alphas, dtype=float).ravel()
    out = np.ones(1, dtype=complex)
    for a in alphas:
        # qubit q becomes the next more significant bit
        out = np.concatenate([out, out * np.exp(-1j * theta * a)])
    return out


@dataclass(frozen=True)
class Projector:
    """Orthogonal projector stored by an orthonormal column basis."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex)
        if b.ndim == 1:
            b = b[:, None]
        if b.ndim != 2 or b.shape[1] < 1:
            raise ValueError("projector basis must have at least one column")
        gram = b.conj().T @ b
        if not np.allclose(gram, np.eye(b.shape[1]), atol=1e-10, rtol=0):
            raise ValueError("projector basis columns are not orthonormal")
        object.__setattr__(self, "basis", b)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def matrix(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return self.basis @ (self.basis.conj().T @ psi)


def ground_band_projector(h: PauliSum, sel: BandSelector, reference: PauliSum | None = None) -> Projector:
    """Projector onto the eigenspace of ``h`` picked by ``sel``.

    ``reference`` is the partner Hamiltonian used to resolve ``sector="auto"``;
    by default only ``h`` is consulted.
    """
    sector = resolve_sector(_sector_arg(sel), h, h if reference is None else reference)
    basis = sector_basis(h.n_qubits, sector)
    mat = to_matrix(h, sparse=h.n_qubits > DENSE_MAX_QUBITS)
    mat = restrict(mat, basis)
    if sp.issparse(mat) and sel.mode == "lowest-k" and sel.k + 4 < mat.shape[0] - 1:
        vals, vecs = spla.eigsh(mat, k=int(sel.k) + 4, which="SA")
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    else:
        dense = mat.toarray() if sp.issparse(mat) else mat
        vals, vecs = la.eigh(dense)
    if sel.degeneracy_tol is not None:
        tol = sel.degeneracy_tol
    else:
        tol = 1e-9 * max(abs(vals[0]), abs(vals[-1]))
    band, d, _ = select_band(vals, sel, tol)
    if d <= tol:
        raise GapClosureError(f"selected band is not separated from the rest (gap {d:.3e})", gap=d)
    cols = vecs[:, list(band)]
    if basis is not None:
        cols = basis @ cols
    # re-orthonormalize to scrub rounding from the sector lift
    q, _ = np.linalg.qr(np.asarray(cols, dtype=complex))
    return Projector(q)


def infidelity(target, evolved) -> float:
    """``1 - |<target|evolved>|^2`` clipped to ``[0, 1]``."""
    ov = abs(np.vdot(np.asarray(target), np.asarray(evolved))) ** 2
    return float(min(1.0, max(0.0, 1.0 - ov)))


def epsilon_at(p1: Projector, evolved_basis) -> float:
    """Operator norm of ``(1 - P1) U P0`` from the evolved basis of ``V(0)``."""
    e = np.asarray(evolved_basis, dtype=complex)
    if e.ndim == 1:
        e = e[:, None]
    leak = e - p1.apply(e)
    return float(min(1.0, np.linalg.norm(leak, 2)))


def epsilon_at_limit(p0: Projector, p1: Projector) -> float:
    """``||(1 - P1) P0||``, the leakage for an instantaneous switch."""
    return epsilon_at(p1, p0.basis)
