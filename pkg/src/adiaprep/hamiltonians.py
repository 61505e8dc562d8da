"""Pauli-sum Hamiltonians for spin lattices.

Bit-order convention used everywhere in the package: qubit ``q`` is the
``q``-th least significant bit of a computational-basis index, so basis
state ``i`` has qubit ``q`` in state ``(i >> q) & 1``.  Letter strings are
written with qubit 0 first (leftmost).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .exceptions import RegisterTooLargeError

PAULI_LETTERS = frozenset("IXYZ")
DENSE_MAX_QUBITS = 10
MATRIX_MAX_QUBITS = 14


@dataclass(frozen=True)
class PauliString:
    """A real-weighted tensor product of single-qubit Pauli letters."""

    letters: str
    coefficient: float = 1.0

    def __post_init__(self):
        letters = str(self.letters).upper()
        if len(letters) < 1:
            raise ValueError("Pauli string must act on at least one qubit")
        bad = set(letters) - PAULI_LETTERS
        if bad:
            raise ValueError(f"invalid Pauli letters {sorted(bad)} in {letters!r}")
        coefficient = float(self.coefficient)
        if not math.isfinite(coefficient):
            raise ValueError(f"non-finite coefficient {coefficient} for {letters!r}")
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "coefficient", coefficient)

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def is_diagonal(self) -> bool:
        return set(self.letters) <= {"I", "Z"}

    @property
    def masks(self) -> tuple[int, int, int]:
        """Return ``(xmask, zmask, n_y)``; X and Y flip, Z and Y sign."""
        xmask = zmask = n_y = 0
        for q, letter in enumerate(self.letters):
            if letter in "XY":
                xmask |= 1 << q
            if letter in "ZY":
                zmask |= 1 << q
            n_y += letter == "Y"
        return xmask, zmask, n_y

    def commutes_with(self, letters: str) -> bool:
        """True if the bare string commutes with the bare Pauli string ``letters``."""
        anti = sum(
            1
            for a, b in zip(self.letters, letters)
            if a != "I" and b != "I" and a != b
        )
        return anti % 2 == 0


class PauliSum:
    """Hermitian operator stored as merged real-weighted Pauli strings.

    Terms with identical letters are merged and exact zeros dropped, so two
    sums representing the same operator compare equal.
    """

    __slots__ = ("_terms", "_n_qubits")

    def __init__(self, terms: Iterable[PauliString | tuple[str, float]] = (), n_qubits: int | None = None):
        merged: dict[str, float] = {}
        width = n_qubits
        for term in terms:
            if not isinstance(term, PauliString):
                letters, coefficient = term
                term = PauliString(letters, coefficient)
            if width is None:
                width = term.n_qubits
            elif term.n_qubits != width:
                raise ValueError(
                    f"term {term.letters!r} acts on {term.n_qubits} qubits, expected {width}"
                )
            merged[term.letters] = merged.get(term.letters, 0.0) + term.coefficient
        if width is None:
            raise ValueError("n_qubits is required for an empty PauliSum")
        if width < 1:
            raise ValueError("n_qubits must be >= 1")
        self._n_qubits = int(width)
        self._terms = tuple(PauliString(k, v) for k, v in merged.items() if v != 0.0)

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls((), n_qubits=n_qubits)

    @property
    def n_qubits(self) -> int:
        return self._n_qubits

    @property
    def terms(self) -> tuple[PauliString, ...]:
        return self._terms

    def as_dict(self) -> dict[str, float]:
        return {t.letters: t.coefficient for t in self._terms}

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms)

    def __eq__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self._n_qubits == other._n_qubits and self.as_dict() == other.as_dict()

    def __hash__(self):
        return hash((self._n_qubits, frozenset(self.as_dict().items())))

    def __repr__(self):
        body = " + ".join(f"{t.coefficient:g}*{t.letters}" for t in self._terms) or "0"
        return f"PauliSum({body}; n_qubits={self._n_qubits})"

    def _check_width(self, other: "PauliSum"):
        if other.n_qubits != self.n_qubits:
            raise ValueError(
                f"qubit count mismatch: {self.n_qubits} vs {other.n_qubits}"
            )

    def __add__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        self._check_width(other)
        return PauliSum(self._terms + other._terms, n_qubits=self._n_qubits)

    def __mul__(self, scalar):
        scalar = float(scalar)
        return PauliSum(
            (PauliString(t.letters, scalar * t.coefficient) for t in self._terms),
            n_qubits=self._n_qubits,
        )

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self + (-other)

    def commutes_with_string(self, letters: str) -> bool:
        return all(t.commutes_with(letters) for t in self._terms)

    # text interchange: one "coefficient letters" pair per line
    def dumps(self) -> str:
        lines = [f"# n_qubits {self._n_qubits}; qubit 0 is the leftmost letter"]
        lines += [f"{t.coefficient!r} {t.letters}" for t in self._terms]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "PauliSum":
        n_qubits = None
        terms = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].replace(";", " ").split()
                if len(parts) >= 2 and parts[0] == "n_qubits":
                    n_qubits = int(parts[1])
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'coefficient letters', got {raw!r}")
            try:
                coefficient = float(parts[0])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: bad coefficient {parts[0]!r}") from exc
            terms.append(PauliString(parts[1], coefficient))
        return cls(terms, n_qubits=n_qubits)


@dataclass(frozen=True)
class LatticeSpec:
    """Periodic lattice with XZ couplings.

    ``sites`` is ``L`` for ``geometry="chain"`` and ``(rows, cols)`` for
    ``geometry="torus"``.
    """

    geometry: str = "chain"
    sites: int | tuple[int, int] = 6
    jz: float = 1.0
    jx: float = 5.0

    def __post_init__(self):
        if self.geometry not in ("chain", "torus"):
            raise ValueError(f"geometry must be 'chain' or 'torus', got {self.geometry!r}")
        if self.geometry == "chain":
            if isinstance(self.sites, (tuple, list)):
                raise ValueError("chain geometry takes an integer number of sites")
            if int(self.sites) < 2:
                raise ValueError(f"chain needs at least 2 sites, got {self.sites}")
            object.__setattr__(self, "sites", int(self.sites))
        else:
            if not isinstance(self.sites, (tuple, list)) or len(self.sites) != 2:
                raise ValueError("torus geometry takes sites=(rows, cols)")
            rows, cols = (int(v) for v in self.sites)
            if rows < 2 or cols < 2:
                raise ValueError(f"torus dimensions must be >= 2, got {rows}x{cols}")
            object.__setattr__(self, "sites", (rows, cols))
        for name in ("jz", "jx"):
            value = float(getattr(self, name))
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be real and positive, got {value}")
            object.__setattr__(self, name, value)

    @property
    def n_sites(self) -> int:
        if self.geometry == "chain":
            return self.sites
        rows, cols = self.sites
        return rows * cols

    @property
    def ratio(self) -> float:
        return self.jx / self.jz

    def edges(self) -> list[tuple[int, int]]:
        """Deduplicated nearest-neighbour bonds ``(i, j)`` with ``i < j``."""
        if self.geometry == "chain":
            n = self.sites
            pairs = [(i, (i + 1) % n) for i in range(n)]
        else:
            rows, cols = self.sites
            pairs = []
            for r in range(rows):
                for c in range(cols):
                    site = r * cols + c
                    pairs.append((site, r * cols + (c + 1) % cols))
                    pairs.append((site, ((r + 1) % rows) * cols + c))
        seen = set()
        out = []
        for i, j in pairs:
            key = (min(i, j), max(i, j))
            if key not in seen:
                seen.add(key)
                out.append(key)
        return out

    def with_ratio(self, ratio: float) -> "LatticeSpec":
        return LatticeSpec(self.geometry, self.sites, self.jz, ratio * self.jz)


def _two_site(n: int, i: int, j: int, letter: str) -> str:
    letters = ["I"] * n
    letters[i] = letters[j] = letter
    return "".join(letters)


def build_heisenberg_xz(lattice: LatticeSpec) -> PauliSum:
    """Return ``-1/2 * sum_<ij> (Jz Z_i Z_j + Jx X_i X_j)``."""
    n = lattice.n_sites
    terms = []
    for i, j in lattice.edges():
        terms.append(PauliString(_two_site(n, i, j, "Z"), -0.5 * lattice.jz))
        terms.append(PauliString(_two_site(n, i, j, "X"), -0.5 * lattice.jx))
    return PauliSum(terms, n_qubits=n)


def diagonal_part(h: PauliSum) -> PauliSum:
    return PauliSum((t for t in h if t.is_diagonal), n_qubits=h.n_qubits)


def offdiagonal_part(h: PauliSum) -> PauliSum:
    return PauliSum((t for t in h if not t.is_diagonal), n_qubits=h.n_qubits)


@dataclass(frozen=True)
class Preconditioner:
    """Diagonal preconditioner ``<i|M|i> = sum_j alphas[j] * bit_j(i)``."""

    alphas: tuple[float, ...]
    translation_invariant: bool = False

    def __post_init__(self):
        alphas = tuple(float(a) for a in np.ravel(np.asarray(self.alphas, dtype=float)))
        if not alphas:
            raise ValueError("preconditioner needs at least one alpha")
        if not all(math.isfinite(a) for a in alphas):
            raise ValueError(f"non-finite preconditioner weights {alphas}")
        if self.translation_invariant and len(set(alphas)) > 1:
            raise ValueError("translation-invariant preconditioner requires equal alphas")
        object.__setattr__(self, "alphas", alphas)

    @classmethod
    def uniform(cls, n_qubits: int, alpha: float) -> "Preconditioner":
        return cls((float(alpha),) * n_qubits, translation_invariant=True)

    @classmethod
    def zero(cls, n_qubits: int) -> "Preconditioner":
        return cls.uniform(n_qubits, 0.0)

    @property
    def n_qubits(self) -> int:
        return len(self.alphas)

    def to_pauli_sum(self) -> PauliSum:
        """``sum_j alpha_j (I - Z_j) / 2``."""
        n = self.n_qubits
        terms = [PauliString("I" * n, 0.5 * sum(self.alphas))]
        for q, a in enumerate(self.alphas):
            letters = ["I"] * n
            letters[q] = "Z"
            terms.append(PauliString("".join(letters), -0.5 * a))
        return PauliSum(terms, n_qubits=n)

    def diagonal(self) -> np.ndarray:
        """All ``2**L`` diagonal entries at once."""
        idx = np.arange(1 << self.n_qubits)
        out = np.zeros(idx.shape, dtype=float)
        for q, a in enumerate(self.alphas):
            out += a * ((idx >> q) & 1)
        return out


def preconditioner_diagonal(m: Preconditioner, i: int) -> float:
    i = int(i)
    if not 0 <= i < (1 << m.n_qubits):
        raise IndexError(f"basis index {i} out of range for {m.n_qubits} qubits")
    return float(sum(a for q, a in enumerate(m.alphas) if (i >> q) & 1))


def build_h0(h1: PauliSum, m: Preconditioner) -> PauliSum:
    """Diagonal of ``h1`` plus the preconditioner."""
    if m.n_qubits != h1.n_qubits:
        raise ValueError(f"preconditioner has {m.n_qubits} weights for {h1.n_qubits} qubits")
    return diagonal_part(h1) + m.to_pauli_sum()


@dataclass(frozen=True)
class Schedule:
    """Interpolation function with ``f(0) = 0`` and ``f(1) = 1``.

    ``coefficients`` are polynomial coefficients in increasing degree
    (``c0 + c1 s + ...``); ``c0`` must vanish and the sum must be one.
    """

    kind: str = "linear"
    coefficients: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.kind == "linear":
            if self.coefficients not in ((), (0.0, 1.0)):
                raise ValueError("linear schedule takes no coefficients")
            object.__setattr__(self, "coefficients", ())
            return
        if self.kind != "polynomial":
            raise ValueError(f"schedule kind must be 'linear' or 'polynomial', got {self.kind!r}")
        coeffs = tuple(float(c) for c in self.coefficients)
        if len(coeffs) < 2:
            raise ValueError("polynomial schedule needs at least coefficients (c0, c1)")
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError("polynomial coefficients must be finite")
        if coeffs[0] != 0.0:
            raise ValueError(f"f(0) must be 0, got constant term {coeffs[0]}")
        if abs(math.fsum(coeffs) - 1.0) > 1e-12:
            raise ValueError(f"f(1) must be 1, coefficients sum to {math.fsum(coeffs)}")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def polynomial(cls, coefficients: Sequence[float]) -> "Schedule":
        return cls("polynomial", tuple(coefficients))

    @property
    def is_linear(self) -> bool:
        return self.kind == "linear" or self.coefficients == (0.0, 1.0)

    def __call__(self, s):
        """Evaluate at real or complex ``s``; endpoints are pinned exactly."""
        if self.kind == "linear":
            return s
        if np.isscalar(s) and not isinstance(s, complex):
            if s == 0:
                return 0.0
            if s == 1:
                return 1.0
        return np.polynomial.polynomial.polyval(s, self.coefficients)


def interpolated(h0: PauliSum, h1: PauliSum, f: Schedule, s: float) -> PauliSum:
    """``(1 - f(s)) h0 + f(s) h1``."""
    if h0.n_qubits != h1.n_qubits:
        raise ValueError(f"qubit count mismatch: {h0.n_qubits} vs {h1.n_qubits}")
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    fs = float(f(s))
    return (1.0 - fs) * h0 + fs * h1


def _term_columns(term: PauliString, n_qubits: int):
    """Sparse pattern of one Pauli string: ``P|i> = phase[i] |rows[i]>``."""
    xmask, zmask, n_y = term.masks
    idx = np.arange(1 << n_qubits, dtype=np.int64)
    parity = np.zeros(idx.shape, dtype=np.int64)
    z = idx & zmask
    while np.any(z):
        parity ^= z & 1
        z >>= 1
    phase = (1j ** n_y) * (1 - 2 * parity)
    return idx ^ xmask, idx, phase


def to_matrix(h: PauliSum, sparse: bool | None = None, max_qubits: int = MATRIX_MAX_QUBITS):
    """Materialize ``h`` as a ``2**L`` square matrix.

    Dense ``numpy`` array up to ``DENSE_MAX_QUBITS`` qubits, CSR above,
    unless ``sparse`` forces one or the other.
    """
    n = h.n_qubits
    if n > max_qubits:
        raise RegisterTooLargeError(f"{n} qubits exceeds the materialization cap of {max_qubits}")
    if sparse is None:
        sparse = n > DENSE_MAX_QUBITS
    dim = 1 << n
    rows, cols, data = [], [], []
    for term in h:
        r, c, ph = _term_columns(term, n)
        rows.append(r)
        cols.append(c)
        data.append(term.coefficient * ph)
    if rows:
        mat = sp.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim),
        ).tocsr()
    else:
        mat = sp.csr_matrix((dim, dim), dtype=complex)
    if not any(t.masks[2] for t in h):
        mat = mat.real
    return mat if sparse else mat.toarray()


def diagonal_vector(h: PauliSum) -> np.ndarray:
    """Diagonal of ``to_matrix(h)`` without materializing it."""
    out = np.zeros(1 << h.n_qubits, dtype=float)
    for term in diagonal_part(h):
        _, _, ph = _term_columns(term, h.n_qubits)
        out += term.coefficient * ph.real
    return out


def parity_strings(n_qubits: int) -> Mapping[str, str]:
    return {"X": "X" * n_qubits, "Z": "Z" * n_qubits}
