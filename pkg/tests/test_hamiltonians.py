import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adiaprep.exceptions import RegisterTooLargeError
from adiaprep.hamiltonians import (
    LatticeSpec,
    PauliString,
    PauliSum,
    Preconditioner,
    Schedule,
    build_h0,
    build_heisenberg_xz,
    diagonal_part,
    interpolated,
    preconditioner_diagonal,
    to_matrix,
)

from oracles import dense, heisenberg_dense, kron_string, ring_bonds

letters_st = st.text(alphabet="IXYZ", min_size=3, max_size=3)
coeff_st = st.floats(-3, 3, allow_nan=False)
sum_st = st.lists(st.tuples(letters_st, coeff_st), min_size=0, max_size=6).map(
    lambda ts: PauliSum(ts, n_qubits=3)
)


def test_chain_two_sites_single_edge():
    h = build_heisenberg_xz(LatticeSpec("chain", 2, jz=1.0, jx=5.0))
    assert h.as_dict() == {"ZZ": -0.5, "XX": -2.5}
    np.testing.assert_allclose(np.linalg.eigvalsh(to_matrix(h)), [-3, -2, 2, 3], atol=1e-12)


def test_chain_three_sites_classical():
    h = build_heisenberg_xz(LatticeSpec("chain", 3, jz=1.0, jx=1.0))
    zz = diagonal_part(h)
    assert len(zz) == 3
    diag = np.real(np.diag(to_matrix(zz)))
    assert diag.min() == pytest.approx(-1.5)
    assert set(np.flatnonzero(np.isclose(diag, -1.5))) == {0, 7}


def test_torus_three_by_three_counts():
    lat = LatticeSpec("torus", (3, 3), jz=1.0, jx=2.0)
    assert len(lat.edges()) == 18
    h = build_heisenberg_xz(lat)
    assert len(h) == 36
    assert len(diagonal_part(h)) == 18


@pytest.mark.parametrize(
    "lat, n_edges",
    [
        (LatticeSpec("chain", 2), 1),
        (LatticeSpec("chain", 3), 3),
        (LatticeSpec("chain", 7), 7),
        (LatticeSpec("torus", (3, 4)), 24),
        (LatticeSpec("torus", (2, 3)), 9),
        (LatticeSpec("torus", (2, 2)), 4),
    ],
)
def test_edge_deduplication(lat, n_edges):
    assert len(lat.edges()) == n_edges
    zz = [t for t in build_heisenberg_xz(lat) if set(t.letters) <= {"I", "Z"}]
    assert len(zz) == n_edges
    assert all(t.coefficient == -0.5 * lat.jz for t in zz)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(geometry="chain", sites=1),
        dict(geometry="torus", sites=(1, 4)),
        dict(geometry="chain", sites=4, jx=0.0),
        dict(geometry="chain", sites=4, jz=-1.0),
        dict(geometry="ring", sites=4),
    ],
)
def test_lattice_rejects(kwargs):
    with pytest.raises(ValueError):
        LatticeSpec(**kwargs)


def test_heisenberg_matches_kron_oracle():
    h = build_heisenberg_xz(LatticeSpec("chain", 5, jz=0.7, jx=1.3))
    np.testing.assert_allclose(to_matrix(h), heisenberg_dense(5, 0.7, 1.3, ring_bonds(5)), atol=1e-14)


def test_diagonal_part_examples():
    h1 = build_heisenberg_xz(LatticeSpec("chain", 2, jz=1.0, jx=5.0))
    assert diagonal_part(h1) == PauliSum([("ZZ", -0.5)])
    xs = PauliSum([("XI", 1.0), ("IX", 2.0)])
    assert len(diagonal_part(xs)) == 0


@settings(max_examples=50, deadline=None)
@given(sum_st)
def test_diagonal_part_idempotent_and_diagonal(h):
    d = diagonal_part(h)
    assert diagonal_part(d) == d
    mat = to_matrix(h)
    np.testing.assert_allclose(to_matrix(d), np.diag(np.diag(mat)), atol=1e-12)


def test_preconditioner_diagonal_examples():
    m = Preconditioner((0.3, -1.1, 2.5))
    assert preconditioner_diagonal(m, 5) == pytest.approx(0.3 + 2.5)
    assert preconditioner_diagonal(m, 0) == 0.0
    ones = Preconditioner((1.0,) * 4)
    assert [preconditioner_diagonal(ones, i) for i in range(16)] == [bin(i).count("1") for i in range(16)]
    with pytest.raises(IndexError):
        preconditioner_diagonal(m, 8)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=5))
def test_preconditioner_pauli_terms_exact(alphas):
    m = Preconditioner(tuple(alphas))
    mat = to_matrix(m.to_pauli_sum())
    expected = np.array([preconditioner_diagonal(m, i) for i in range(2 ** m.n_qubits)])
    np.testing.assert_allclose(np.diag(mat), expected, atol=1e-12, rtol=0)
    assert np.count_nonzero(mat - np.diag(np.diag(mat))) == 0
    np.testing.assert_allclose(m.diagonal(), expected, atol=1e-12)


def test_translation_invariant_requires_equal_weights():
    with pytest.raises(ValueError):
        Preconditioner((1.0, 2.0), translation_invariant=True)
    assert Preconditioner.uniform(3, 0.5).alphas == (0.5, 0.5, 0.5)


def test_build_h0_examples():
    h1 = build_heisenberg_xz(LatticeSpec("chain", 4))
    assert build_h0(h1, Preconditioner.zero(4)) == diagonal_part(h1)
    diag_h1 = diagonal_part(h1)
    m = Preconditioner((0.1, 0.2, 0.3, 0.4))
    assert build_h0(diag_h1, m) == diag_h1 + m.to_pauli_sum()
    h0 = build_h0(PauliSum([("X", 1.0)]), Preconditioner((2.0,)))
    np.testing.assert_allclose(to_matrix(h0), np.diag([0.0, 2.0]), atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=4, max_size=4))
def test_build_h0_is_diagonal(alphas):
    h1 = build_heisenberg_xz(LatticeSpec("chain", 4, jz=1.0, jx=2.0))
    mat = to_matrix(build_h0(h1, Preconditioner(tuple(alphas))))
    assert np.count_nonzero(mat - np.diag(np.diag(mat))) == 0


def test_interpolated_endpoints_exact():
    h1 = build_heisenberg_xz(LatticeSpec("chain", 4, jz=1.0, jx=5.0))
    h0 = build_h0(h1, Preconditioner.uniform(4, 0.7))
    for f in (Schedule(), Schedule.polynomial((0.0, 0.0, 3.0, -2.0))):
        assert interpolated(h0, h1, f, 0.0) == h0
        assert interpolated(h0, h1, f, 1.0) == h1


def test_interpolated_matches_explicit_sum():
    lat = LatticeSpec("chain", 4, jz=1.0, jx=5.0)
    h1 = build_heisenberg_xz(lat)
    m = Preconditioner.uniform(4, 0.9)
    s = 0.37
    got = interpolated(build_h0(h1, m), h1, Schedule(), s)
    expected = np.zeros((16, 16), dtype=complex)
    for i, j in lat.edges():
        zz = ["I"] * 4
        zz[i] = zz[j] = "Z"
        xx = ["I"] * 4
        xx[i] = xx[j] = "X"
        expected = expected - 0.5 * (lat.jz * kron_string(zz) + s * lat.jx * kron_string(xx))
    expected = expected + (1 - s) * np.diag(m.diagonal())
    np.testing.assert_allclose(to_matrix(got), expected, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(sum_st, sum_st, st.floats(0, 1))
def test_interpolation_is_linear_in_matrices(h0, h1, s):
    f = Schedule.polynomial((0.0, 0.5, 0.5))
    fs = f(s)
    lhs = to_matrix(interpolated(h0, h1, f, s))
    rhs = (1 - fs) * to_matrix(h0) + fs * to_matrix(h1)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_interpolated_rejects_mismatch():
    with pytest.raises(ValueError):
        interpolated(PauliSum([("Z", 1.0)]), PauliSum([("ZZ", 1.0)]), Schedule(), 0.5)
    with pytest.raises(ValueError):
        interpolated(PauliSum([("Z", 1.0)]), PauliSum([("X", 1.0)]), Schedule(), 1.5)


def test_to_matrix_examples():
    np.testing.assert_array_equal(to_matrix(PauliSum([("Z", 1.0)])), np.diag([1.0, -1.0]))
    np.testing.assert_array_equal(to_matrix(PauliSum([("XX", 1.0)])), np.fliplr(np.eye(4)))


@settings(max_examples=60, deadline=None)
@given(sum_st)
def test_to_matrix_matches_kron_and_is_hermitian(h):
    mat = to_matrix(h)
    np.testing.assert_allclose(mat, dense([(t.letters, t.coefficient) for t in h], 3), atol=1e-12)
    np.testing.assert_allclose(mat, np.conj(mat).T, atol=1e-12)


def test_sparse_and_dense_agree():
    h = build_heisenberg_xz(LatticeSpec("chain", 6))
    np.testing.assert_allclose(to_matrix(h, sparse=True).toarray(), to_matrix(h), atol=0)


def test_to_matrix_cap():
    with pytest.raises(RegisterTooLargeError):
        to_matrix(PauliSum([("Z" * 16, 1.0)]))


def test_pauli_sum_merges_and_drops_zeros():
    h = PauliSum([("XZ", 1.0), ("XZ", -1.0), ("ZZ", 2.0), ("ZZ", 0.5)])
    assert h.as_dict() == {"ZZ": 2.5}
    with pytest.raises(ValueError):
        PauliSum([("XZ", 1.0), ("Z", 1.0)])
    with pytest.raises(ValueError):
        PauliString("XQ", 1.0)
    with pytest.raises(ValueError):
        PauliString("XX", float("nan"))


@settings(max_examples=40, deadline=None)
@given(sum_st)
def test_text_round_trip(h):
    assert PauliSum.loads(h.dumps()) == h


def test_text_format_golden():
    h = build_heisenberg_xz(LatticeSpec("chain", 2, jz=1.0, jx=5.0))
    assert h.dumps() == "# n_qubits 2; qubit 0 is the leftmost letter\n-0.5 ZZ\n-2.5 XX\n"
    assert PauliSum.loads("# n_qubits 3\n").n_qubits == 3
    with pytest.raises(ValueError, match="line 2"):
        PauliSum.loads("1.0 ZZ\nfoo\n")


def test_schedule_validation():
    f = Schedule.polynomial((0.0, 0.0, 1.0))
    assert f(0.5) == pytest.approx(0.25)
    assert f(0.0) == 0.0 and f(1.0) == 1.0
    with pytest.raises(ValueError):
        Schedule.polynomial((0.1, 0.9))
    with pytest.raises(ValueError):
        Schedule.polynomial((0.0, 0.5))
    with pytest.raises(ValueError):
        Schedule("cosine")
