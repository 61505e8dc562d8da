import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adiaprep.evolution import (
    EvolutionPlan,
    Projector,
    commuting_groups,
    epsilon_at,
    epsilon_at_limit,
    evolve,
    format_diagnostics,
    ground_band_projector,
    infidelity,
    phase_gate_layer,
)
from adiaprep.exceptions import GapClosureError
from adiaprep.hamiltonians import (
    LatticeSpec,
    PauliString,
    PauliSum,
    Preconditioner,
    Schedule,
    build_h0,
    build_heisenberg_xz,
    to_matrix,
)
from adiaprep.spectral import BandSelector

from oracles import expm_hermitian, phase_aligned_distance

LINEAR = Schedule()


def ring(n, jx=5.0):
    return build_heisenberg_xz(LatticeSpec("chain", n, jz=1.0, jx=jx))


def exact_reference(h0, h1, tau, n_steps, psi):
    """Midpoint product of exact propagators built from dense matrices."""
    m0, m1 = to_matrix(h0).astype(complex), to_matrix(h1).astype(complex)
    dt = tau / n_steps
    for k in range(n_steps):
        s = (k + 0.5) / n_steps
        psi = expm_hermitian((1 - s) * m0 + s * m1, dt) @ psi
    return psi


def random_state(dim, rng):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def test_plan_validation():
    assert EvolutionPlan.from_dt(1.0, 0.01).n_steps == 100
    assert EvolutionPlan.from_dt(0.005, 0.01).n_steps == 1
    assert EvolutionPlan.from_dt(1.0, 0.3, dt_max=0.5).n_steps == 4
    with pytest.raises(ValueError):
        EvolutionPlan(1.0, 10)
    with pytest.raises(ValueError):
        EvolutionPlan(-1.0, 10)
    with pytest.raises(ValueError):
        EvolutionPlan(1.0, 1000, stepper="rk4")


def test_eigenstate_of_constant_hamiltonian_only_gains_phase():
    h = ring(4)
    vals, vecs = np.linalg.eigh(to_matrix(h))
    psi0 = vecs[:, 0].astype(complex)
    out = evolve(h, h, LINEAR, EvolutionPlan.from_dt(2.0, 0.01, "exact-step"), psi0)
    np.testing.assert_allclose(out, np.exp(-2.0j * vals[0]) * psi0, atol=1e-9)
    assert infidelity(psi0, out) <= 1e-10


def test_split_step_eigenstate_error_is_fourth_order_in_infidelity():
    # the split step is only O(dt^2) accurate in amplitude, so an eigenstate
    # of a non-commuting H picks up an O(dt^4) infidelity
    h = ring(4)
    psi0 = np.linalg.eigh(to_matrix(h))[1][:, 0].astype(complex)
    errs = [infidelity(psi0, evolve(h, h, LINEAR, EvolutionPlan.from_dt(2.0, dt), psi0)) for dt in (0.01, 0.001)]
    assert errs[1] <= 1e-10
    assert errs[0] / errs[1] > 1e3


def test_zero_time_is_identity():
    h1 = ring(3)
    h0 = build_h0(h1, Preconditioner.zero(3))
    psi = random_state(8, np.random.default_rng(0))
    np.testing.assert_array_equal(evolve(h0, h1, LINEAR, EvolutionPlan(0.0), psi), psi)


@pytest.mark.parametrize("stepper", ["trotter2", "exact-step"])
def test_matches_dense_reference(stepper):
    h1 = ring(4, jx=2.0)
    h0 = build_h0(h1, Preconditioner.uniform(4, 0.4))
    psi = random_state(16, np.random.default_rng(1))
    plan = EvolutionPlan.from_dt(1.5, 0.001, stepper)
    ref = exact_reference(h0, h1, 1.5, plan.n_steps, psi)
    out = evolve(h0, h1, LINEAR, plan, psi)
    tol = 1e-10 if stepper == "exact-step" else 1e-5
    assert np.linalg.norm(out - ref) < tol


def test_trotter_overlap_with_exact_at_fine_step():
    h1 = ring(4)
    h0 = build_h0(h1, Preconditioner.zero(4))
    psi = np.zeros(16, complex)
    psi[0] = psi[15] = 2**-0.5
    for tau in (1.0, 5.0):
        a = evolve(h0, h1, LINEAR, EvolutionPlan.from_dt(tau, 1e-3, "trotter2"), psi)
        b = evolve(h0, h1, LINEAR, EvolutionPlan.from_dt(tau, 1e-3, "exact-step"), psi)
        assert abs(np.vdot(a, b)) ** 2 >= 1 - 1e-6


def test_trotter_error_is_second_order():
    h1 = ring(4)
    h0 = build_h0(h1, Preconditioner.uniform(4, 0.7))
    psi = random_state(16, np.random.default_rng(2))
    errs = []
    for dt in (0.02, 0.01, 0.005):
        a = evolve(h0, h1, LINEAR, EvolutionPlan.from_dt(2.0, dt, "trotter2", dt_max=0.05), psi)
        b = evolve(h0, h1, LINEAR, EvolutionPlan.from_dt(2.0, dt, "exact-step", dt_max=0.05), psi)
        errs.append(phase_aligned_distance(a, b))
    for coarse, fine in zip(errs, errs[1:]):
        assert 3.5 <= coarse / fine <= 4.5


def test_y_terms_are_supported():
    h1 = PauliSum([("XY", 0.8), ("YY", -0.3), ("ZI", 1.0), ("IX", 0.2)])
    h0 = PauliSum([("ZI", 1.0), ("IZ", -0.5)])
    psi = random_state(4, np.random.default_rng(3))
    plan = EvolutionPlan.from_dt(1.0, 0.001)
    ref = exact_reference(h0, h1, 1.0, plan.n_steps, psi)
    assert np.linalg.norm(evolve(h0, h1, LINEAR, plan, psi) - ref) < 1e-5


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.0, 3.0), st.sampled_from(["trotter2", "exact-step"]))
def test_norm_preserved(seed, tau, stepper):
    rng = np.random.default_rng(seed)
    h1 = ring(3, jx=float(rng.uniform(0.5, 5)))
    h0 = build_h0(h1, Preconditioner(tuple(rng.uniform(-2, 2, 3))))
    psi = random_state(8, rng)
    out = evolve(h0, h1, LINEAR, EvolutionPlan.from_dt(tau, 0.01, stepper), psi)
    assert abs(np.linalg.norm(out) - 1) <= 1e-10


def test_columns_evolve_independently():
    h1 = ring(3)
    h0 = build_h0(h1, Preconditioner.uniform(3, 0.2))
    rng = np.random.default_rng(4)
    cols = np.stack([random_state(8, rng) for _ in range(3)], axis=1)
    plan = EvolutionPlan.from_dt(1.0, 0.01)
    block = evolve(h0, h1, LINEAR, plan, cols)
    for j in range(3):
        np.testing.assert_allclose(block[:, j], evolve(h0, h1, LINEAR, plan, cols[:, j]), atol=1e-13)


def test_dimension_mismatch():
    h = ring(3)
    with pytest.raises(ValueError):
        evolve(h, h, LINEAR, EvolutionPlan.from_dt(1.0, 0.01), np.ones(4))


def test_diagnostics_rows():
    h1 = ring(3)
    h0 = build_h0(h1, Preconditioner.zero(3))
    psi = np.zeros(8, complex)
    psi[0] = 1
    rows = []
    plan = EvolutionPlan.from_dt(0.1, 0.01)
    out = evolve(h0, h1, LINEAR, plan, psi, diagnostics=rows)
    assert len(rows) == 10
    assert rows[0][0] == pytest.approx(0.05)
    assert all(abs(r[2]) < 1e-12 for r in rows)
    # recording does not change the result
    np.testing.assert_allclose(out, evolve(h0, h1, LINEAR, plan, psi), atol=1e-13)
    text = format_diagnostics(rows)
    assert text.startswith("# s_k\tenergy\tnorm_drift\n")
    assert len(text.splitlines()) == 11


def test_commuting_groups():
    terms = [PauliString(k) for k in ("XXI", "IXX", "XIX", "YII", "ZZI")]
    groups = commuting_groups(terms)
    assert groups[0] == [0, 1, 2]
    for g in groups:
        for i in g:
            assert all(terms[i].commutes_with(terms[j].letters) for j in g)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=4), st.floats(-2, 2))
def test_phase_gate_layer_matches_preconditioner_exponential(alphas, theta):
    m = Preconditioner(tuple(alphas))
    expected = np.diag(expm_hermitian(to_matrix(m.to_pauli_sum()).astype(complex), theta))
    np.testing.assert_allclose(phase_gate_layer(alphas, theta), expected, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=4), st.floats(-2, 2), st.floats(-2, 2))
def test_phase_gate_layer_composes(alphas, a, b):
    np.testing.assert_allclose(
        phase_gate_layer(alphas, a) * phase_gate_layer(alphas, b), phase_gate_layer(alphas, a + b), atol=1e-12
    )


def test_phase_gate_layer_example():
    np.testing.assert_allclose(phase_gate_layer([1.0, 2.0], 0.5), np.exp(-0.5j * np.array([0, 1, 2, 3])))


# -- projectors and errors -------------------------------------------------

@pytest.mark.parametrize("alpha, index", [(0.3, 0), (-0.3, 15)])
def test_projector_single_classical_state(alpha, index):
    h1 = ring(4)
    h0 = build_h0(h1, Preconditioner.uniform(4, alpha))
    p = ground_band_projector(h0, BandSelector(k=1))
    assert p.rank == 1
    assert abs(p.basis[index, 0]) == pytest.approx(1.0)


def test_projector_classical_pair():
    h0 = build_h0(ring(4), Preconditioner.zero(4))
    p = ground_band_projector(h0, BandSelector(k=2))
    expected = np.zeros((16, 16))
    expected[0, 0] = expected[15, 15] = 1
    np.testing.assert_allclose(p.matrix(), expected, atol=1e-12)


def test_projector_in_sector_is_cat_state():
    h1 = ring(4)
    h0 = build_h0(h1, Preconditioner.zero(4))
    p = ground_band_projector(h0, BandSelector(k=1, sector="auto"), reference=h1)
    target = np.zeros(16)
    target[0] = target[15] = 2**-0.5
    assert abs(np.vdot(target, p.basis[:, 0])) == pytest.approx(1.0)


def test_projector_degenerate_band_raises():
    h0 = build_h0(ring(4), Preconditioner.zero(4))
    with pytest.raises(GapClosureError):
        ground_band_projector(h0, BandSelector(k=1))


def test_projector_is_idempotent_and_hermitian():
    h = PauliSum([("XXI", 0.7), ("IYY", -0.4), ("ZIZ", 1.1), ("IZI", 0.3), ("XIZ", 0.25)])
    e = np.linalg.eigvalsh(to_matrix(h))
    k = next(k for k in range(2, 8) if e[k] - e[k - 1] > 1e-6)
    p = ground_band_projector(h, BandSelector(k=k))
    assert p.rank == k
    mat = p.matrix()
    np.testing.assert_allclose(mat @ mat, mat, atol=1e-12)
    np.testing.assert_allclose(mat, mat.conj().T, atol=1e-12)
    with pytest.raises(ValueError):
        Projector(np.ones((4, 2)))


def test_infidelity_examples():
    a = np.array([1, 0], complex)
    assert infidelity(a, a) == 0.0
    assert infidelity(a, np.array([0, 1], complex)) == 1.0
    assert infidelity(a, np.array([1, 1]) / np.sqrt(2)) == pytest.approx(0.5)
    assert infidelity(a, 1j * a) == 0.0


def test_epsilon_examples():
    p1 = Projector(np.eye(4)[:, :1])
    assert epsilon_at(p1, np.eye(4)[:, :1]) == 0.0
    assert epsilon_at(p1, np.eye(4)[:, 1:2]) == pytest.approx(1.0)
    p0 = Projector(np.eye(4)[:, 1:3])
    assert epsilon_at_limit(p0, p1) == pytest.approx(1.0)
    assert epsilon_at_limit(p1, p1) == 0.0


def test_epsilon_is_worst_case_over_band():
    # sampled worst case never exceeds the singular value and gets close to it
    n = 4
    h1 = ring(n)
    h0 = build_h0(h1, Preconditioner.zero(n))
    p0 = ground_band_projector(h0, BandSelector(k=2))
    p1 = ground_band_projector(h1, BandSelector(k=2))
    evolved = evolve(h0, h1, LINEAR, EvolutionPlan.from_dt(3.0, 0.01), p0.basis)
    eps = epsilon_at(p1, evolved)
    rng = np.random.default_rng(7)
    coeffs = rng.normal(size=(2, 10_000)) + 1j * rng.normal(size=(2, 10_000))
    coeffs /= np.linalg.norm(coeffs, axis=0)
    leak = evolved @ coeffs
    leak = leak - p1.basis @ (p1.basis.conj().T @ leak)
    sampled = np.linalg.norm(leak, axis=0).max()
    assert sampled <= eps + 1e-12
    assert eps - sampled <= 1e-3


def test_epsilon_vanishes_without_interpolation():
    h = build_h0(ring(4), Preconditioner.uniform(4, 0.5))
    p = ground_band_projector(h, BandSelector(k=1))
    out = evolve(h, h, LINEAR, EvolutionPlan.from_dt(4.0, 0.01), p.basis)
    assert epsilon_at(p, out) <= 1e-10
    # non-diagonal H: exact propagation keeps the band for every tau
    h = ring(4)
    p = ground_band_projector(h, BandSelector(k=1, sector="auto"))
    for tau in (1.0, 10.0, 50.0):
        out = evolve(h, h, LINEAR, EvolutionPlan.from_dt(tau, 0.01, "exact-step"), p.basis)
        assert epsilon_at(p, out) <= 1e-10


def test_epsilon_short_time_limit():
    h1 = ring(4)
    h0 = build_h0(h1, Preconditioner.uniform(4, 0.5))
    p0 = ground_band_projector(h0, BandSelector(k=1))
    p1 = ground_band_projector(h1, BandSelector(k=1, sector="auto"), reference=h0)
    limit = epsilon_at_limit(p0, p1)
    out = evolve(h0, h1, LINEAR, EvolutionPlan.from_dt(1e-4, 1e-5, dt_max=1e-5), p0.basis)
    assert epsilon_at(p1, out) == pytest.approx(limit, abs=1e-3)
