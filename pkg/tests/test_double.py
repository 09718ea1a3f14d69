import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qplab.double import (
    DoubleCovector,
    DoubleElement,
    F_sigma,
    InternalMismatchError,
    QuasiTriple,
    decompose_covector,
    delta_minus,
    delta_minus_sigma,
    delta_plus_sigma,
    j_map,
    pairing,
    phi_sigma,
    phi_sigma_closed,
    phi_sigma_defining,
    project_minus,
    project_plus,
    r_matrix,
    r_matrix_via_decomposition,
)
from qplab.lie_core import E2, F2, H2, Covector, K_flat, make_context

FAMILIES = [(g, s) for g in ("sl2r", "sl3r", "su2") for s in ("adH", "id")]


@pytest.fixture
def qt():
    return QuasiTriple.build(make_context("sl2r"), "adH")


def basis_vectors(ctx):
    return [ctx.vector_from_matrix(m) for m in (H2, E2, F2)]


def D(x, y):
    return DoubleElement(x, y)


def test_pairing_examples(qt):
    ctx = qt.context
    H, E, F = basis_vectors(ctx)
    zero = ctx.vector(np.zeros(3))
    assert pairing(D(E, E), D(F, F)) == 0
    assert pairing(D(E, zero), D(F, zero)) == 1
    rng = np.random.default_rng(3)
    x, y = ctx.random_algebra(rng), ctx.random_algebra(rng)
    sig = qt.sigma
    assert abs(pairing(delta_plus_sigma(x, sig), delta_plus_sigma(y, sig))) < 1e-12


def test_embedding_examples(qt):
    H, E, F = basis_vectors(qt.context)
    assert delta_minus_sigma(E, qt.sigma).allclose(D(E, E))
    assert delta_plus_sigma(H, qt.sigma).allclose(D(H, H))
    assert delta_minus(F).allclose(D(F, -F))


def test_projection_examples(qt):
    ctx = qt.context
    H, E, F = basis_vectors(ctx)
    zero = D(ctx.vector(np.zeros(3)), ctx.vector(np.zeros(3)))
    assert project_plus(D(E, E), qt).allclose(zero)
    assert project_minus(D(E, E), qt).allclose(D(E, E))
    assert project_plus(D(H, H), qt).allclose(D(H, H))
    assert project_minus(D(H, H), qt).allclose(zero)


def test_decomposition_examples(qt):
    ctx = qt.context
    xi = Covector(ctx, [0.3, -1.2, 0.5])
    xs = xi.compose(qt.S)
    plus, minus = decompose_covector(DoubleCovector(xi, xs), qt)
    np.testing.assert_allclose(plus.coords, np.concatenate([xi.coords, xs.coords]), atol=1e-15)
    np.testing.assert_allclose(minus.coords, 0, atol=1e-15)
    plus, minus = decompose_covector(DoubleCovector(xi, -xs), qt)
    np.testing.assert_allclose(plus.coords, 0, atol=1e-15)
    np.testing.assert_allclose(minus.coords, np.concatenate([xi.coords, -xs.coords]), atol=1e-15)
    plus, minus = decompose_covector(DoubleCovector(xi, Covector(ctx, np.zeros(3))), qt)
    np.testing.assert_allclose(plus.coords, 0.5 * np.concatenate([xi.coords, xs.coords]))
    np.testing.assert_allclose(minus.coords, 0.5 * np.concatenate([xi.coords, -xs.coords]))


def test_decomposed_parts_annihilate_the_other_summand(qt):
    rng = np.random.default_rng(5)
    alpha = DoubleCovector.from_coords(qt.context, rng.uniform(-1, 1, 6))
    plus, minus = decompose_covector(alpha, qt)
    assert np.abs(plus.coords @ qt.delta_minus).max() < 1e-14
    assert np.abs(minus.coords @ qt.delta_plus).max() < 1e-14


def test_j_examples(qt):
    H, E, F = basis_vectors(qt.context)
    assert j_map(K_flat(E), qt).allclose(D(E, E))
    assert j_map(K_flat(H), qt).allclose(D(H, -H))


def test_F_sigma_examples(qt):
    H, E, F = basis_vectors(qt.context)
    np.testing.assert_allclose(F_sigma(K_flat(E), K_flat(F), qt).coords, 0, atol=1e-14)
    qt_id = QuasiTriple.build(qt.context, "id")
    np.testing.assert_allclose(F_sigma(K_flat(E), K_flat(F), qt_id).coords, 0, atol=1e-14)


def test_phi_sigma_examples(qt):
    H, E, F = basis_vectors(qt.context)
    h, e, f = K_flat(H), K_flat(E), K_flat(F)
    # 2 tr(F [H, E]) = 2 tr(F 2E) = 4
    assert phi_sigma(h, e, f, qt) == pytest.approx(4, abs=1e-13)
    assert phi_sigma(h, h, f, qt) == 0
    assert phi_sigma(e, h, f, qt) == pytest.approx(-4, abs=1e-13)


def test_phi_sigma_mismatch_is_flagged(qt, monkeypatch):
    import qplab.double as dbl
    monkeypatch.setattr(dbl, "phi_sigma_defining", lambda *a: 1.0)
    H, E, F = basis_vectors(qt.context)
    with pytest.raises(InternalMismatchError):
        dbl.phi_sigma(K_flat(H), K_flat(E), K_flat(F), qt)


def test_r_matrix_examples(qt):
    ctx = qt.context
    rng = np.random.default_rng(9)
    xi, eta = Covector(ctx, rng.uniform(-1, 1, 3)), Covector(ctx, rng.uniform(-1, 1, 3))
    zero = Covector(ctx, np.zeros(3))
    half = lambda c: 0.5 * qt.delta_minus @ ctx.gram_inv @ c  # noqa: E731
    np.testing.assert_allclose(r_matrix(DoubleCovector(xi, zero), qt).coords, half(xi.coords))
    np.testing.assert_allclose(r_matrix(DoubleCovector(zero, eta), qt).coords,
                               half(qt.S.T @ eta.coords))
    f = K_flat(basis_vectors(ctx)[2])
    alpha = DoubleCovector(f, -f.compose(qt.S))
    assert r_matrix(alpha, qt).allclose(r_matrix_via_decomposition(alpha, qt))


# -- invariants over every family -------------------------------------------------

@pytest.mark.parametrize("group,sigma", FAMILIES)
def test_isotropy_and_direct_sum(group, sigma):
    qt = QuasiTriple.build(make_context(group), sigma)
    assert qt.isotropy_residual() < 1e-12
    assert qt.direct_sum_rank() == 2 * qt.n


@pytest.mark.parametrize("group,sigma", FAMILIES)
def test_projections_resolve_identity(group, sigma):
    qt = QuasiTriple.build(make_context(group), sigma)
    rng = np.random.default_rng(11)
    for _ in range(100):
        u = DoubleElement.from_coords(qt.context, rng.uniform(-1, 1, 2 * qt.n))
        assert (project_plus(u, qt) + project_minus(u, qt)).allclose(u)


@pytest.mark.parametrize("group,sigma", FAMILIES)
def test_j_characterization(group, sigma):
    qt = QuasiTriple.build(make_context(group), sigma)
    rng = np.random.default_rng(13)
    for _ in range(50):
        xi = Covector(qt.context, rng.uniform(-1, 1, qt.n))
        w = rng.uniform(-1, 1, qt.n)
        lhs = j_map(xi, qt).coords @ qt.pairing @ (qt.delta_plus @ w)
        rhs = xi.coords @ w + (qt.S.T @ xi.coords) @ (qt.S @ w)
        assert abs(lhs - rhs) < 1e-12


@pytest.mark.parametrize("group,sigma", FAMILIES)
def test_F_sigma_vanishes(group, sigma):
    qt = QuasiTriple.build(make_context(group), sigma)
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(100):
        xi, eta = (Covector(qt.context, rng.uniform(-1, 1, qt.n)) for _ in range(2))
        worst = max(worst, np.abs(F_sigma(xi, eta, qt).coords).max())
    assert worst < 1e-12


@pytest.mark.parametrize("group,sigma", FAMILIES)
def test_phi_closed_matches_defining(group, sigma):
    qt = QuasiTriple.build(make_context(group), sigma)
    rng = np.random.default_rng(19)
    for _ in range(100):
        xi, eta, nu = (Covector(qt.context, rng.uniform(-1, 1, qt.n)) for _ in range(3))
        closed = phi_sigma_closed(xi.coords, eta.coords, nu.coords, qt.context)
        assert phi_sigma_defining(xi, eta, nu, qt) == pytest.approx(closed, rel=1e-10, abs=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=9, max_size=9))
def test_phi_is_alternating(vals):
    ctx = make_context("sl2r")
    a, b, c = np.reshape(vals, (3, 3))
    base = phi_sigma_closed(a, b, c, ctx)
    assert phi_sigma_closed(b, a, c, ctx) == pytest.approx(-base, abs=1e-12)
    assert phi_sigma_closed(b, c, a, ctx) == pytest.approx(base, abs=1e-12)
    assert abs(phi_sigma_closed(a, a, c, ctx)) < 1e-12


@pytest.mark.parametrize("group,sigma", FAMILIES)
def test_r_matrix_two_routes(group, sigma):
    qt = QuasiTriple.build(make_context(group), sigma)
    rng = np.random.default_rng(23)
    for _ in range(100):
        alpha = DoubleCovector.from_coords(qt.context, rng.uniform(-1, 1, 2 * qt.n))
        assert r_matrix(alpha, qt).allclose(r_matrix_via_decomposition(alpha, qt))
