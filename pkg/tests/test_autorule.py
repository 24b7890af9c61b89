import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jplay.autorule import (
    AdmmConfig,
    AdmmState,
    fit_autorule,
    g_update,
    h_update,
    project_nonneg,
    project_unit_columns,
    theta_update,
)
from jplay.embed import fit_lpp
from jplay.errors import ParameterError
from jplay.graph import build_graph

from oracles import augmented_lagrangian, central_gradient


def test_project_nonneg_examples():
    np.testing.assert_array_equal(project_nonneg([[-1, 2], [0, -3]]), [[0, 2], [0, 0]])
    M = np.array([[0.5, 0.0], [3.0, 1.0]])
    np.testing.assert_array_equal(project_nonneg(M), M)


def test_project_nonneg_matches_loop():
    M = np.random.default_rng(0).normal(size=(4, 4))
    ref = np.array([[v if v > 0 else 0.0 for v in row] for row in M])
    np.testing.assert_array_equal(project_nonneg(M), ref)


def test_project_unit_columns_examples():
    np.testing.assert_array_equal(project_unit_columns([[3.0], [4.0]]), [[0.6], [0.8]])
    np.testing.assert_array_equal(project_unit_columns([[0.3], [0.4]]), [[0.3], [0.4]])
    np.testing.assert_array_equal(project_unit_columns(np.zeros((3, 1))), np.zeros((3, 1)))


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), scale=st.floats(1e-3, 1e3))
def test_projections_idempotent(seed, scale):
    M = np.random.default_rng(seed).normal(size=(5, 7)) * scale
    U = project_unit_columns(M)
    assert np.array_equal(project_unit_columns(U), U)
    assert np.all(np.linalg.norm(U, axis=0) <= 1.0)
    N = project_nonneg(M)
    assert np.array_equal(project_nonneg(N), N)


def test_config_validation():
    with pytest.raises(ParameterError):
        AdmmConfig(rho=1.0)
    with pytest.raises(ParameterError):
        AdmmConfig(mu0=10.0, mu_max=1.0)
    with pytest.raises(ParameterError):
        AdmmConfig(eps=0)


def random_state(rng, d_in, d_out, n, mu=None):
    sh = lambda *s: rng.normal(scale=0.3, size=s)
    return AdmmState(
        theta=sh(d_out, d_in), H=sh(d_out, n), G=sh(d_out, d_in),
        Q=np.abs(sh(d_out, n)), S=sh(d_out, n),
        lam1=sh(d_out, n), lam2=sh(d_out, d_in), lam3=sh(d_out, n), lam4=sh(d_out, n),
        mu=rng.uniform(0.1, 2.0) if mu is None else mu,
    )


def small_instance(seed, d_in=4, d_out=3, n=6):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (d_in, n)) / np.sqrt(d_in)
    g = build_graph(X, k=min(3, n - 1))
    return rng, X, g, random_state(rng, d_in, d_out, n)


def _lagr(state, X, g, eta, **over):
    parts = dict(theta=state.theta, H=state.H, G=state.G, Q=state.Q, S=state.S)
    parts.update(over)
    lams = (state.lam1, state.lam2, state.lam3, state.lam4)
    return augmented_lagrangian(parts["theta"], parts["H"], parts["G"], parts["Q"], parts["S"],
                                lams, state.mu, X, g.lap, eta)


def test_theta_fixed_point():
    rng, X, g, st_ = small_instance(0)
    theta = st_.theta
    TX = theta @ X
    zero = np.zeros_like(TX)
    s = AdmmState(theta=theta, H=TX, G=theta, Q=TX, S=TX, lam1=zero, lam2=np.zeros_like(theta),
                  lam3=zero, lam4=zero, mu=0.7)
    np.testing.assert_allclose(theta_update(s, X, g, AdmmConfig(eta=0.0)), theta, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_theta_update_zeroes_gradient(seed):
    rng, X, g, s = small_instance(seed)
    cfg = AdmmConfig(eta=0.8)
    theta = theta_update(s, X, g, cfg)
    grad = central_gradient(lambda T: _lagr(s, X, g, cfg.eta, theta=T), theta)
    assert np.linalg.norm(grad) <= 1e-8 * (1 + np.linalg.norm(theta))


@pytest.mark.parametrize("seed", range(5))
def test_theta_update_matches_dense_solve(seed):
    rng, X, g, s = small_instance(seed)
    eta, mu = 0.8, s.mu
    d_out, d_in = s.theta.shape
    # vectorize Theta (row-major): sum of Kronecker terms
    A = eta * X @ g.lap @ X.T + 3 * mu * X @ X.T + mu * np.eye(d_in)
    rhs = (mu * s.H @ X.T + s.lam1 @ X.T + mu * s.G + s.lam2 + mu * s.Q @ X.T + s.lam3 @ X.T
           + mu * s.S @ X.T + s.lam4 @ X.T)
    K = np.kron(np.eye(d_out), A.T)
    ref = np.linalg.solve(K, rhs.ravel()).reshape(d_out, d_in)
    np.testing.assert_allclose(theta_update(s, X, g, AdmmConfig(eta=eta)), ref, atol=1e-10)


def test_h_update_trivial():
    rng, X, g, s = small_instance(1)
    s.G = np.zeros_like(s.G)
    s.lam1 = np.zeros_like(s.lam1)
    np.testing.assert_allclose(h_update(s, X), s.theta @ X, atol=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_h_update_gradient_and_dense_solve(seed):
    rng, X, g, s = small_instance(seed)
    H = h_update(s, X)
    grad = central_gradient(lambda M: _lagr(s, X, g, 0.5, H=M), H)
    assert np.linalg.norm(grad) <= 1e-8
    A = s.G @ s.G.T + s.mu * np.eye(s.G.shape[0])
    ref = np.linalg.solve(A, s.G @ X + s.mu * s.theta @ X - s.lam1)
    np.testing.assert_allclose(H, ref, atol=1e-10)


def test_g_update_trivial():
    rng, X, g, s = small_instance(2)
    s.H = np.zeros_like(s.H)
    s.lam2 = np.zeros_like(s.lam2)
    np.testing.assert_allclose(g_update(s, X), s.theta, atol=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_g_update_gradient_and_dense_solve(seed):
    rng, X, g, s = small_instance(seed)
    G = g_update(s, X)
    grad = central_gradient(lambda M: _lagr(s, X, g, 0.5, G=M), G)
    assert np.linalg.norm(grad) <= 1e-8
    A = s.H @ s.H.T + s.mu * np.eye(s.H.shape[0])
    ref = np.linalg.solve(A, s.H @ X.T + s.mu * s.theta - s.lam2)
    np.testing.assert_allclose(G, ref, atol=1e-10)


def test_supervised_h_update_gradient():
    rng, X, g, s = small_instance(3)
    P_l = rng.normal(size=(2, 3))
    Y = np.eye(2)[:, rng.integers(0, 2, X.shape[1])]
    H = h_update(s, X, P_l=P_l, Y=Y, alpha=0.7)
    lams = (s.lam1, s.lam2, s.lam3, s.lam4)
    f = lambda M: augmented_lagrangian(s.theta, M, s.G, s.Q, s.S, lams, s.mu, X, g.lap, 0.5,
                                       P_l=P_l, Y=Y, alpha=0.7)
    assert np.linalg.norm(central_gradient(f, H)) <= 1e-8


def _layer(seed, d=6, d_out=3, n=20, k=3):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (d, n))
    X /= np.linalg.norm(X, axis=0).max()
    g = build_graph(X, k=k)
    return X, g, fit_lpp(X, g, d_out)


def test_zero_budget_returns_initial():
    X, g, th0 = _layer(0)
    th, rep = fit_autorule(X, th0, g, AdmmConfig(max_iter=0))
    np.testing.assert_array_equal(th.M, th0.M)
    assert not rep.converged and rep.iterations == 0


def test_converges_on_fixed_seed_instance():
    X, g, th0 = _layer(42)
    cfg = AdmmConfig(eta=1.0)
    th, rep = fit_autorule(X, th0, g, cfg)
    assert rep.converged
    assert max(rep.residuals) < 1e-6
    TX = th.M @ X
    assert np.linalg.norm(np.minimum(TX, 0)) <= cfg.eps
    assert np.linalg.norm(TX, axis=0).max() <= 1 + 2 * cfg.eps
    assert rep.mu <= cfg.mu_max


def test_iterate_invariants_hold_every_iteration(monkeypatch):
    import jplay.autorule as ar

    seen = []
    orig = ar.residuals

    def spy(state, X, relative=False):
        seen.append((state.Q.min(), np.linalg.norm(state.S, axis=0).max(), state.mu))
        return orig(state, X, relative)

    monkeypatch.setattr(ar, "residuals", spy)
    X, g, th0 = _layer(7)
    fit_autorule(X, th0, g, AdmmConfig())
    assert seen
    for qmin, smax, mu in seen:
        assert qmin >= 0
        assert smax <= 1 + 1e-12
        assert mu <= 1e6


def test_deterministic():
    X, g, th0 = _layer(3)
    a, _ = fit_autorule(X, th0, g, AdmmConfig())
    b, _ = fit_autorule(X, th0, g, AdmmConfig())
    assert np.array_equal(a.M, b.M)


def test_relative_residuals_option():
    X, g, th0 = _layer(5)
    _, rep = fit_autorule(X, th0, g, AdmmConfig(relative_residuals=True))
    assert rep.converged
