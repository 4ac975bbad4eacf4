import numpy as np
import pytest

from momentarb.martingale import convex_order_check, find_transition
from momentarb.oracle import DiscreteMeasure

SUPPORT = np.array([0.0, 0.5, 1.0])


def measure(w, pts=SUPPORT):
    return DiscreteMeasure(pts, np.asarray(w, dtype=float))


def check_transition(Q, mu, nu, tol=1e-8):
    M = Q.matrix
    assert np.all(M >= 0)
    np.testing.assert_allclose(M.sum(axis=1), 1.0, atol=tol)
    np.testing.assert_allclose(M @ Q.points, Q.points, atol=tol)
    np.testing.assert_allclose(mu.weights @ M, nu.weights, atol=tol)


def test_identity():
    mu = measure([0.2, 0.5, 0.3])
    Q = find_transition(mu, mu)
    assert Q is not None
    check_transition(Q, mu, mu)


def test_mean_preserving_spread():
    mu, nu = measure([0, 1, 0]), measure([0.5, 0, 0.5])
    Q = find_transition(mu, nu)
    assert Q is not None
    np.testing.assert_allclose(Q.matrix[1], [0.5, 0, 0.5], atol=1e-9)
    check_transition(Q, mu, nu)
    assert convex_order_check(mu, nu).ordered


def test_mean_mismatch():
    mu, nu = measure([1, 0, 0]), measure([0, 0, 1])
    assert find_transition(mu, nu) is None
    report = convex_order_check(nu, mu)
    assert not report.ordered
    assert report.mean_gap == pytest.approx(1.0)


def test_reverse_spread_infeasible():
    mu, nu = measure([0.5, 0, 0.5]), measure([0, 1, 0])
    assert find_transition(mu, nu) is None
    assert not convex_order_check(mu, nu).ordered


def test_mismatched_support():
    with pytest.raises(ValueError):
        find_transition(measure([1, 0, 0]), DiscreteMeasure(np.array([0.0, 1.0]), np.array([0.5, 0.5])))


def test_vector_support():
    pts = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [1.0, 0.0]])
    mu = DiscreteMeasure(pts, np.array([0, 1.0, 0, 0]))
    nu = DiscreteMeasure(pts, np.array([0.5, 0, 0.5, 0]))
    Q = find_transition(mu, nu)
    assert Q is not None
    check_transition(Q, mu, nu)
    skew = DiscreteMeasure(pts, np.array([0.5, 0, 0, 0.5]))
    assert find_transition(mu, skew) is None


def random_pair(rng):
    N = int(rng.integers(2, 7))
    pts = np.sort(rng.uniform(0, 1, N))
    mu_w = rng.dirichlet(np.ones(N))
    if rng.random() < 0.5:
        # nu = mu Q for a random martingale kernel: feasible by construction
        Q = np.eye(N)
        for i in range(N):
            lo, hi = rng.integers(0, i + 1), rng.integers(i, N)
            if lo < i < hi:
                t = (pts[hi] - pts[i]) / (pts[hi] - pts[lo])
                Q[i] = 0
                Q[i, lo], Q[i, hi] = t, 1 - t
        nu_w = mu_w @ Q
    else:
        nu_w = rng.dirichlet(np.ones(N))
        mean_mu, mean_nu = mu_w @ pts, nu_w @ pts
        # mix with an endpoint mass to match the mean
        end = 0 if mean_nu > mean_mu else N - 1
        lam = (mean_mu - mean_nu) / (pts[end] - mean_nu) if pts[end] != mean_nu else 0.0
        lam = float(np.clip(lam, 0.0, 1.0))
        nu_w = (1 - lam) * nu_w
        nu_w[end] += lam
    nu_w = np.clip(nu_w, 0, None)
    return measure(mu_w / mu_w.sum(), pts), measure(nu_w / nu_w.sum(), pts)


def test_random_agreement():
    rng = np.random.default_rng(40)
    for _ in range(100):
        mu, nu = random_pair(rng)
        Q = find_transition(mu, nu)
        assert (Q is not None) == convex_order_check(mu, nu).ordered
        if Q is not None:
            check_transition(Q, mu, nu)


def test_permutation_invariance():
    rng = np.random.default_rng(41)
    for _ in range(30):
        mu, nu = random_pair(rng)
        perm = rng.permutation(len(mu.weights))
        mu_p = measure(mu.weights[perm], mu.points[perm, 0])
        nu_p = measure(nu.weights[perm], nu.points[perm, 0])
        assert (find_transition(mu, nu) is None) == (find_transition(mu_p, nu_p) is None)
