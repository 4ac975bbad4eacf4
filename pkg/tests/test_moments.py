import numpy as np
import pytest

from momentarb.conic import min_eigenvalue
from momentarb.market import MarketInstance
from momentarb.moments import (
    MAX_ELEMENTS,
    BetaBound,
    MomentIndex,
    assemble,
    build_beta_matrix,
    build_localizing_matrix,
    build_moment_matrix,
)
from momentarb.oracle import DiscreteMeasure
from momentarb.payoffs import AbsLinear, PayoffSemigroup, SemigroupElement


def single_index(d, derivs=(), p=0.5, q=()):
    sg = PayoffSemigroup(1, list(derivs))
    pinned = {sg.generator_element(0): p}
    for j, v in enumerate(q):
        pinned[sg.generator_element(1 + j)] = v
    return MomentIndex(sg, 2 * d, pinned)


def slot(index, exps):
    return index.slot_of[SemigroupElement(exps)]


def test_moment_matrix_single_asset():
    idx = single_index(1)
    M = build_moment_matrix(idx, 1)
    y = np.zeros(idx.n_slots)
    y[slot(idx, (2,))] = 0.3
    np.testing.assert_allclose(M.evaluate(y), [[1, 0.5], [0.5, 0.3]])

    M0 = build_moment_matrix(single_index(0), 0)
    np.testing.assert_allclose(M0.evaluate(np.zeros(0)), [[1.0]])


def test_moment_matrix_with_straddle_cell():
    idx = single_index(1, [AbsLinear((1.0,), 1.0, "st")], 0.5, [0.6])
    M = build_moment_matrix(idx, 1)
    assert M.dim == 3
    cell = M.cell(2, 2)
    assert cell.constant == pytest.approx(0.0)
    assert cell.terms == ((slot(idx, (2, 0)), 1.0),)
    assert M.cell(0, 2).constant == pytest.approx(0.6)


def test_localizing_single_asset():
    L1 = build_localizing_matrix(single_index(1), 0, 1)
    np.testing.assert_allclose(L1.evaluate(np.zeros(1)), [[0.5]])

    idx = single_index(2)
    L2 = build_localizing_matrix(idx, 0, 2)
    y = np.arange(1.0, idx.n_slots + 1)
    f2, f3 = y[slot(idx, (2,))], y[slot(idx, (3,))]
    np.testing.assert_allclose(L2.evaluate(y), [[0.5, f2], [f2, f3]])

    L0 = build_localizing_matrix(single_index(1), 0, 0)
    np.testing.assert_allclose(L0.evaluate(np.zeros(1)), [[0.5]])


def test_localizing_straddle_cell_is_odd_abs_slot():
    idx = single_index(2, [AbsLinear((1.0,), 1.0, "st")], 0.5, [0.6])
    L = build_localizing_matrix(idx, 1, 2)
    cell = L.cell(1, 1)
    assert cell.constant == 0.0
    assert cell.terms == ((slot(idx, (2, 1)), 1.0),)


def test_beta_matrix_examples():
    B1 = build_beta_matrix(single_index(1), 1.0, 1)
    np.testing.assert_allclose(B1.evaluate(np.zeros(1)), [[0.5]])

    idx = single_index(2)
    B2 = build_beta_matrix(idx, 1.0, 2)
    y = np.zeros(idx.n_slots)
    y[slot(idx, (2,))] = 0.4
    assert B2.evaluate(y)[0, 1] == pytest.approx(0.5 - 0.4)
    with pytest.raises(ValueError):
        build_beta_matrix(idx, 0.0, 1)


def test_beta_matrix_spread_market():
    market = MarketInstance(
        prices=(0.5, 0.5),
        support=(1.0, 1.0),
        derivatives=(AbsLinear.straddle(2, 0, 0.5), AbsLinear.straddle(2, 1, 0.5)),
        derivative_prices=(0.25, 0.25),
    )
    target = AbsLinear.spread(2, 0, 1, 0.0)
    prob = assemble(market, 1, target)
    assert len(prob.blocks) == 7
    beta = prob.beta.value
    assert beta == pytest.approx(1 + 1 + 0.5 + 0.5 + 1)
    B = prob.blocks[-1]
    k = prob.index.slot_of[prob.index.semigroup.generator_element(4)]
    y = np.zeros(prob.index.n_slots)
    y[k] = 0.3
    assert B.evaluate(y)[0, 0] == pytest.approx(beta - 0.5 - 0.5 - 0.25 - 0.25 - 0.3)


def test_beta_bound():
    sg = PayoffSemigroup(1, [AbsLinear.straddle(1, 0, 0.4)])
    assert BetaBound.from_box(sg, [1.0]).value == pytest.approx(1.6)
    with pytest.raises(ValueError):
        BetaBound(-1.0)


def test_block_counts_and_dims():
    m = MarketInstance(prices=(0.5,), support=(1.0,))
    prob = assemble(m, 1)
    assert prob.dims == [2, 1, 1]
    m2 = MarketInstance(
        prices=(0.3, 0.6), support=(1.0, 2.0),
        derivatives=(AbsLinear.straddle(2, 0, 0.5), AbsLinear.spread(2, 0, 1, 0.1), AbsLinear.straddle(2, 1, 1.0)),
        derivative_prices=(0.3, 0.4, 0.5),
    )
    for d in (1, 2):
        prob = assemble(m2, d)
        assert len(prob.blocks) == 2 + 3 + 2
        assert prob.dims[0] == sum(1 for e in prob.index.elements if e.degree <= d)


def test_symmetry_and_pinning():
    m = MarketInstance(
        prices=(0.4, 0.7), support=(1.0, 1.0),
        derivatives=(AbsLinear.spread(2, 0, 1, 0.1),), derivative_prices=(0.35,),
    )
    prob = assemble(m, 2)
    rng = np.random.default_rng(0)
    ya, yb = rng.normal(size=(2, prob.index.n_slots))
    for blk in prob.blocks:
        A = blk.evaluate(ya)
        np.testing.assert_array_equal(A, A.T)
    M_a, M_b = prob.blocks[0].evaluate(ya), prob.blocks[0].evaluate(yb)
    assert M_a[0, 0] == M_b[0, 0] == 1.0
    np.testing.assert_array_equal(M_a[0, 1:4], M_b[0, 1:4])
    np.testing.assert_allclose(M_a[0, 1:4], [0.4, 0.7, 0.35])


def random_measure(rng, n, size=None):
    size = size or int(rng.integers(1, 21))
    pts = rng.uniform(0, 1, size=(size, n))
    w = rng.dirichlet(np.ones(size))
    return DiscreteMeasure(pts, w)


def market_from_measure(mu, derivs, support):
    prices = mu.mean()
    q = [mu.expect(g) for g in derivs]
    return MarketInstance(tuple(prices), tuple(support), tuple(derivs), tuple(q))


def test_measure_consistency_psd():
    rng = np.random.default_rng(3)
    for trial in range(30):
        n = int(rng.integers(1, 3))
        derivs = [AbsLinear(tuple(rng.uniform(-1, 1, n)), float(rng.uniform(0, 1))) for _ in range(rng.integers(0, 3))]
        mu = random_measure(rng, n)
        market = market_from_measure(mu, derivs, [1.0] * n)
        for d in (1, 2):
            prob = assemble(market, d)
            sg, idx = prob.index.semigroup, prob.index
            y = idx.assignment(lambda e: mu.expect(lambda x: sg.evaluate(e, x)))
            for blk in prob.blocks:
                assert min_eigenvalue(blk.evaluate(y)) >= -1e-9, (trial, d, blk.label)


def test_cells_reproduce_measure_expectations():
    rng = np.random.default_rng(4)
    derivs = [AbsLinear.straddle(2, 0, 0.3), AbsLinear.spread(2, 0, 1, -0.2)]
    mu = random_measure(rng, 2, 12)
    market = market_from_measure(mu, derivs, [1.0, 1.0])
    prob = assemble(market, 2)
    sg, idx = prob.index.semigroup, prob.index
    y = idx.assignment(lambda e: mu.expect(lambda x: sg.evaluate(e, x)))
    M = prob.blocks[0]
    for i, s in enumerate(M.basis):
        for j, t in enumerate(M.basis):
            direct = mu.expect(lambda x: sg.evaluate(s, x) * sg.evaluate(t, x))
            assert M.cell(i, j).evaluate(y) == pytest.approx(direct, abs=1e-12)


def test_element_limit():
    derivs = tuple(AbsLinear.straddle(3, i % 3, 0.1 * i) for i in range(12))
    m = MarketInstance((0.5, 0.5, 0.5), (1.0, 1.0, 1.0), derivs, tuple(0.5 for _ in derivs))
    with pytest.raises(ValueError, match=str(MAX_ELEMENTS)):
        assemble(m, 3)
