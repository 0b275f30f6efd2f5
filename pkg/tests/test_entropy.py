"""Entropy engine: closed forms, transfer-matrix DP vs enumeration, context
lengths, the weighted conditional entropy, rates, varentropy, PMI."""

import math

import numpy as np
import pytest

from replab.entropy import (ENUM_LIMIT_DEFAULT, EntropyTable, EntropyValue,
                            block_min_entropy, block_renyi_entropy,
                            check_chain_rule, conditional_block_renyi,
                            conditional_min_entropy, conditional_renyi,
                            context_length, entropy_rate, modal_block,
                            plug_in_entropy, pmi_bound_estimate,
                            renyi_entropy, varentropy,
                            weighted_conditional_entropy)
from replab.seqstat import SymbolSeq, seq_from_text
from replab.sources import (HMMSource, IIDSource, MarkovSource, SeedSpec,
                            enumerate_log_block_probabilities)

INF = math.inf
TEST_CHAIN = [[0.9, 0.1], [0.2, 0.8]]
# chains whose collision-entropy rate is nearly reached by k = 10
MILD_CHAINS = ([[0.6, 0.4], [0.45, 0.55]],
               [[0.55, 0.45], [0.4, 0.6]],
               [[0.6, 0.4], [0.35, 0.65]])

GAMMAS = [0.0, 0.5, 2.0, 3.0, INF]


def cycle_chain(d=3):
    rows = np.roll(np.eye(d), 1, axis=1)
    return MarkovSource(rows, allow_periodic=True, label=f"cycle{d}")


def random_dist(rng, n):
    return rng.dirichlet(np.ones(n))


# ---------------------------------------------------------------------------
# plain Renyi entropy


def test_renyi_uniform_collapses_all_orders():
    for d in (2, 3, 7):
        u = np.full(d, 1.0 / d)
        for g in [0.0, 0.5, 1.0, 2.0, 5.0, INF]:
            assert renyi_entropy(u, g).lo == pytest.approx(math.log(d), abs=1e-12)


def test_renyi_bernoulli_examples():
    p = [0.75, 0.25]
    assert renyi_entropy(p, 2).lo == pytest.approx(-math.log(0.625), abs=1e-12)
    assert renyi_entropy(p, INF).lo == pytest.approx(-math.log(0.75), abs=1e-12)


def test_renyi_validation():
    with pytest.raises(ValueError):
        renyi_entropy([0.5, 0.5], -1)
    with pytest.raises(ValueError, match="1e-6"):
        renyi_entropy([0.5, 0.5], 1.0000001)
    with pytest.raises(ValueError):
        renyi_entropy([0.5, 0.6], 2)


def test_gamma_monotonicity_on_random_distributions():
    rng = np.random.default_rng(0)
    orders = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 4.0, 16.0, INF]
    for _ in range(500):
        dist = random_dist(rng, int(rng.integers(2, 8)))
        values = [renyi_entropy(dist, g).lo for g in orders]
        for a, b in zip(values, values[1:]):
            assert a >= b - 1e-9


def test_magnitude_bound_above_order_one():
    rng = np.random.default_rng(1)
    for _ in range(200):
        dist = random_dist(rng, 5)
        h_inf = renyi_entropy(dist, INF).lo
        for g in (1.5, 2.0, 3.0, 10.0):
            assert renyi_entropy(dist, g).lo <= g / (g - 1) * h_inf + 1e-9


# ---------------------------------------------------------------------------
# conditional Renyi (Arimoto)


def test_conditional_copy_channel_is_zero():
    joint = np.diag([0.2, 0.3, 0.5])
    for g in [0.0, 0.5, 1.0, 2.0, INF]:
        assert conditional_renyi(joint, g).lo == pytest.approx(0.0, abs=1e-12)


def test_conditional_independence_equals_marginal():
    rng = np.random.default_rng(2)
    px, py = random_dist(rng, 4), random_dist(rng, 3)
    joint = np.outer(px, py)
    for g in [0.0, 0.5, 1.0, 2.0, 7.0, INF]:
        assert conditional_renyi(joint, g).lo == pytest.approx(
            renyi_entropy(px, g).lo, abs=1e-9)


def test_conditional_min_entropy_formula_and_limit():
    rng = np.random.default_rng(3)
    for _ in range(25):
        joint = rng.dirichlet(np.ones(9)).reshape(3, 3)
        closed = -math.log(joint.max(axis=0).sum())
        assert conditional_renyi(joint, INF).lo == pytest.approx(closed, abs=1e-12)
        # large finite orders approach the closed-form limit
        assert conditional_renyi(joint, 1e6).lo == pytest.approx(closed, abs=1e-4)


def test_conditional_shannon_matches_chain_rule_identity():
    rng = np.random.default_rng(4)
    joint = rng.dirichlet(np.ones(12)).reshape(4, 3)
    h = conditional_renyi(joint, 1.0).lo
    px_y = joint.sum(axis=0)
    expect = renyi_entropy(joint.ravel(), 1.0).lo - renyi_entropy(px_y, 1.0).lo
    assert h == pytest.approx(expect, abs=1e-12)


# ---------------------------------------------------------------------------
# block entropies


def test_block_min_entropy_examples():
    assert block_min_entropy(IIDSource.uniform(2), 5).lo == pytest.approx(
        5 * math.log(2), abs=1e-12)
    chain = MarkovSource(TEST_CHAIN)
    assert block_min_entropy(chain, 3).lo == pytest.approx(
        -math.log((2 / 3) * 0.81), abs=1e-12)
    assert modal_block(chain, 3).tolist() == [0, 0, 0]
    cyc = cycle_chain(3)
    for k in (1, 2, 5):
        assert block_min_entropy(cyc, k).lo == pytest.approx(math.log(3), abs=1e-12)


def test_block_renyi_dp_matches_enumeration():
    models = [MarkovSource(TEST_CHAIN),
              MarkovSource([[0.5, 0.3, 0.2], [0.1, 0.6, 0.3], [0.4, 0.2, 0.4]]),
              IIDSource([0.6, 0.3, 0.1])]
    for model in models:
        for g in GAMMAS + [1.0]:
            for k in (1, 2, 4, 7):
                dp = block_renyi_entropy(model, k, g).lo
                ref = renyi_entropy(
                    np.exp(enumerate_log_block_probabilities(model, k)), g).lo
                assert dp == pytest.approx(ref, abs=1e-9), (model.label, g, k)


def test_conditional_block_dp_matches_enumeration_any_future_length():
    chain = MarkovSource(TEST_CHAIN)
    d = 2
    for g in GAMMAS + [1.0]:
        for k, i in ((1, 1), (2, 3), (4, 12), (3, 5)):
            dp = conditional_block_renyi(chain, k, i, g).lo
            grid = np.exp(enumerate_log_block_probabilities(chain, k + i)
                          ).reshape(d ** k, d ** i)
            ref = conditional_renyi(grid, g).lo
            assert dp == pytest.approx(ref, abs=1e-9), (g, k, i)


def test_conditional_min_entropy_examples():
    iid = IIDSource([0.75, 0.25])
    for i in (1, 3, 9):
        assert conditional_min_entropy(iid, 4, i).lo == pytest.approx(
            4 * -math.log(0.75), abs=1e-12)
    chain = MarkovSource(TEST_CHAIN)
    assert conditional_min_entropy(chain, 3, 5).lo == pytest.approx(
        conditional_min_entropy(chain, 3, 1).lo, abs=1e-12)
    # a single-state chain emits a constant: nothing is uncertain
    one = MarkovSource([[1.0]])
    for k, i in ((1, 1), (3, 2)):
        assert conditional_min_entropy(one, k, i).lo == pytest.approx(0.0, abs=1e-12)


def test_hmm_conditional_uses_enumeration_and_respects_limits():
    hmm = HMMSource([[0.8, 0.2], [0.3, 0.7]], [[0.9, 0.1], [0.25, 0.75]])
    value = conditional_min_entropy(hmm, 2, 2)
    grid = np.exp(enumerate_log_block_probabilities(hmm, 4)).reshape(4, 4)
    assert value.lo == pytest.approx(conditional_renyi(grid, INF).lo, abs=1e-12)
    with pytest.raises(ValueError, match="limit"):
        conditional_min_entropy(hmm, 2, 30)
    # finite-k conditional min-entropy is non-increasing in i (chain rule)
    values = [conditional_min_entropy(hmm, 2, i).lo for i in range(1, 7)]
    for a, b in zip(values, values[1:]):
        assert a >= b - 1e-12


# ---------------------------------------------------------------------------
# context length


def test_context_length_iid_examples():
    coin = IIDSource.uniform(2)
    assert context_length(coin, 4).value == 16
    assert context_length(coin, 1).value == 2


def test_context_length_matches_linear_scan():
    rng = np.random.default_rng(5)
    for _ in range(6):
        a, b = rng.uniform(0.1, 0.9, size=2)
        chain = MarkovSource([[1 - a, a], [b, 1 - b]])
        for k in range(1, 11):
            fast = context_length(chain, k).value
            i = 1
            while True:
                h = conditional_min_entropy(chain, k, i).lo
                if math.log(i) >= h - 1e-12:
                    break
                i += 1
            assert fast == i, (a, b, k)


def test_context_length_bounded_by_alphabet_power():
    for model in (IIDSource.uniform(2), MarkovSource(TEST_CHAIN)):
        for k in range(1, 9):
            assert context_length(model, k).value <= model.alphabet_size ** k


def test_context_length_general_order():
    coin = IIDSource.uniform(2)
    # threshold (g/(g-1)) log i >= k log 2: i = 2^(k (g-1)/g)
    ctx = context_length(coin, 4, gamma=2.0)
    assert ctx.value == 4
    with pytest.raises(ValueError):
        context_length(coin, 3, gamma=0.5)


# ---------------------------------------------------------------------------
# weighted conditional entropy


def test_weighted_markov_telescopes_exactly():
    chain = MarkovSource(TEST_CHAIN)
    for k in (1, 3, 6):
        w = weighted_conditional_entropy(chain, k)
        expect = conditional_min_entropy(chain, k, 1).lo
        assert w.lo == pytest.approx(expect, abs=1e-12)
        assert w.hi == pytest.approx(expect, abs=1e-12)


def test_weighted_iid_equals_block_min_entropy():
    iid = IIDSource([0.7, 0.3])
    for k in (1, 4):
        w = weighted_conditional_entropy(iid, k)
        assert w.lo == pytest.approx(block_min_entropy(iid, k).lo, abs=1e-12)


def test_weighted_interval_shrinks_with_truncation():
    hmm = HMMSource([[0.8, 0.2], [0.3, 0.7]], [[0.9, 0.1], [0.25, 0.75]])
    wide = weighted_conditional_entropy(hmm, 2, truncation_m=2)
    tight = weighted_conditional_entropy(hmm, 2, truncation_m=10)
    assert tight.width < wide.width
    assert wide.lo <= tight.lo <= tight.hi <= wide.hi + 1e-12


def test_weighted_dominates_long_conditioning():
    # the weighted entropy is at least the min-entropy conditioned far out
    chain = MarkovSource(TEST_CHAIN)
    for k in (2, 5):
        w = weighted_conditional_entropy(chain, k)
        far = conditional_min_entropy(chain, k, 64).lo
        assert w.hi >= far - 1e-12


# ---------------------------------------------------------------------------
# rates


def test_entropy_rate_examples():
    for d in (2, 4):
        u = IIDSource.uniform(d)
        assert entropy_rate(u, 1).lo == pytest.approx(math.log(d), abs=1e-12)
        assert entropy_rate(u, 2).lo == pytest.approx(math.log(d), abs=1e-12)
    bern = IIDSource([0.75, 0.25])
    assert entropy_rate(bern, 2).lo == pytest.approx(-math.log(0.625), abs=1e-12)
    with pytest.raises(ValueError):
        entropy_rate(HMMSource([[0.8, 0.2], [0.3, 0.7]],
                               [[0.9, 0.1], [0.25, 0.75]]), 2)
    with pytest.raises(ValueError):
        entropy_rate(IIDSource.uniform(2), 3)


def test_collision_rate_matches_block_entropy_extrapolation():
    for rows in MILD_CHAINS:
        chain = MarkovSource(rows)
        h2 = entropy_rate(chain, 2).lo
        diffs = [abs(block_renyi_entropy(chain, k, 2).lo / k - h2)
                 for k in (4, 6, 8, 10)]
        assert all(a > b for a, b in zip(diffs, diffs[1:])), rows
        assert diffs[-1] < 0.01, rows


def test_shannon_rate_markov():
    chain = MarkovSource(TEST_CHAIN)
    pi = chain.initial
    expect = -(pi[0] * (0.9 * math.log(0.9) + 0.1 * math.log(0.1))
               + pi[1] * (0.2 * math.log(0.2) + 0.8 * math.log(0.8)))
    assert entropy_rate(chain, 1).lo == pytest.approx(expect, abs=1e-12)


# ---------------------------------------------------------------------------
# varentropy


def test_varentropy_uniform_is_zero():
    for k in (1, 5, 12):
        res = varentropy(IIDSource.uniform(2), k)
        assert res.value.lo == pytest.approx(0.0, abs=1e-12)
        assert res.ratio == pytest.approx(0.0, abs=1e-9)


def test_varentropy_bernoulli_closed_form():
    p = 0.3
    model = IIDSource([1 - p, p])
    closed = p * (1 - p) * math.log(p / (1 - p)) ** 2
    for k in range(1, 13):
        res = varentropy(model, k)
        assert res.method == "enumeration"
        assert res.value.lo == pytest.approx(k * closed, abs=1e-9)


def test_varentropy_monte_carlo_agrees_with_enumeration():
    chain = MarkovSource(TEST_CHAIN)
    exact = varentropy(chain, 8).value.lo
    mc = varentropy(chain, 8, trials=100_000, seed=SeedSpec(17), limit=4)
    assert mc.method == "monte_carlo"
    assert mc.value.lo <= exact <= mc.value.hi


# ---------------------------------------------------------------------------
# plug-in estimator


def test_plug_in_on_simulated_uniform():
    seq = IIDSource.uniform(2).sample(1_000_000, SeedSpec(23))
    est = plug_in_entropy(seq, 2, 1.0).lo
    assert abs(est - 2 * math.log(2)) < 0.01


def test_plug_in_degenerate_and_tiny():
    seq = SymbolSeq(np.zeros(50, dtype=np.int64), alphabet_size=2)
    for g in (0.0, 1.0, 2.0, INF):
        with pytest.warns(UserWarning, match="biased"):
            assert plug_in_entropy(seq, 3, g).lo == pytest.approx(0.0, abs=1e-12)
    with pytest.warns(UserWarning, match="biased"):
        est = plug_in_entropy(seq_from_text("aabb"), 1, 1.0)
    assert est.lo == pytest.approx(math.log(2), abs=1e-12)


# ---------------------------------------------------------------------------
# chain rule


def random_joint(rng, shape=(2, 2, 2, 2)):
    return rng.dirichlet(np.ones(int(np.prod(shape)))).reshape(shape)


def test_chain_rule_on_random_joints():
    rng = np.random.default_rng(9)
    for _ in range(200):
        joint = random_joint(rng)
        for g in (0.5, 2.0, INF):
            assert check_chain_rule(joint, g)


def test_chain_rule_tight_cases():
    rng = np.random.default_rng(10)
    # constant U: the middle inequality is an equality
    xyz = rng.dirichlet(np.ones(8)).reshape(1, 2, 2, 2)
    from replab.entropy import conditional_renyi as cr
    for g in (0.5, 2.0, INF):
        j = xyz
        x_y = j.sum(axis=(0, 3))
        ux_y = j.sum(axis=3).reshape(2, 2)
        assert cr(x_y, g).lo == pytest.approx(cr(ux_y, g).lo, abs=1e-12)
    # Z independent of (U, X, Y): the first inequality is an equality
    uxy = rng.dirichlet(np.ones(8)).reshape(2, 2, 2)
    pz = np.array([0.4, 0.6])
    joint = uxy[..., None] * pz
    for g in (0.5, 2.0, INF):
        x_yz = joint.sum(axis=0).reshape(2, 4)
        x_y = joint.sum(axis=(0, 3))
        assert cr(x_yz, g).lo == pytest.approx(cr(x_y, g).lo, abs=1e-12)
        assert check_chain_rule(joint, g)


# ---------------------------------------------------------------------------
# pointwise mutual information bound


def test_pmi_iid_is_one():
    iid = IIDSource([0.6, 0.4])
    for n, m in ((1, 1), (2, 2), (3, 1)):
        assert pmi_bound_estimate(iid, n, m).lo == pytest.approx(1.0, abs=1e-10)


def test_pmi_markov_window_one():
    chain = MarkovSource(TEST_CHAIN)
    # max over (a,b) of p(b|a) / pi_b: attained at (1,1): 0.8 / (1/3)
    assert pmi_bound_estimate(chain, 1, 1).lo == pytest.approx(2.4, abs=1e-10)


def test_pmi_cycle_chain():
    cyc = cycle_chain(3)
    got = pmi_bound_estimate(cyc, 1, 1)
    assert got.lo == pytest.approx(3.0, abs=1e-10)
    assert got.hi == math.inf
    # for a first-order chain the boundary symbols carry all the dependence,
    # so the finite-window supremum is flat in the window size
    assert pmi_bound_estimate(cyc, 3, 3).lo == pytest.approx(3.0, abs=1e-10)


# ---------------------------------------------------------------------------
# tables


def test_entropy_table_monotonicity_and_csv(tmp_path):
    hmm = HMMSource([[0.8, 0.2], [0.3, 0.7]], [[0.9, 0.1], [0.25, 0.75]])
    gammas = [0.0, 0.5, 2.0, INF]
    table = EntropyTable.build(hmm, gammas, ks=[1, 2, 3], i_values=[0, 1, 2],
                               include_weighted=True, include_context=True,
                               truncation_m=8)
    for k in (1, 2, 3):
        for i in (0, 1, 2):
            vals = [table.entries[(g, k, i)] for g in gammas]
            for a, b in zip(vals, vals[1:]):
                assert a.lo >= b.hi - 1e-9
        cond = [table.entries[(INF, k, i)] for i in (1, 2)]
        assert cond[0].lo >= cond[1].hi - 1e-9
    out = tmp_path / "entropy.csv"
    table.write_csv(out, header_comments=["test"])
    lines = out.read_text().strip().splitlines()
    assert lines[1] == "gamma,k,i,lo,hi,kind"
    kinds = {line.split(",")[-1] for line in lines[2:]}
    assert kinds == {"plain", "weighted", "context_length"}


def test_intervals_contain_enumeration_truth():
    hmm = HMMSource([[0.8, 0.2], [0.3, 0.7]], [[0.9, 0.1], [0.25, 0.75]])
    k = 2
    w = weighted_conditional_entropy(hmm, k, truncation_m=12)
    # long-truncation value is the best available proxy for the full sum
    ref = weighted_conditional_entropy(hmm, k, truncation_m=18)
    assert w.lo - 1e-12 <= ref.hi and ref.lo <= w.hi + 1e-12
