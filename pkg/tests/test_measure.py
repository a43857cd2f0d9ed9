import numpy as np
import pytest
from scipy import stats as sps

from sponge import presets, streams
from sponge.dimension import solve_sn
from sponge.distributions import RatioVectorLaw, constant
from sponge.measure import (descend_measure, is_subsystem_word,
                            sample_cylinder_measure, sample_point_from_measure,
                            simulate_martingale, truncated_martingale,
                            weight_statistics, weights_from_dimension)
from sponge.rifs import SpongeSpec, realize
from sponge.symbolic import Word


def det_line_family(ratios=(0.3, 0.45), n=1, seed=0):
    vlaw = RatioVectorLaw(tuple(constant(r) for r in ratios))
    spec = SpongeSpec(d=1, N=2, translations=((0.0,), (1.0,)), axis_laws=(vlaw,),
                      alpha_lo=min(ratios), alpha_hi=max(ratios),
                      smooth_indices=(1,), separated_indices=(2,))
    sub = spec.subsystem(n)
    rep = solve_sn(spec, sub, 1e-12)
    return weights_from_dimension(realize(spec, seed), sub, rep)


def preset_family(name, n=1, seed=0):
    spec = presets.PRESETS[name]()
    sub = spec.subsystem(n)
    rep = solve_sn(spec, sub, 1e-12)
    return weights_from_dimension(realize(spec, seed), sub, rep)


def test_deterministic_weights_sum_to_one_exactly():
    fam = det_line_family()
    total = fam.weight_vector(Word(())).sum()
    assert total == pytest.approx(1.0, abs=1e-12)
    total2 = fam.weight_vector(fam.words[0]).sum()
    assert total2 == pytest.approx(1.0, abs=1e-12)


def test_weight_statistics_mean_one_and_p2_margin():
    for name in ("example-line", "four-corner", "mod-four-corner"):
        fam = preset_family(name)
        ws = weight_statistics(fam, 40_000, 3)
        assert abs(ws.sum_mean - 1.0) <= 3 * ws.sum_se
        assert ws.sum_sq_mean + 3 * ws.sum_sq_se < 1.0


def test_martingale_constant_weights_give_unit_sums():
    # equal deterministic ratios make every super-child weight 1/B
    fam = det_line_family(ratios=(0.4, 0.4))
    stats = simulate_martingale(fam, 3, 200, 1)
    np.testing.assert_allclose(stats.means, 1.0, atol=1e-12)
    np.testing.assert_allclose(stats.variances, 0.0, atol=1e-12)


def test_martingale_means_and_second_moment_bound():
    fam = preset_family("example-line")
    stats = simulate_martingale(fam, 3, 30_000, 5)
    for k in range(3):
        assert abs(stats.means[k] - 1.0) <= 3 * stats.ses[k]
    ws = weight_statistics(fam, 30_000, 6)
    bound, bound_se = ws.second_moment_bound()
    second = stats.variances + stats.means**2
    for k in range(3):
        se_sq = 2 * stats.means[k] * stats.ses[k] + stats.variances[k] / np.sqrt(30_000)
        assert second[k] <= bound + 3 * np.hypot(se_sq, bound_se)
    assert stats.min_value > 0


def test_martingale_second_moment_matches_recursion():
    # E(X_k^2) = 1 + (E(S^2)-1) * (1-E(Q)^k)/(1-E(Q)) from the one-step recursion
    fam = preset_family("example-line")
    stats = simulate_martingale(fam, 3, 60_000, 7)
    ws = weight_statistics(fam, 120_000, 8)
    A = ws.square_mean - 1.0
    B = ws.sum_sq_mean
    for k in range(1, 4):
        predicted = 1.0 + A * (1 - B**k) / (1 - B)
        observed = stats.variances[k - 1] + stats.means[k - 1] ** 2
        # generous 5-sigma-ish window; both sides carry MC error
        tol = 5 * (ws.square_se + stats.ses[k - 1] * 3)
        assert abs(observed - predicted) <= tol


def test_martingale_workers_do_not_change_results():
    fam = preset_family("example-line")
    a = simulate_martingale(fam, 2, 5000, 9, keep_samples=True)
    b = simulate_martingale(fam, 2, 5000, 9, keep_samples=True, workers=4)
    np.testing.assert_array_equal(a.samples, b.samples)


def test_martingale_descent_mode_unbiased():
    fam = preset_family("example-line")
    exact = simulate_martingale(fam, 2, 20_000, 11)
    desc = simulate_martingale(fam, 2, 20_000, 11, node_cap=2)
    assert desc.mode == "descent" and exact.mode == "exact"
    for k in range(2):
        se = np.hypot(desc.ses[k], exact.ses[k])
        assert abs(desc.means[k] - exact.means[k]) <= 4 * se


def test_martingale_sibling_distribution_ks():
    # X_1 below two sibling super-words: same law, independent draws
    fam = preset_family("example-line")
    vals = {w: [] for w in (fam.words[0], fam.words[1])}
    for trial in range(400):
        fam_t = preset_family("example-line", seed=1000 + trial)
        for w in vals:
            vals[w].append(truncated_martingale(fam_t, w, 1))
    ks = sps.ks_2samp(vals[fam.words[0]], vals[fam.words[1]])
    assert ks.pvalue > 0.01


def test_martingale_property_regression():
    # E(X_{k+1} | level-k data) = X_k: regression slope 1, intercept 0
    fam = preset_family("four-corner")
    stats = simulate_martingale(fam, 2, 30_000, 13, keep_samples=True)
    x = stats.samples[:, 0]
    y = stats.samples[:, 1]
    fit = sps.linregress(x, y)
    assert abs(fit.slope - 1.0) <= 3 * fit.stderr
    assert abs(fit.intercept) <= 3 * fit.intercept_stderr


def test_truncated_martingale_and_cylinder_measure():
    fam = preset_family("example-line", seed=2)
    word = fam.words[1]
    assert truncated_martingale(fam, word, 0) == 1.0
    mu0 = sample_cylinder_measure(fam, word, 0)
    assert mu0 == pytest.approx(fam.phibar(word))
    with pytest.raises(ValueError):
        sample_cylinder_measure(fam, Word("12"), 1)


def test_cylinder_measure_additivity_exact():
    # consistency identity at matched truncations: summing the children's
    # measures reproduces the parent's, exactly on one realization
    fam = preset_family("example-line", seed=4)
    for parent in (fam.words[0], fam.words[2]):
        for K in (1, 2):
            lhs = sample_cylinder_measure(fam, parent, K)
            rhs = sum(sample_cylinder_measure(fam, parent + w, K - 1)
                      for w in fam.words)
            assert rhs == pytest.approx(lhs, rel=1e-12)


def test_cylinder_measure_positive_everywhere():
    fam = preset_family("four-corner", seed=6)
    rng = np.random.default_rng(0)
    vals = []
    for _ in range(200):
        word = Word(())
        for _ in range(2):
            word = word + fam.words[rng.integers(len(fam.words))]
        vals.append(sample_cylinder_measure(fam, word, 1))
    assert min(vals) > 0
    assert is_subsystem_word(word, fam.sub)


def test_descent_determinism_and_prefix_law():
    fam = preset_family("example-line", seed=8)
    key = streams.root_key(321)
    w1 = sample_point_from_measure(fam, 3 * fam.sub.q, key)
    w2 = sample_point_from_measure(fam, 3 * fam.sub.q, key)
    assert w1 == w2
    assert len(w1) == 3 * fam.sub.q


def test_descent_uniform_weights_chi_square():
    fam = det_line_family(ratios=(0.4, 0.4), seed=3)
    letters, _ = descend_measure(fam, 40_000, 2, seed=5)
    q = fam.sub.q
    idx = np.array([[np.nonzero([tuple(row[i * q:(i + 1) * q]) == tuple(w)
                                 for w in fam.words])[0][0] for i in range(2)]
                    for row in letters])
    codes = idx[:, 0] * len(fam.words) + idx[:, 1]
    counts = np.bincount(codes, minlength=len(fam.words) ** 2)
    res = sps.chisquare(counts)
    assert res.pvalue > 0.001


def test_descent_matches_weight_products():
    # deterministic unequal weights: depth-1 frequencies follow the weights
    fam = det_line_family(ratios=(0.3, 0.45), seed=3)
    probs = fam.weight_vector(Word(()))
    probs = probs / probs.sum()
    letters, _ = descend_measure(fam, 50_000, 1, seed=6)
    first = letters[:, 0]
    counts = np.bincount(first, minlength=3)[1:3]
    for b in range(2):
        expected = 50_000 * probs[b]
        sigma = np.sqrt(50_000 * probs[b] * (1 - probs[b]))
        assert abs(counts[b] - expected) <= 3 * sigma
