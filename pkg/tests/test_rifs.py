import numpy as np
import pytest

from sponge import presets
from sponge.distributions import RatioVectorLaw, constant, uniform
from sponge.errors import SchemaError
from sponge.rifs import (BoundingBox, SpongeSpec, attractor_box, bounding_box,
                         cumulative_ratio,
                         cylinder_rect, min_escape_length, project,
                         project_letter_paths, realize, separation_margins)
from sponge.symbolic import EMPTY, Tail, Word, extend


def det_line(ratio=0.5, translations=((0.0,), (1.0,))):
    vlaw = RatioVectorLaw((constant(ratio), constant(ratio)))
    return SpongeSpec(d=1, N=2, translations=translations, axis_laws=(vlaw,),
                      alpha_lo=ratio, alpha_hi=ratio,
                      smooth_indices=(1,), separated_indices=(2,))


def det_square(r=0.5):
    vlaw = RatioVectorLaw(tuple(constant(r) for _ in range(4)))
    return SpongeSpec(d=2, N=4,
                      translations=((0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)),
                      axis_laws=(vlaw, vlaw), alpha_lo=r, alpha_hi=r,
                      smooth_indices=(1, 1), separated_indices=(4, 2))


def iterate_maps_oracle(tree, letters, x0):
    """Direct composition of the realized maps, outermost first."""
    spec = tree.spec
    t = spec.translation_array()
    x = np.asarray(x0, dtype=float)
    for m in range(len(letters), 0, -1):
        word = Word(letters[:m])
        alpha = tree.ratios(word)
        x = alpha * x + (1 - alpha) * t[letters[m - 1] - 1]
    return x


def test_spec_validation_names_conditions():
    vlaw = RatioVectorLaw((constant(0.5), constant(0.5)))
    with pytest.raises(SchemaError, match="singleton"):
        SpongeSpec(d=1, N=2, translations=((1.0,), (1.0,)), axis_laws=(vlaw,),
                   alpha_lo=0.5, alpha_hi=0.5, smooth_indices=(1,),
                   separated_indices=(2,))
    with pytest.raises(SchemaError, match=r"\(R2\)"):
        SpongeSpec(d=1, N=2, translations=((0.0,), (1.0,)), axis_laws=(vlaw,),
                   alpha_lo=0.1, alpha_hi=0.3, smooth_indices=(1,),
                   separated_indices=(2,))


def test_escape_length_override_only_upward():
    spec = det_line()
    need = min_escape_length(spec, 0)
    with pytest.raises(SchemaError, match="certified minimum"):
        SpongeSpec(d=1, N=2, translations=spec.translations, axis_laws=spec.axis_laws,
                   alpha_lo=0.5, alpha_hi=0.5, smooth_indices=(1,),
                   separated_indices=(2,), escape_lengths=(need - 1,))
    bigger = SpongeSpec(d=1, N=2, translations=spec.translations,
                        axis_laws=spec.axis_laws, alpha_lo=0.5, alpha_hi=0.5,
                        smooth_indices=(1,), separated_indices=(2,),
                        escape_lengths=(need + 2,))
    assert bigger.escape_lengths == (need + 2,)


def test_bounding_box_formula_and_limits():
    # unit translations at 0 and 1 with ratio cap 1/2 give [-1, 2]
    box = bounding_box(det_line(0.5))
    assert box.lo[0] == pytest.approx(-1.0)
    assert box.hi[0] == pytest.approx(2.0)
    tiny = bounding_box(det_line(1e-9))
    assert tiny.lo[0] == pytest.approx(0.0, abs=1e-6)
    assert tiny.hi[0] == pytest.approx(1.0, abs=1e-6)


def test_bounding_box_contains_projections():
    spec = presets.four_corner()
    box = bounding_box(spec)
    for seed in range(3):
        tree = realize(spec, seed)
        letters = np.array([[1 + (i + j) % 4 for j in range(10)] for i in range(3000)])
        pts, _ = project_letter_paths(tree, letters)
        assert box.contains(pts).all()


def test_realization_determinism_and_laziness():
    spec = presets.four_corner()
    t1 = realize(spec, 123)
    t2 = realize(spec, 123)
    rng = np.random.default_rng(0)
    words = [Word(rng.integers(1, 5, size=rng.integers(1, 10))) for _ in range(1000)]
    for w in words:                      # expansion order 1: random order
        np.testing.assert_array_equal(t1.ratios(w), t2.ratios(w))
    for w in sorted(words):              # order 2: sorted, against cached t1
        np.testing.assert_array_equal(t2.ratios(w), t1.ratios(w))
    assert not np.array_equal(t1.ratios(Word("12")), realize(spec, 124).ratios(Word("12")))


def test_constant_laws_ignore_seed():
    spec = det_square()
    a, b = realize(spec, 1), realize(spec, 2)
    for w in (Word("1"), Word("23"), Word("414")):
        np.testing.assert_array_equal(a.ratios(w), b.ratios(w))


def test_example_line_deterministic_children():
    spec = presets.example_line()
    tree = realize(spec, 5)
    for w in (Word("2"), Word("13"), Word("332")):
        mat = tree.children_ratios(w)
        assert mat[0, 1] == pytest.approx(1 / 3)
        assert mat[0, 2] == pytest.approx(1 / 4)
        assert 1 / 3 <= mat[0, 0] <= 1 / 2


def test_cumulative_ratio():
    spec = presets.example_line()
    tree = realize(spec, 5)
    assert cumulative_ratio(tree, EMPTY, 0) == 1.0
    assert cumulative_ratio(tree, Word("22"), 0) == pytest.approx(1 / 9)
    assert cumulative_ratio(tree, Word("23"), 0) == pytest.approx(1 / 12)
    rng = np.random.default_rng(1)
    for _ in range(100):
        w = Word(rng.integers(1, 4, size=rng.integers(1, 8)))
        c = abs(cumulative_ratio(tree, w, 0))
        assert spec.alpha_lo ** len(w) - 1e-12 <= c <= spec.alpha_hi ** len(w) + 1e-12


def test_project_fixed_point_tails():
    spec = det_square(0.4)
    tree = realize(spec, 0)
    for k in range(1, 5):
        pt, rad = project(tree, EMPTY, Tail.constant(k), 30)
        np.testing.assert_allclose(pt, spec.translations[k - 1], atol=1e-9)
        assert (rad > 0).all()


def test_project_example_line_tail_oracle():
    # child 2 then the all-3 tail stays at the shared fixed point 0
    spec = presets.example_line()
    tree = realize(spec, 9)
    pt, rad = project(tree, Word("2"), Tail.constant(3), 25)
    assert abs(pt[0]) <= rad[0]
    assert abs(pt[0]) < 1e-6


def test_project_matches_direct_iteration_oracle():
    spec = presets.four_corner()
    tree = realize(spec, 3)
    box = attractor_box(spec)
    rng = np.random.default_rng(7)
    for _ in range(25):
        letters = Word(rng.integers(1, 5, size=20))
        pt, rad = project(tree, letters, Tail.constant(1), 20)
        oracle = iterate_maps_oracle(tree, letters, box.center)
        np.testing.assert_allclose(pt, oracle, atol=1e-12)


def test_project_error_radius_contracts_geometrically():
    for seed in range(10):
        spec = presets.four_corner()
        tree = realize(spec, seed)
        _, r1 = project(tree, EMPTY, Tail.constant(1), 6)
        _, r2 = project(tree, EMPTY, Tail.constant(1), 7)
        np.testing.assert_allclose(r2 / r1, spec.alpha_hi)


def test_project_letter_paths_matches_scalar():
    spec = presets.mod_four_corner()
    tree = realize(spec, 11)
    rng = np.random.default_rng(2)
    letters = rng.integers(1, 5, size=(40, 12))
    pts, cums = project_letter_paths(tree, letters)
    for i in range(0, 40, 7):
        w = Word(letters[i])
        pt, _ = project(tree, w, Tail.constant(1), 12)
        np.testing.assert_allclose(pts[i], pt, atol=1e-12)
        np.testing.assert_allclose(cums[i], tree.cumulative(w), atol=1e-15)


def test_projection_difference_factorizes():
    # relative-projection identity: the gap between two words sharing a prefix
    # scales by the prefix's cumulative ratio, checked at depth 12
    spec = presets.four_corner()
    tree = realize(spec, 21)
    rng = np.random.default_rng(3)
    for _ in range(10):
        h = Word(rng.integers(1, 5, size=4))
        suf_i = Word(rng.integers(1, 5, size=8))
        suf_j = Word(rng.integers(1, 5, size=8))
        if suf_i[0] == suf_j[0]:
            continue
        pi, _ = project(tree, h + suf_i, Tail.constant(1), 12)
        pj, _ = project(tree, h + suf_j, Tail.constant(1), 12)
        rel_i, _ = project(tree, suf_i, Tail.constant(1), 8, context=h)
        rel_j, _ = project(tree, suf_j, Tail.constant(1), 8, context=h)
        cum = tree.cumulative(h)
        lhs = np.abs(pi - pj)
        rhs = np.abs(cum) * np.abs(rel_i - rel_j)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-13)


def test_cylinder_rect_nesting_and_sides():
    spec = presets.four_corner()
    box = bounding_box(spec)
    tree = realize(spec, 17)
    rect_empty = cylinder_rect(tree, EMPTY, box)
    np.testing.assert_array_equal(rect_empty.lo, box.lo)
    np.testing.assert_array_equal(rect_empty.hi, box.hi)
    # exhaustive nesting to depth 4
    from sponge.symbolic import enumerate_level
    for depth in range(1, 5):
        for w in enumerate_level(4, depth):
            child = cylinder_rect(tree, w, box)
            parent = cylinder_rect(tree, w.prefix(depth - 1), box)
            assert (child.lo >= parent.lo - 1e-12).all()
            assert (child.hi <= parent.hi + 1e-12).all()
    w = Word("1234")
    rect = cylinder_rect(tree, w, box)
    np.testing.assert_allclose(rect.width,
                               np.abs(tree.cumulative(w)) * box.width, rtol=1e-12)


def _relative_block_interval(tree, prefix, block, box, axis):
    """Interval image of the box under the block's maps read below `prefix`."""
    lo, hi = float(box.lo[axis]), float(box.hi[axis])
    t = tree.spec.translation_array()
    for m in range(len(block), 0, -1):
        alpha = tree.ratios(prefix + block[:m])[axis]
        fixed = t[block[m - 1] - 1, axis]
        a = fixed + alpha * (lo - fixed)
        b = fixed + alpha * (hi - fixed)
        lo, hi = min(a, b), max(a, b)
    return lo, hi


def test_separation_margin_positive_and_respected():
    # escape-block cylinders keep a certified distance from the smooth
    # child's fixed coordinate, across seeds and prefixes
    for name in ("example-line", "four-corner"):
        spec = presets.PRESETS[name]()
        margins = separation_margins(spec)
        assert (margins > 0).all()
        box = attractor_box(spec)
        t = spec.translation_array()
        for seed in range(20):
            tree = realize(spec, seed)
            rng = np.random.default_rng(seed)
            for trial in range(20):
                prefix = Word(rng.integers(1, spec.N + 1, size=rng.integers(0, 7)))
                for k in range(spec.d):
                    block = Word([spec.separated_indices[k]] * spec.escape_lengths[k])
                    lo, hi = _relative_block_interval(tree, prefix, block, box, k)
                    target = t[spec.smooth_indices[k] - 1, k]
                    dist = max(lo - target, target - hi)
                    assert dist >= margins[k] - 1e-9


def test_axis_permutation_symmetry():
    # identical laws on both axes: swapping the axis index permutes ratios
    vlaw = RatioVectorLaw(tuple(uniform(0.2, 0.4) for _ in range(2)))
    spec = SpongeSpec(d=2, N=2, translations=((0.0, 0.0), (1.0, 1.0)),
                      axis_laws=(vlaw, vlaw), alpha_lo=0.2, alpha_hi=0.4,
                      smooth_indices=(1, 1), separated_indices=(2, 2))
    tree = realize(spec, 8)
    from sponge.distributions import sample_vectors
    key = tree.key_of(Word("12")).reshape(1, 4)
    v0 = sample_vectors(vlaw, key, 0)[0]
    v1 = sample_vectors(vlaw, key, 1)[0]
    mat = tree.children_ratios(Word("12"))
    np.testing.assert_array_equal(mat[0], v0)
    np.testing.assert_array_equal(mat[1], v1)
