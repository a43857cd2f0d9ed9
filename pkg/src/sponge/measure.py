"""Martingale random measures over block subsystems.

One super-letter is a whole block word (free part + fixed suffix); the weight
attached to a super-child is the product of its per-level cost factors at the
subsystem root s_n, so the weight vectors at distinct super-nodes are iid by
construction (they read disjoint draws) and their expected sum is exactly 1.
The partial sums X_k of weight products over depth-k super-paths form the
L2-bounded martingale whose limit normalizes the measure; everything here
either evaluates those objects on one realization or estimates their moments
across fresh realizations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import distributions as dist
from . import streams
from .dimension import DimensionReport, axis_exponents
from .errors import BudgetError
from .rifs import RealizationTree, attractor_box
from .symbolic import SubsystemSpec, Word, build_subsystem_words

DEFAULT_NODE_CAP = 250_000
_CHUNK = 16384


@dataclass(frozen=True)
class WeightFamily:
    """Super-alphabet weight function bound to one realization."""

    tree: RealizationTree
    sub: SubsystemSpec
    report: DimensionReport
    words: tuple = field(init=False, compare=False)
    words_arr: np.ndarray = field(init=False, compare=False, repr=False)
    w_axis: np.ndarray = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        spec = self.tree.spec
        words = tuple(build_subsystem_words(self.sub, spec.N))
        object.__setattr__(self, "words", words)
        object.__setattr__(self, "words_arr", np.asarray(words, dtype=np.int64))
        object.__setattr__(self, "w_axis",
                           axis_exponents(spec.d, self.report.s_star, self.report.sigma))

    @property
    def spec(self):
        return self.tree.spec

    @property
    def s(self) -> float:
        return self.report.s_star

    def level_factor(self, word) -> float:
        """Cost factor of the single level ending at `word` on this tree."""
        r = np.abs(self.tree.ratios(word))
        out = 1.0
        for k in range(self.spec.d):
            if self.w_axis[k] != 0.0:
                out *= r[k] ** self.w_axis[k]
        return out

    def phibar(self, word) -> float:
        """Cumulative cost of `word`: product of level factors over its prefixes."""
        word = Word(word)
        out = 1.0
        for m in range(1, len(word) + 1):
            out *= self.level_factor(word.prefix(m))
        return out

    def weight_vector(self, parent) -> np.ndarray:
        """Weights of all super-children of super-word `parent` on this tree."""
        parent = Word(parent)
        out = np.empty(len(self.words))
        for b, w in enumerate(self.words):
            val = 1.0
            for m in range(1, len(w) + 1):
                val *= self.level_factor(parent + w[:m])
            out[b] = val
        return out


def weights_from_dimension(tree: RealizationTree, sub: SubsystemSpec,
                           report: DimensionReport) -> WeightFamily:
    """Bind the subsystem-root weights to one realization."""
    if report.tol > 1e-8:
        raise ValueError("weights need the subsystem root solved to 1e-8 or better")
    if report.subsystem_n != sub.n:
        raise ValueError("report was solved for a different subsystem")
    return WeightFamily(tree=tree, sub=sub, report=report)


def _expand_weights(family: WeightFamily, keys: np.ndarray):
    """Weights of all B super-children for each key lane.

    `keys` is (L, 4); returns (weights (L, B), child_keys (L, B, 4)).  Lanes
    sharing a key produce identical rows, since every draw is keyed by the
    word path alone.
    """
    spec = family.spec
    words_arr = family.words_arr
    B, q = words_arr.shape
    L = keys.shape[0]
    cur = np.repeat(keys, B, axis=0)
    w = np.ones(L * B)
    active = [k for k in range(spec.d) if family.w_axis[k] != 0.0]
    for m in range(q):
        lv = np.tile(words_arr[:, m], L)
        for k in active:
            comp = dist.component_ratios(spec.axis_laws[k], cur, k, lv)
            w *= np.abs(comp) ** family.w_axis[k]
        cur = streams.child_key(cur, lv)
    return w.reshape(L, B), cur.reshape(L, B, streams.KEY_LANES)


@dataclass(frozen=True)
class WeightStats:
    """Monte-Carlo moments of one super-node's weight vector."""

    trials: int
    sum_mean: float
    sum_se: float
    sum_sq_mean: float        # E(sum of squared weights)
    sum_sq_se: float
    square_mean: float        # E((sum of weights)^2)
    square_se: float

    def second_moment_bound(self) -> tuple:
        """Martingale second-moment ceiling 1 + (E(S^2)-1)/(1-E(Q)), with its se.

        Derived from the one-step recursion E(X_{k+1}^2) = E(Q)^k (E(S^2)-1)
        + E(X_k^2) started at X_0 = 1, where S is the weight sum and Q the
        sum of squared weights; geometric summation gives the ceiling.
        """
        a = self.square_mean - 1.0
        b = self.sum_sq_mean
        bound = 1.0 + a / (1.0 - b)
        # first-order error propagation
        da = self.square_se / (1.0 - b)
        db = abs(a) * self.sum_sq_se / (1.0 - b) ** 2
        return bound, float(np.hypot(da, db))


def weight_statistics(family: WeightFamily, trials: int, seed: int,
                      *, chunk: int = _CHUNK) -> WeightStats:
    """Estimate E(sum p), E(sum p^2) and E((sum p)^2) over fresh parent draws."""
    base = streams.derive_key(streams.root_key(seed), streams.TAG_TRIAL)
    sums = np.empty(trials)
    sums_sq = np.empty(trials)
    for start in range(0, trials, chunk):
        count = min(chunk, trials - start)
        idx = np.arange(start, start + count, dtype=np.uint64)
        roots = streams.child_key(np.broadcast_to(base, (count, streams.KEY_LANES)), idx)
        wts, _ = _expand_weights(family, roots)
        sums[start:start + count] = wts.sum(axis=1)
        sums_sq[start:start + count] = (wts**2).sum(axis=1)
    sq = sums**2
    se = lambda a: float(a.std(ddof=1) / np.sqrt(trials))
    return WeightStats(trials=trials,
                       sum_mean=float(sums.mean()), sum_se=se(sums),
                       sum_sq_mean=float(sums_sq.mean()), sum_sq_se=se(sums_sq),
                       square_mean=float(sq.mean()), square_se=se(sq))


@dataclass(frozen=True)
class MartingaleStats:
    """Per-depth summary of simulated martingale partial sums."""

    depth: int
    trials: int
    mode: str
    means: np.ndarray
    ses: np.ndarray
    variances: np.ndarray
    min_value: float
    samples: np.ndarray | None = None   # (trials, depth) when requested

    def to_dict(self) -> dict:
        return {
            "depth": self.depth, "trials": self.trials, "mode": self.mode,
            "means": self.means.tolist(), "standard_errors": self.ses.tolist(),
            "variances": self.variances.tolist(), "min_value": self.min_value,
        }


def simulate_martingale(family: WeightFamily, depth: int, trials: int, seed: int, *,
                        node_cap: int = DEFAULT_NODE_CAP, chunk: int = _CHUNK,
                        keep_samples: bool = False, workers: int = 1) -> MartingaleStats:
    """Empirical law of X_1..X_depth across independent realizations.

    Exact enumeration of the super-tree while the node count stays under
    `node_cap`; otherwise a weighted random descent whose running product of
    level sums is an unbiased (higher variance) estimator of each X_k.
    """
    B = family.words_arr.shape[0]
    exact = B**depth <= node_cap
    base = streams.derive_key(streams.root_key(seed), streams.TAG_TRIAL)
    if trials * min(B**depth, node_cap) > 5e9:
        raise BudgetError("martingale simulation exceeds the compute cap")

    def run_chunk(start: int, count: int) -> np.ndarray:
        idx = np.arange(start, start + count, dtype=np.uint64)
        roots = streams.child_key(np.broadcast_to(base, (count, streams.KEY_LANES)), idx)
        X = np.empty((count, depth))
        if exact:
            keys = roots.reshape(count, 1, streams.KEY_LANES)
            vals = np.ones((count, 1))
            for k in range(depth):
                L = vals.shape[1]
                wts, child_keys = _expand_weights(family, keys.reshape(-1, streams.KEY_LANES))
                vals = (vals.reshape(-1, 1) * wts).reshape(count, L * B)
                keys = child_keys.reshape(count, L * B, streams.KEY_LANES)
                X[:, k] = vals.sum(axis=1)
        else:
            sel = streams.derive_key(roots, streams.TAG_DESCENT)
            cur = roots
            prod = np.ones(count)
            for k in range(depth):
                wts, child_keys = _expand_weights(family, cur)
                sums = wts.sum(axis=1)
                prod = prod * sums
                X[:, k] = prod
                u = streams.uniforms(sel, 0, k)
                cdf = np.cumsum(wts / sums[:, None], axis=1)
                choice = np.minimum((u[:, None] > cdf).sum(axis=1), B - 1)
                cur = child_keys[np.arange(count), choice]
        return X

    chunks = [(s, min(chunk, trials - s)) for s in range(0, trials, chunk)]
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: run_chunk(*c), chunks))
    else:
        parts = [run_chunk(*c) for c in chunks]
    X = np.vstack(parts)
    return MartingaleStats(
        depth=depth, trials=trials, mode="exact" if exact else "descent",
        means=X.mean(axis=0), ses=X.std(axis=0, ddof=1) / np.sqrt(trials),
        variances=X.var(axis=0, ddof=1), min_value=float(X.min()),
        samples=X if keep_samples else None)


def is_subsystem_word(word, sub: SubsystemSpec) -> bool:
    """Whether `word` is a concatenation of whole super-letters."""
    word = Word(word)
    if len(word) % sub.q != 0:
        return False
    for blk in range(len(word) // sub.q):
        block = word[blk * sub.q:(blk + 1) * sub.q]
        if Word(block[sub.n:]) != sub.suffix:
            return False
    return True


def truncated_martingale(family: WeightFamily, word, levels: int,
                         *, node_cap: int = DEFAULT_NODE_CAP) -> float:
    """X_levels below `word` on this realization (exact enumeration)."""
    if levels == 0:
        return 1.0
    B = len(family.words)
    if B**levels > node_cap:
        raise BudgetError(f"{B}^{levels} nodes exceed the enumeration cap")
    frontier = [(Word(word), 1.0)]
    for _ in range(levels):
        frontier = [(parent + w, val * p)
                    for parent, val in frontier
                    for w, p in zip(family.words, family.weight_vector(parent))]
    return float(sum(val for _, val in frontier))


def sample_cylinder_measure(family: WeightFamily, word, tail_depth: int) -> float:
    """Truncated measure of the cylinder at `word` (a super-word).

    Returns phibar(word) * X where X is the depth-`tail_depth` truncation of
    the limit martingale variable below the word; the truncation has mean 1
    exactly, with variance decaying in `tail_depth`.
    """
    word = Word(word)
    if not is_subsystem_word(word, family.sub):
        raise ValueError("word does not address a subsystem cylinder")
    return family.phibar(word) * truncated_martingale(family, word, tail_depth)


def descend_measure(family: WeightFamily, lanes: int, super_depth: int, *,
                    select_keys: np.ndarray | None = None, seed: int | None = None,
                    checkpoints: tuple = ()):
    """Vectorized weighted descent of `lanes` points down the super-tree.

    Children are chosen proportionally to their weights, so depth-m prefixes
    are distributed like the (mean-normalized) cylinder weights.  Returns
    (letters (lanes, super_depth*q), snapshots {super_level: (lanes, d) points}).
    Snapshot points are center-anchored truncated projections.
    """
    spec, tree = family.spec, family.tree
    words_arr = family.words_arr
    B, q = words_arr.shape
    t = spec.translation_array()
    box = attractor_box(spec)
    if select_keys is None:
        base = streams.derive_key(streams.root_key(seed), streams.TAG_DESCENT)
        select_keys = streams.child_key(
            np.broadcast_to(base, (lanes, streams.KEY_LANES)),
            np.arange(lanes, dtype=np.uint64))
    keys = np.broadcast_to(tree.root, (lanes, streams.KEY_LANES)).copy()
    x = np.zeros((lanes, spec.d))
    cum = np.ones((lanes, spec.d))
    letters_out = np.empty((lanes, super_depth * q), dtype=np.int64)
    snapshots = {}
    for step in range(super_depth):
        wts, _ = _expand_weights(family, keys)
        cdf = np.cumsum(wts / wts.sum(axis=1)[:, None], axis=1)
        u = streams.uniforms(select_keys, 0, step)
        choice = np.minimum((u[:, None] > cdf).sum(axis=1), B - 1)
        chosen = words_arr[choice]
        for m in range(q):
            lv = chosen[:, m]
            for k in range(spec.d):
                comp = dist.component_ratios(spec.axis_laws[k], keys, k, lv)
                x[:, k] += cum[:, k] * (1 - comp) * t[lv - 1, k]
                cum[:, k] *= comp
            keys = streams.child_key(keys, lv)
        letters_out[:, step * q:(step + 1) * q] = chosen
        if step + 1 in checkpoints:
            snapshots[step + 1] = x + cum * box.center
    return letters_out, snapshots


def sample_point_from_measure(family: WeightFamily, target_depth: int, key: np.ndarray) -> Word:
    """Weighted-descent address sample; pure function of (tree, key)."""
    q = family.sub.q
    if target_depth % q != 0:
        raise ValueError("target depth must be divisible by the block period")
    sel = np.asarray(key, dtype=np.uint64).reshape(1, streams.KEY_LANES)
    letters, _ = descend_measure(family, 1, target_depth // q, select_keys=sel)
    return Word(letters[0])
