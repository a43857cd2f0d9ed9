"""System specification, seed-deterministic realizations, and projections.

A `SpongeSpec` fixes the deterministic data (translations, per-axis ratio
vector laws, designated smooth/escape child per axis, block lengths).  A
`RealizationTree` attaches one sampled diagonal matrix to every finite word;
the ratio vector drawn at (parent word, axis) is a pure function of
(seed, word, axis), so lazy expansion in any order, caching, and vectorized
level-synchronous sweeps all see identical numbers.

Projections are evaluated at finite depth.  The returned point is the image
of the invariant box's center under the depth-long composition, so it always
lies inside the invariant box and is within alpha_hi^depth * width of the
true limit point on each axis.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from . import distributions as dist
from . import streams
from .errors import NonContractionError, SchemaError
from .symbolic import EMPTY, SubsystemSpec, Tail, Word, extend


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned invariant box: every composed map sends it into itself."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def center(self) -> np.ndarray:
        return (self.hi + self.lo) / 2

    def contains(self, points: np.ndarray, slack: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.all((pts >= self.lo - slack) & (pts <= self.hi + slack), axis=1)


@dataclass(frozen=True)
class SpongeSpec:
    """Full description of a random self-affine sponge in R^d."""

    d: int
    N: int
    translations: tuple            # N points, each a d-tuple
    axis_laws: tuple               # d RatioVectorLaws
    alpha_lo: float
    alpha_hi: float
    smooth_indices: tuple          # per axis: child whose log-ratio law smooths (R4)
    separated_indices: tuple       # per axis: child with a different translation
    smoothing_lengths: tuple = ()  # per axis block length p_k (default 1)
    escape_lengths: tuple = ()     # per axis block length p'_k (default: computed)
    name: str = ""

    def __post_init__(self):
        if self.d < 1 or self.d > 8:
            raise SchemaError(f"ambient dimension d={self.d} outside 1..8")
        if self.N < 2:
            raise SchemaError(f"alphabet size N={self.N} must be >= 2")
        trans = tuple(tuple(float(c) for c in t) for t in self.translations)
        if len(trans) != self.N or any(len(t) != self.d for t in trans):
            raise SchemaError("need N translation points of dimension d")
        object.__setattr__(self, "translations", trans)
        object.__setattr__(self, "axis_laws", tuple(self.axis_laws))
        if len(self.axis_laws) != self.d:
            raise SchemaError("need one ratio vector law per axis")
        if not 0 < self.alpha_lo <= self.alpha_hi < 1:
            raise NonContractionError(
                f"need 0 < alpha_lo <= alpha_hi < 1, got [{self.alpha_lo}, {self.alpha_hi}]")
        for k, vlaw in enumerate(self.axis_laws):
            if vlaw.N != self.N:
                raise SchemaError(f"axis {k + 1} vector law has {vlaw.N} children, expected {self.N}")
            lo, hi = vlaw.abs_bounds()
            if lo < self.alpha_lo - 1e-12 or hi > self.alpha_hi + 1e-12:
                raise SchemaError(
                    f"axis {k + 1} ratio supports [{lo}, {hi}] escape "
                    f"[alpha_lo, alpha_hi]; violates the modulus bound (R2)")
        for k in range(self.d):
            col = {t[k] for t in trans}
            if len(col) < 2:
                raise SchemaError(
                    f"axis {k + 1} translations are a singleton; the non-singleton "
                    "translation condition fails")
        idx = tuple(int(i) for i in self.smooth_indices)
        idx2 = tuple(int(i) for i in self.separated_indices)
        if len(idx) != self.d or len(idx2) != self.d:
            raise SchemaError("need smooth and separated child indices for every axis")
        for k, (l, lp) in enumerate(zip(idx, idx2)):
            if not (1 <= l <= self.N and 1 <= lp <= self.N):
                raise SchemaError(f"axis {k + 1} designated indices outside 1..N")
            if trans[l - 1][k] == trans[lp - 1][k]:
                raise SchemaError(
                    f"axis {k + 1}: designated children {l} and {lp} share the same "
                    "translation coordinate; escape child must differ (R4 designation)")
        object.__setattr__(self, "smooth_indices", idx)
        object.__setattr__(self, "separated_indices", idx2)
        p = tuple(int(x) for x in self.smoothing_lengths) or (1,) * self.d
        if len(p) != self.d or min(p) < 1:
            raise SchemaError("smoothing lengths must give a positive length per axis")
        object.__setattr__(self, "smoothing_lengths", p)
        minimal = tuple(min_escape_length(self, k) for k in range(self.d))
        if self.escape_lengths:
            pp = tuple(int(x) for x in self.escape_lengths)
            if len(pp) != self.d:
                raise SchemaError("escape lengths must cover every axis")
            for k, (have, need) in enumerate(zip(pp, minimal)):
                if have < need:
                    raise SchemaError(
                        f"axis {k + 1} escape length {have} below certified minimum {need}; "
                        "overrides may only increase it")
        else:
            pp = minimal
        object.__setattr__(self, "escape_lengths", pp)

    def marginal(self, child: int, axis: int) -> dist.RatioLaw:
        """Marginal ratio law of 1-based `child` on 0-based `axis`."""
        return self.axis_laws[axis].marginals[child - 1]

    def translation_array(self) -> np.ndarray:
        return np.asarray(self.translations, dtype=float)

    def subsystem(self, n: int) -> SubsystemSpec:
        return SubsystemSpec(
            n=n,
            smooth_letters=self.smooth_indices,
            smoothing_lengths=self.smoothing_lengths,
            escape_letters=self.separated_indices,
            escape_lengths=self.escape_lengths,
        )


def bounding_box(spec: SpongeSpec) -> BoundingBox:
    """Per-axis interval [t_min - w, t_max + w] with w = a(t_max - t_min)/(1 - a).

    This interval is invariant under every realized map, including signed
    ratios, so all projections of all realizations stay inside it.
    """
    t = spec.translation_array()
    tmin, tmax = t.min(axis=0), t.max(axis=0)
    w = spec.alpha_hi * (tmax - tmin) / (1 - spec.alpha_hi)
    return BoundingBox(tmin - w, tmax + w)


def attractor_box(spec: SpongeSpec) -> BoundingBox:
    """Tightest certified invariant box.

    On an axis whose ratio laws are almost surely positive, [t_min, t_max]
    is already invariant (each map is a positive contraction toward a fixed
    point inside it); axes allowing signed ratios fall back to the inflated
    interval of `bounding_box`.
    """
    wide = bounding_box(spec)
    t = spec.translation_array()
    lo = np.array(wide.lo)
    hi = np.array(wide.hi)
    for k in range(spec.d):
        if all(m.sign > 0 for m in spec.axis_laws[k].marginals):
            lo[k] = t[:, k].min()
            hi[k] = t[:, k].max()
    return BoundingBox(lo, hi)


def min_escape_length(spec: SpongeSpec, axis: int) -> int:
    """Smallest u with alpha_hi^u * diam strictly inside the designated gap.

    Guarantees the escape block's cylinder image cannot reach the smooth
    child's fixed coordinate, certifying a positive separation constant.
    """
    box = attractor_box(spec)
    diam = float(box.width[axis])
    t = spec.translation_array()
    gap = abs(t[spec.smooth_indices[axis] - 1, axis] - t[spec.separated_indices[axis] - 1, axis])
    u = 1
    while 2 * spec.alpha_hi**u * diam >= gap:
        u += 1
        if u > 10_000:
            raise NonContractionError("escape block length does not stabilize")
    return u


def separation_margins(spec: SpongeSpec) -> np.ndarray:
    """Certified per-axis lower bound on dist(t_smooth, escape-block cylinder)."""
    box = attractor_box(spec)
    t = spec.translation_array()
    out = np.empty(spec.d)
    for k in range(spec.d):
        tprime = t[spec.separated_indices[k] - 1, k]
        maxdev = max(box.hi[k] - tprime, tprime - box.lo[k])
        gap = abs(t[spec.smooth_indices[k] - 1, k] - tprime)
        out[k] = gap - spec.alpha_hi ** spec.escape_lengths[k] * maxdev
    return out


class RealizationTree:
    """Lazy, seed-derived assignment of diagonal matrices to finite words.

    Thread safe: the cache only ever stores values that equal what any other
    expansion order would have produced, so racing inserts are benign and
    reads are consistent.
    """

    def __init__(self, spec: SpongeSpec, seed: int):
        self.spec = spec
        self.seed = int(seed)
        self.root = streams.derive_key(streams.root_key(self.seed), streams.TAG_TREE)
        self._keys = {EMPTY: self.root}
        self._children = {}
        self._lock = threading.Lock()

    def key_of(self, word) -> np.ndarray:
        word = Word(word)
        with self._lock:
            key = self._keys.get(word)
        if key is None:
            key = streams.word_key(self.root, word)
            with self._lock:
                self._keys[word] = key
        return key

    def children_ratios(self, word) -> np.ndarray:
        """(d, N) signed ratios of the N children of `word`, one row per axis."""
        word = Word(word)
        with self._lock:
            cached = self._children.get(word)
        if cached is not None:
            return cached
        key = self.key_of(word).reshape(1, streams.KEY_LANES)
        rows = [dist.sample_vectors(self.spec.axis_laws[k], key, k)[0]
                for k in range(self.spec.d)]
        mat = np.vstack(rows)
        mat.setflags(write=False)
        with self._lock:
            self._children.setdefault(word, mat)
        return mat

    def ratios(self, word) -> np.ndarray:
        """Diagonal of A_word; the empty word carries the identity."""
        word = Word(word)
        if len(word) == 0:
            return np.ones(self.spec.d)
        return self.children_ratios(word.prefix(len(word) - 1))[:, word[-1] - 1]

    def cumulative(self, word) -> np.ndarray:
        """Per-axis product of ratios along all prefixes of `word`."""
        out = np.ones(self.spec.d)
        word = Word(word)
        for m in range(1, len(word) + 1):
            out = out * self.ratios(word.prefix(m))
        return out


def realize(spec: SpongeSpec, seed: int) -> RealizationTree:
    return RealizationTree(spec, seed)


def cumulative_ratio(tree: RealizationTree, word, axis: int) -> float:
    """Product of per-level ratios along `word` on one axis (1 for the empty word)."""
    return float(tree.cumulative(word)[axis])


def project(tree: RealizationTree, word, tail: Tail, depth: int, *, context=EMPTY):
    """Truncated canonical projection of the infinite word `word`+`tail`.

    Returns (point, error_radius), both length-d arrays.  With a nonempty
    `context` the projection is evaluated in the subtree rooted at `context`,
    i.e. all randomness is read at words context+prefix.

    The point is the composed image of the invariant box center, so the true
    limit lies within `error_radius` of it on every axis, and the point
    itself always lies inside the invariant box.
    """
    spec = tree.spec
    letters = extend(word, tail, depth)
    box = attractor_box(spec)
    t = spec.translation_array()
    x = np.zeros(spec.d)
    cum = np.ones(spec.d)
    context = Word(context)
    for m, letter in enumerate(letters, start=1):
        alpha = tree.ratios(context + letters[:m])
        x += cum * (1 - alpha) * t[letter - 1]
        cum = cum * alpha
    point = x + cum * box.center
    radius = spec.alpha_hi**depth * box.width
    return point, radius


def project_letter_paths(tree: RealizationTree, letters: np.ndarray):
    """Vectorized truncated projection of many letter paths.

    `letters` has shape (M, depth) with 1-based entries.  Returns (points,
    cumulatives): (M, d) arrays.  Randomness matches `project` exactly since
    keys are chained per word.
    """
    spec = tree.spec
    M, depth = letters.shape
    box = attractor_box(spec)
    t = spec.translation_array()
    keys = np.broadcast_to(tree.root, (M, streams.KEY_LANES)).copy()
    x = np.zeros((M, spec.d))
    cum = np.ones((M, spec.d))
    for m in range(depth):
        lv = letters[:, m]
        for k in range(spec.d):
            alpha = dist.component_ratios(spec.axis_laws[k], keys, k, lv)
            x[:, k] += cum[:, k] * (1 - alpha) * t[lv - 1, k]
            cum[:, k] *= alpha
        keys = streams.child_key(keys, lv)
    points = x + cum * box.center
    return points, cum


def cylinder_rect(tree: RealizationTree, word, box: BoundingBox) -> BoundingBox:
    """Image of `box` under the composed affine map along `word`; images nest."""
    lo = np.array(box.lo, dtype=float)
    hi = np.array(box.hi, dtype=float)
    word = Word(word)
    for m in range(len(word), 0, -1):        # innermost map first
        alpha = tree.ratios(word.prefix(m))
        t = tree.spec.translation_array()[word[m - 1] - 1]
        a = t + alpha * (lo - t)
        b = t + alpha * (hi - t)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
    return BoundingBox(lo, hi)
