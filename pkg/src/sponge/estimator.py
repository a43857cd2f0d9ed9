"""Empirical geometry probes: covering counts, transversality, energy.

Everything here is desk-scale evidence, not proof: box counting estimates the
Minkowski dimension from a finite sample, the cylinder stopping-set bound
tracks the covering argument's random upper bound, the transversality probe
measures conditional collision probabilities against the linear-in-rho bound
with a fitted (clearly non-certified) constant, and the energy probe watches
the truncated pair integral stabilize or blow up either side of the root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import distributions as dist
from . import streams
from .errors import BudgetError, DegenerateFitError
from .measure import WeightFamily, descend_measure
from .rifs import (BoundingBox, RealizationTree, attractor_box,
                   bounding_box, project_letter_paths)
from .symbolic import SubsystemSpec, Word

DEFAULT_NODE_BUDGET = 2_000_000


@dataclass(frozen=True)
class PointCloud:
    """Truncated-projection samples of one realization."""

    points: np.ndarray          # (count, d)
    error_radius: np.ndarray    # (d,) certified per-axis truncation error
    seed: int
    depth: int

    @property
    def count(self) -> int:
        return self.points.shape[0]


def _stopping_set(tree: RealizationTree, eps: float, max_depth: int, cap: int):
    """Nodes whose longest cumulative side first drops to `eps`.

    Returns (keys, x, cum) arrays for the stopped cylinders in lexicographic
    order, or None as soon as the set would exceed `cap`.  Branches still
    alive at `max_depth` are stopped there.
    """
    spec = tree.spec
    t = spec.translation_array()
    keys = tree.root.reshape(1, streams.KEY_LANES)
    x = np.zeros((1, spec.d))
    cum = np.ones((1, spec.d))
    done = []
    for level in range(1, max_depth + 1):
        F = keys.shape[0]
        if F == 0:
            break
        rep_keys = np.repeat(keys, spec.N, axis=0)
        letters = np.tile(np.arange(1, spec.N + 1, dtype=np.int64), F)
        ratios = np.empty((F, spec.d, spec.N))
        for k in range(spec.d):
            ratios[:, k, :] = dist.sample_vectors(spec.axis_laws[k], keys, k)
        alpha = ratios.transpose(0, 2, 1).reshape(F * spec.N, spec.d)
        child_x = np.repeat(x, spec.N, axis=0) + np.repeat(cum, spec.N, axis=0) \
            * (1 - alpha) * t[letters - 1]
        child_cum = np.repeat(cum, spec.N, axis=0) * alpha
        child_keys = streams.child_key(rep_keys, letters)
        stop = np.abs(child_cum).max(axis=1) <= eps
        if level == max_depth:
            stop = np.ones_like(stop)
        if stop.any():
            done.append((child_keys[stop], child_x[stop], child_cum[stop]))
        if sum(part[0].shape[0] for part in done) + (~stop).sum() > cap:
            return None
        keys = child_keys[~stop]
        x = child_x[~stop]
        cum = child_cum[~stop]
    return (np.concatenate([p[0] for p in done]),
            np.concatenate([p[1] for p in done]),
            np.concatenate([p[2] for p in done]))


def sample_cloud(tree: RealizationTree, count: int, depth: int, seed: int) -> PointCloud:
    """Resolution-adapted point sample of one realization's attractor.

    Enumerates the finest dyadic stopping set (cylinders whose longest side
    drops to eps, eps halved while the set fits in `count`, stopping depth
    capped at `depth` letters) so every part of the attractor keeps one
    representative, then tops the cloud up to exactly `count` points with
    weighted random descents inside the stopped cylinders.  Mass-weighted
    sampling alone would miss thin covering cells and flatten the observed
    box-counting slope.
    """
    spec = tree.spec
    box = attractor_box(spec)
    t = spec.translation_array()
    if count < spec.N:
        raise ValueError("cloud budget must allow at least N points")
    eps = spec.alpha_hi
    chosen = _stopping_set(tree, eps, depth, count)
    if chosen is None:
        raise BudgetError("cloud budget cannot hold one level of cylinders")
    while True:
        trial = _stopping_set(tree, eps / 2, depth, count)
        if trial is None:
            break
        eps /= 2
        chosen = trial
        if eps < spec.alpha_lo**depth:
            break
    keys, x, cum = chosen
    M = keys.shape[0]
    extras = count - M
    reps = np.full(M, extras // M, dtype=np.int64)
    reps[:extras % M] += 1
    idx = np.repeat(np.arange(M), reps)
    exkeys = keys[idx]
    exx = x[idx].copy()
    excum = cum[idx].copy()
    base = streams.derive_key(streams.root_key(seed), streams.TAG_CLOUD)
    sel = streams.child_key(np.broadcast_to(base, (idx.size, streams.KEY_LANES)),
                            np.arange(idx.size, dtype=np.uint64))
    for m in range(depth):
        alive = np.abs(excum).max(axis=1) > spec.alpha_hi**depth
        if not alive.any():
            break
        ratios = np.empty((int(alive.sum()), spec.d, spec.N))
        for k in range(spec.d):
            ratios[:, k, :] = dist.sample_vectors(spec.axis_laws[k], exkeys[alive], k)
        u = streams.uniforms(sel[alive], 0, m)
        choice = np.minimum((u * spec.N).astype(np.int64), spec.N - 1)
        alpha = ratios[np.arange(choice.size), :, choice]
        exx[alive] += excum[alive] * (1 - alpha) * t[choice]
        excum[alive] = excum[alive] * alpha
        exkeys[alive] = streams.child_key(exkeys[alive], choice + 1)
    points = np.concatenate([x + cum * box.center, exx + excum * box.center])
    radius = max(eps, spec.alpha_hi**depth) * box.width
    return PointCloud(points=points, error_radius=radius, seed=seed, depth=depth)


@dataclass(frozen=True)
class CoverReport:
    radius: float
    count: int
    method: str
    stop_count: int = 0
    bound_value: float = 0.0


def box_count(cloud: PointCloud, r: float, box: BoundingBox | None = None) -> CoverReport:
    """Occupied cells of the mesh-r grid anchored at the box corner.

    Grid counts bracket ball-covering counts within dimension constants
    (N_ball(r sqrt d) <= N_grid(r) <= 3^d N_ball(r)), which cancels in the
    log-log slope.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    lo = cloud.points.min(axis=0) if box is None else box.lo
    idx = np.floor((cloud.points - lo) / r).astype(np.int64)
    occupied = np.unique(idx, axis=0).shape[0]
    return CoverReport(radius=float(r), count=int(occupied), method="grid")


@dataclass(frozen=True)
class BoxDimensionFit:
    slope: float
    stderr: float
    ci95: tuple
    radii: tuple
    counts: tuple
    residuals: tuple
    clipped: int     # radii dropped for sitting under the resolution floor


def estimate_box_dimension(cloud: PointCloud, radii, box: BoundingBox | None = None) -> BoxDimensionFit:
    """Least-squares slope of log N_r against -log r over a dyadic schedule."""
    radii = sorted(float(r) for r in radii)
    floor = 2.0 * float(np.max(cloud.error_radius))
    used = [r for r in radii if r >= floor]
    clipped = len(radii) - len(used)
    if len(used) < 4:
        raise ValueError("need at least 4 radii above the resolution floor")
    if max(used) / min(used) < 8:
        raise ValueError("radii must span at least 3 octaves")
    counts = [box_count(cloud, r, box).count for r in used]
    if len(set(counts)) == 1:
        raise DegenerateFitError("all covering counts equal; no slope to fit")
    x = -np.log(np.asarray(used))
    y = np.log(np.asarray(counts, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    dof = max(len(used) - 2, 1)
    sxx = float(((x - x.mean()) ** 2).sum())
    stderr = math.sqrt(float((resid**2).sum()) / dof / sxx)
    return BoxDimensionFit(
        slope=float(slope), stderr=stderr,
        ci95=(float(slope - 1.96 * stderr), float(slope + 1.96 * stderr)),
        radii=tuple(used), counts=tuple(counts),
        residuals=tuple(float(v) for v in resid), clipped=clipped)


@dataclass(frozen=True)
class CoverBound:
    """Stopping-set covering bound at scale alpha_hi^n for budget s."""

    n: int
    s: float
    ell: int
    m_n: int
    stop_count: int
    A_n: float
    satisfied: bool     # A_n * alpha_hi^(n s) <= 1


def cylinder_cover_bound(tree: RealizationTree, n: int, s: float,
                         *, node_budget: int = DEFAULT_NODE_BUDGET) -> CoverBound:
    """Build the stopping set and evaluate the random covering bound.

    A word stops when the ell-th largest cumulative axis modulus first drops
    to alpha_hi^n; its cylinder costs 2 * prod_{m<ell} (m-th largest)/(ell-th
    largest) balls at that scale.  ell = ceil(s) clamped to 1..d (the empty
    product at s <= 1 makes the bound 2 * |stopping set|).
    """
    spec = tree.spec
    if s < 0:
        raise ValueError("s must be >= 0")
    thresh = spec.alpha_hi**n
    ell = min(spec.d, max(1, math.ceil(s)))
    m_n = max(1, math.ceil(n * math.log(spec.alpha_hi) / math.log(spec.alpha_lo)))
    letters_all = np.arange(1, spec.N + 1, dtype=np.int64)
    keys = tree.root.reshape(1, streams.KEY_LANES)
    cum = np.ones((1, spec.d))
    A = 0.0
    stop_count = 0
    for _ in range(n + 1):
        F = keys.shape[0]
        if F == 0:
            break
        if F * spec.N > node_budget:
            raise BudgetError(f"stopping-set frontier exceeds node budget {node_budget}")
        rep_keys = np.repeat(keys, spec.N, axis=0)
        lv = np.tile(letters_all, F)
        child_cum = np.repeat(cum, spec.N, axis=0)
        for k in range(spec.d):
            comp = dist.component_ratios(spec.axis_laws[k], rep_keys, k, lv)
            child_cum[:, k] = child_cum[:, k] * comp
        child_keys = streams.child_key(rep_keys, lv)
        mags = np.sort(np.abs(child_cum), axis=1)[:, ::-1]
        designated = mags[:, ell - 1]
        stopped = designated <= thresh
        if stopped.any():
            contrib = np.prod(mags[stopped, :ell - 1], axis=1) / designated[stopped] ** (ell - 1)
            A += float(contrib.sum())
            stop_count += int(stopped.sum())
        keys = child_keys[~stopped]
        cum = child_cum[~stopped]
    A_n = 2.0 * A
    return CoverBound(n=n, s=float(s), ell=ell, m_n=m_n, stop_count=stop_count,
                      A_n=A_n, satisfied=bool(A_n * spec.alpha_hi ** (n * s) <= 1.0))


# ----------------------------------------------------------------------------
# Transversality probe
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class TransversalityPair:
    """Two diverging subsystem truncations and their designated block."""

    letters_i: tuple
    letters_j: tuple
    lcp_len: int
    u: int               # block offset: suffix block starts at lcp+u+1 along i

    @property
    def block_start(self) -> int:
        return self.lcp_len + self.u


def make_transversality_pairs(spec, sub: SubsystemSpec, count: int, seed: int,
                              *, tail_supers: int = 2) -> list:
    """Deterministic family of word pairs inside the subsystem shift space.

    Pair idx splits at super-block a = idx mod 2, free slot v cycling over
    1..n, with random (seeded) shared prefix, divergent letters and tails.
    """
    N = spec.N
    q, n = sub.q, sub.n
    base = streams.derive_key(streams.root_key(seed), streams.TAG_PAIRS)
    pairs = []
    for idx in range(count):
        pk = streams.child_key(base, idx)
        draw = iter(range(10_000))
        rand_letter = lambda: int(streams.integers(pk, 0, next(draw), N)) + 1
        a = idx % 2
        v = (idx % n) + 1
        shared = []
        for _ in range(a):                       # full shared super-blocks
            shared.extend(rand_letter() for _ in range(n))
            shared.extend(sub.suffix)
        shared.extend(rand_letter() for _ in range(v - 1))   # partial free slot
        x = rand_letter()
        y = rand_letter()
        while y == x:
            y = rand_letter()
        def finish(first):
            out = list(shared) + [first]
            out.extend(rand_letter() for _ in range(n - v))  # rest of free part
            out.extend(sub.suffix)
            for _ in range(tail_supers):
                out.extend(rand_letter() for _ in range(n))
                out.extend(sub.suffix)
            return tuple(out)
        pairs.append(TransversalityPair(
            letters_i=finish(x), letters_j=finish(y),
            lcp_len=len(shared), u=n - v + 1))
    return pairs


def _walk_ratios(tree: RealizationTree, letters) -> np.ndarray:
    """(depth, d) per-level ratios along a word of this realization."""
    out = np.empty((len(letters), tree.spec.d))
    word = ()
    for m, letter in enumerate(letters):
        word = word + (letter,)
        out[m] = tree.ratios(Word(word))
    return out


def _anchored_point(spec, letters, ratios, box) -> np.ndarray:
    t = spec.translation_array()
    x = np.zeros(spec.d)
    cum = np.ones(spec.d)
    for m, letter in enumerate(letters):
        x += cum * (1 - ratios[m]) * t[letter - 1]
        cum = cum * ratios[m]
    return x + cum * box.center


@dataclass(frozen=True)
class TransversalityRow:
    pair: int
    env: int
    rho: float
    p_hat: float
    alpha_lcp: tuple      # per-axis |cumulative ratio| at the common prefix
    resamples: int


def probe_transversality(spec, sub: SubsystemSpec, pairs, rhos, environments: int,
                         resamples: int, seed: int) -> list:
    """Empirical conditional collision probabilities.

    For each environment (one realization with everything outside the
    designated block frozen) the block's p+p' ratio vectors are redrawn
    `resamples` times and the fraction of resamples with |Pi(i)-Pi(j)| < rho
    is recorded.  Counting all rho thresholds against one distance sample
    makes the empirical probabilities exactly monotone in rho.

    `rhos` is either one schedule shared by every pair or a per-pair list of
    schedules.
    """
    if rhos and np.isscalar(rhos[0]):
        rhos_per_pair = [sorted(float(r) for r in rhos)] * len(pairs)
    else:
        rhos_per_pair = [sorted(float(r) for r in rs) for rs in rhos]
    box = attractor_box(spec)
    t = spec.translation_array()
    span = sub.p + sub.p_prime
    rows = []
    rbase = streams.derive_key(streams.root_key(seed), streams.TAG_RESAMPLE)
    for env in range(environments):
        tree = RealizationTree(spec, streams.subseed(seed, env))
        for pidx, pair in enumerate(pairs):
            li, lj = pair.letters_i, pair.letters_j
            H = pair.block_start
            ri = _walk_ratios(tree, li)
            rj = _walk_ratios(tree, lj)
            pj = _anchored_point(spec, lj, rj, box)
            # split i into prefix (1..H), designated block, tail
            x_pre = np.zeros(spec.d)
            cum = np.ones(spec.d)
            for m in range(H):
                x_pre += cum * (1 - ri[m]) * t[li[m] - 1]
                cum = cum * ri[m]
            c_pre = cum.copy()
            tail_letters = li[H + span:]
            tail_ratios = ri[H + span:]
            x_tail = np.zeros(spec.d)
            cum = np.ones(spec.d)
            for m, letter in enumerate(tail_letters):
                x_tail += cum * (1 - tail_ratios[m]) * t[letter - 1]
                cum = cum * tail_ratios[m]
            tail_value = x_tail + cum * box.center
            alpha_lcp = np.abs(np.prod(ri[:pair.lcp_len], axis=0)) \
                if pair.lcp_len else np.ones(spec.d)
            # resampled block contribution, vectorized over resamples
            rk = streams.child_key(streams.child_key(rbase, env), pidx)
            rkeys = streams.child_key(np.broadcast_to(rk, (resamples, streams.KEY_LANES)),
                                      np.arange(resamples, dtype=np.uint64))
            bx = np.zeros((resamples, spec.d))
            bcum = np.ones((resamples, spec.d))
            block_letters = li[H:H + span]
            for j, letter in enumerate(block_letters):
                pos_keys = streams.child_key(rkeys, 10_000 + j)
                for k in range(spec.d):
                    comp = dist.component_ratios(spec.axis_laws[k], pos_keys, k,
                                                 np.full(resamples, letter))
                    bx[:, k] += bcum[:, k] * (1 - comp) * t[letter - 1, k]
                    bcum[:, k] *= comp
            pi = x_pre + c_pre * (bx + bcum * tail_value)
            distv = np.sqrt(((pi - pj) ** 2).sum(axis=1))
            for rho in rhos_per_pair[pidx]:
                rows.append(TransversalityRow(
                    pair=pidx, env=env, rho=rho,
                    p_hat=float((distv < rho).mean()),
                    alpha_lcp=tuple(float(v) for v in alpha_lcp),
                    resamples=resamples))
    return rows


def transversality_bound(C: float, rho: float, alpha_lcp) -> float:
    """prod_k min(1, C rho / |alpha_k|)."""
    out = 1.0
    for a in alpha_lcp:
        out *= min(1.0, C * rho / a)
    return out


def required_constant(p_hat: float, rho: float, alpha_lcp) -> float:
    """Smallest C whose product bound covers p_hat (monotone bisection)."""
    if p_hat <= 0:
        return 0.0
    hi = 1.0
    while transversality_bound(hi, rho, alpha_lcp) < p_hat:
        hi *= 2.0
        if hi > 1e18:
            raise ArithmeticError("constant fit diverged")
    lo = 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if transversality_bound(mid, rho, alpha_lcp) >= p_hat:
            hi = mid
        else:
            lo = mid
    return hi


def fit_transversality_constant(rows, safety: float = 2.0) -> float:
    """Calibrated constant: max required C over the calibration rows, padded."""
    if not rows:
        raise ValueError("no calibration rows")
    return safety * max(required_constant(r.p_hat, r.rho, r.alpha_lcp) for r in rows)


# ----------------------------------------------------------------------------
# Energy integral probe
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyPoint:
    depth: int          # letters
    t: float
    estimate: float
    floor: float
    pairs: int


def energy_trend(family: WeightFamily, t: float, pairs: int, super_depths, seed: int) -> list:
    """Truncated pair-energy estimates at several depths, matched pairs.

    Pairs are two independent measure-descents on one realization; the same
    descents extend across depths, so depth trends are not resampling noise.
    Distances are clipped from below at twice the truncation error radius,
    keeping the integrand finite at unresolved pairs; the floor is reported.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    spec = family.spec
    q = family.sub.q
    super_depths = sorted(int(v) for v in super_depths)
    base = streams.derive_key(streams.root_key(seed), streams.TAG_PAIRS)
    sel = streams.child_key(np.broadcast_to(base, (2 * pairs, streams.KEY_LANES)),
                            np.arange(2 * pairs, dtype=np.uint64))
    _, snapshots = descend_measure(family, 2 * pairs, super_depths[-1],
                                   select_keys=sel, checkpoints=tuple(super_depths))
    width = attractor_box(spec).width
    out = []
    for sd in super_depths:
        pts = snapshots[sd]
        a, b = pts[0::2], pts[1::2]
        distv = np.sqrt(((a - b) ** 2).sum(axis=1))
        depth = sd * q
        radius = spec.alpha_hi**depth * width
        floor = 2.0 * float(np.sqrt((radius**2).sum()))
        est = float(np.mean(np.maximum(distv, floor) ** (-t)))
        out.append(EnergyPoint(depth=depth, t=t, estimate=est, floor=floor, pairs=pairs))
    return out


def energy_estimate(family: WeightFamily, t: float, pairs: int, depth: int, seed: int) -> EnergyPoint:
    """Single-depth truncated pair-energy estimate (depth in letters)."""
    q = family.sub.q
    if depth % q != 0:
        raise ValueError("depth must be divisible by the block period")
    return energy_trend(family, t, pairs, [depth // q], seed)[0]


def lebesgue_positivity_probe(cloud: PointCloud, box: BoundingBox, h: float) -> float:
    """Occupied-volume estimate: fraction of mesh-h cells hit, times box volume."""
    if h <= 0:
        raise ValueError("mesh must be positive")
    idx = np.floor((cloud.points - box.lo) / h).astype(np.int64)
    occupied = np.unique(idx, axis=0).shape[0]
    cells = int(np.prod(np.ceil(box.width / h)))
    volume = float(np.prod(box.width))
    return occupied / cells * volume
