"""Contraction-ratio laws and their vector couplings.

A `RatioLaw` is the marginal law of one signed ratio; supports must stay
inside [alpha_lo, alpha_hi] in modulus with a fixed sign, so every sampled
map is a contraction with modulus bounded away from 0 and 1 (condition R2
of the config contract).  A `RatioVectorLaw` is the joint law of one level's
N-vector of ratios on one axis, with three couplings:

* independent        - every child drawn from its own marginal,
* shared_pairs       - children mapped to the same slot reuse one draw,
* joint_sampler      - independent proposal + rejection against a constraint.

Sampling is a pure function of a stream key (see `streams`), vectorized over
arbitrary key arrays.  Moments E|alpha|^w come in closed form except for
tabulated densities, which use fixed 64-node Gauss-Legendre quadrature.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from . import streams
from .errors import RejectionError, SchemaError

#: Rejection sampling gives up after this many proposal rounds per lane.
DEFAULT_ATTEMPT_CAP = 10**6

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)

LAW_KINDS = ("constant", "uniform", "log_uniform", "atoms", "density_grid")


@dataclass(frozen=True)
class RatioLaw:
    """One marginal ratio law; `kind` selects which fields are meaningful."""

    kind: str
    value: float = 0.0
    a: float = 0.0
    b: float = 0.0
    values: tuple = ()
    probs: tuple = ()
    density: tuple = ()
    _cache: dict = field(default_factory=dict, compare=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in LAW_KINDS:
            raise SchemaError(f"unknown ratio law kind {self.kind!r}")
        if self.kind in ("uniform", "log_uniform", "density_grid"):
            if not self.a < self.b:
                raise SchemaError(f"{self.kind} law needs a < b")
            if self.a * self.b <= 0:
                raise SchemaError("law support must have a fixed sign (R2)")
        if self.kind == "constant" and self.value == 0:
            raise SchemaError("constant ratio must be nonzero")
        if self.kind == "atoms":
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
            object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
            if len(self.values) == 0 or len(self.values) != len(self.probs):
                raise SchemaError("atoms law needs matching values/probs")
            if abs(sum(self.probs) - 1.0) > 1e-12:
                raise SchemaError("atom probabilities must sum to 1 within 1e-12")
            if min(self.probs) < 0:
                raise SchemaError("atom probabilities must be nonnegative")
            signs = {math.copysign(1.0, v) for v in self.values}
            if len(signs) != 1 or 0.0 in self.values:
                raise SchemaError("law support must have a fixed sign (R2)")
        if self.kind == "density_grid":
            dens = np.asarray(self.density, dtype=float)
            if dens.ndim != 1 or dens.size < 2 or dens.min() < 0:
                raise SchemaError("density_grid needs a nonnegative 1-d table")
            object.__setattr__(self, "density", tuple(float(v) for v in dens))
            step = (self.b - self.a) / (dens.size - 1)
            mass = float((dens[1:] + dens[:-1]).sum() * step / 2)
            if abs(mass - 1.0) > 1e-9:
                raise SchemaError(f"density_grid integrates to {mass:.12g}, not 1 within 1e-9")

    @property
    def sign(self) -> float:
        if self.kind == "constant":
            return math.copysign(1.0, self.value)
        if self.kind == "atoms":
            return math.copysign(1.0, self.values[0])
        return math.copysign(1.0, self.a)

    def abs_bounds(self):
        """(lo, hi) bounds of |alpha|."""
        if self.kind == "constant":
            v = abs(self.value)
            return v, v
        if self.kind == "atoms":
            mags = [abs(v) for v in self.values]
            return min(mags), max(mags)
        lo, hi = sorted((abs(self.a), abs(self.b)))
        return lo, hi

    def _grid(self):
        x = np.linspace(self.a, self.b, len(self.density))
        return x, np.asarray(self.density, dtype=float)

    def _inverse_cdf_table(self):
        with self._lock:
            table = self._cache.get("ppf_table")
            if table is None:
                x, dens = self._grid()
                cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2) * (x[1] - x[0])])
                cdf /= cdf[-1]
                table = (cdf, x)
                self._cache["ppf_table"] = table
        return table

    def ppf(self, u: np.ndarray) -> np.ndarray:
        """Map uniform [0,1) variates to law samples (vectorized)."""
        u = np.asarray(u, dtype=float)
        if self.kind == "constant":
            return np.full_like(u, self.value)
        if self.kind == "uniform":
            return self.a + (self.b - self.a) * u
        if self.kind == "log_uniform":
            lo, hi = self.abs_bounds()
            return self.sign * np.exp(np.log(lo) + (np.log(hi) - np.log(lo)) * u)
        if self.kind == "atoms":
            cum = np.cumsum(self.probs)
            idx = np.minimum(np.searchsorted(cum, u, side="right"), len(self.values) - 1)
            return np.asarray(self.values, dtype=float)[idx]
        cdf, x = self._inverse_cdf_table()
        return np.interp(u, cdf, x)

    def moment(self, w: float) -> float:
        """E|alpha|^w, exact for w = 0, closed form where available."""
        w = float(w)
        if w < 0:
            raise ValueError("moment exponent must be >= 0")
        if w == 0.0:
            return 1.0
        key = round(w, 14)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        lo, hi = self.abs_bounds()
        if self.kind == "constant":
            out = lo**w
        elif self.kind == "uniform":
            out = (hi ** (w + 1) - lo ** (w + 1)) / ((w + 1) * (hi - lo))
        elif self.kind == "log_uniform":
            out = (hi**w - lo**w) / (w * (math.log(hi) - math.log(lo)))
        elif self.kind == "atoms":
            out = float(sum(p * abs(v) ** w for v, p in zip(self.values, self.probs)))
        else:
            x, dens = self._grid()
            nodes = 0.5 * (self.b - self.a) * _GL_NODES + 0.5 * (self.a + self.b)
            vals = np.abs(nodes) ** w * np.interp(nodes, x, dens)
            out = float(0.5 * (self.b - self.a) * np.dot(_GL_WEIGHTS, vals))
        with self._lock:
            self._cache[key] = out
        return out

    def has_density(self) -> bool:
        return self.kind in ("uniform", "log_uniform", "density_grid")

    def log_abs_density(self, u: np.ndarray) -> np.ndarray:
        """Density of log|alpha| at points u (density-backed laws only)."""
        u = np.asarray(u, dtype=float)
        x = np.exp(u)
        lo, hi = self.abs_bounds()
        inside = (x >= lo) & (x <= hi)
        if self.kind == "uniform":
            dens = x / (hi - lo)
        elif self.kind == "log_uniform":
            dens = np.full_like(x, 1.0 / (math.log(hi) - math.log(lo)))
        elif self.kind == "density_grid":
            gx, gd = self._grid()
            dens = np.interp(self.sign * x, gx, gd) * x
        else:
            raise SchemaError(f"{self.kind} law has no density")
        return np.where(inside, dens, 0.0)


def constant(value: float) -> RatioLaw:
    return RatioLaw("constant", value=value)


def uniform(a: float, b: float) -> RatioLaw:
    return RatioLaw("uniform", a=a, b=b)


def log_uniform(a: float, b: float) -> RatioLaw:
    return RatioLaw("log_uniform", a=a, b=b)


def atoms(values, probs) -> RatioLaw:
    return RatioLaw("atoms", values=tuple(values), probs=tuple(probs))


def density_grid(a: float, b: float, density) -> RatioLaw:
    return RatioLaw("density_grid", a=a, b=b, density=tuple(density))


@dataclass(frozen=True)
class MaxSumConstraint:
    """Accept a vector iff sum over groups of max_{i in group} x_i <= bound."""

    groups: tuple
    bound: float

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(tuple(int(i) for i in g) for g in self.groups))

    def accepts(self, vectors: np.ndarray) -> np.ndarray:
        total = np.zeros(vectors.shape[:-1])
        for group in self.groups:
            idx = [i - 1 for i in group]
            total = total + vectors[..., idx].max(axis=-1)
        return total <= self.bound


@dataclass(frozen=True)
class RatioVectorLaw:
    """Joint law of one level's N ratios on one axis."""

    marginals: tuple
    coupling: str = "independent"
    slots: tuple = ()
    constraint: MaxSumConstraint | None = None

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))
        if self.coupling not in ("independent", "shared_pairs", "joint_sampler"):
            raise SchemaError(f"unknown coupling {self.coupling!r}")
        if self.coupling == "shared_pairs":
            slots = tuple(int(s) for s in self.slots)
            if len(slots) != len(self.marginals):
                raise SchemaError("shared_pairs needs one slot per child")
            if sorted(set(slots)) != list(range(1, max(slots) + 1)):
                raise SchemaError("slots must cover 1..S")
            for child, s in enumerate(slots):
                first = slots.index(s)
                if self.marginals[child] != self.marginals[first]:
                    raise SchemaError("children sharing a slot must share a marginal law")
            object.__setattr__(self, "slots", slots)
        if self.coupling == "joint_sampler" and self.constraint is None:
            raise SchemaError("joint_sampler coupling needs a constraint")

    @property
    def N(self) -> int:
        return len(self.marginals)

    def abs_bounds(self):
        los, his = zip(*(m.abs_bounds() for m in self.marginals))
        return min(los), max(his)

    def slot_law(self, slot: int) -> RatioLaw:
        return self.marginals[self.slots.index(slot)]


def _propose(vlaw: RatioVectorLaw, keys: np.ndarray, axis: int, attempt) -> np.ndarray:
    """One proposal round; draw indices encode (attempt, component/slot)."""
    N = vlaw.N
    shape = keys.shape[:-1]
    out = np.empty(shape + (N,))
    if vlaw.coupling == "shared_pairs":
        S = max(vlaw.slots)
        slot_vals = [vlaw.slot_law(s + 1).ppf(streams.uniforms(keys, axis, attempt * S + s))
                     for s in range(S)]
        for c in range(N):
            out[..., c] = slot_vals[vlaw.slots[c] - 1]
    else:
        for c in range(N):
            out[..., c] = vlaw.marginals[c].ppf(streams.uniforms(keys, axis, attempt * N + c))
    return out


def sample_vectors(vlaw: RatioVectorLaw, keys: np.ndarray, axis: int, *,
                   max_attempts: int = DEFAULT_ATTEMPT_CAP) -> np.ndarray:
    """Ratio vectors for each key in `keys`, shape keys.shape[:-1] + (N,)."""
    out = _propose(vlaw, keys, axis, 0)
    if vlaw.constraint is None:
        return out
    alive = ~vlaw.constraint.accepts(out)
    attempt = 1
    flat = out.reshape(-1, vlaw.N)
    flat_keys = keys.reshape(-1, streams.KEY_LANES)
    alive = alive.reshape(-1)
    while alive.any():
        if attempt >= max_attempts:
            raise RejectionError(
                f"rejection cap {max_attempts} reached; constraint region looks infeasible")
        redo = _propose(vlaw, flat_keys[alive], axis, attempt)
        flat[alive] = redo
        alive[alive.nonzero()[0]] = ~vlaw.constraint.accepts(redo)
        attempt += 1
    return flat.reshape(out.shape)


def component_ratios(vlaw: RatioVectorLaw, keys: np.ndarray, axis: int, letters,
                     *, max_attempts: int = DEFAULT_ATTEMPT_CAP) -> np.ndarray:
    """Ratio of child `letters` (1-based, broadcast with keys) on one axis.

    Equals sample_vectors(...)[..., letter-1] but skips unused components
    when the coupling allows it.
    """
    letters = np.broadcast_to(np.asarray(letters), keys.shape[:-1])
    if vlaw.constraint is not None:
        full = sample_vectors(vlaw, keys, axis, max_attempts=max_attempts)
        return np.take_along_axis(full, (letters - 1)[..., None], axis=-1)[..., 0]
    out = np.empty(letters.shape)
    if vlaw.coupling == "shared_pairs":
        lanes = np.asarray(vlaw.slots)[letters - 1] - 1
        laws = [vlaw.slot_law(s + 1) for s in range(max(vlaw.slots))]
    else:
        lanes = letters - 1
        laws = list(vlaw.marginals)
    for lane in np.unique(lanes):
        mask = lanes == lane
        u = streams.uniforms(keys[mask], axis, int(lane))
        out[mask] = laws[int(lane)].ppf(u)
    return out


def sample_vector(vlaw: RatioVectorLaw, key: np.ndarray, axis: int = 0, *,
                  max_attempts: int = DEFAULT_ATTEMPT_CAP) -> np.ndarray:
    """One N-vector of signed ratios for a single stream key."""
    keys = np.asarray(key, dtype=np.uint64).reshape(1, streams.KEY_LANES)
    return sample_vectors(vlaw, keys, axis, max_attempts=max_attempts)[0]


def moment(law: RatioLaw, w: float) -> float:
    """E|alpha|^w; module-level alias of RatioLaw.moment."""
    return law.moment(w)


@dataclass(frozen=True)
class SmoothnessReport:
    max_jump: float
    grid: np.ndarray
    density: np.ndarray


def convolution_smoothness_proxy(law: RatioLaw, n: int, grid: int = 2048) -> SmoothnessReport:
    """Diagnostic for the smoothing requirement on a declared axis law (R4).

    Numerically convolves the law of log|alpha| with itself n times on a
    uniform grid and reports the largest discrete jump of the resulting
    density (boundary jumps included).  Atom laws are binned, so one fold
    reports a jump of the order mass/step, flagging them as non-smooth.
    Purely diagnostic; nothing downstream gates on it.
    """
    if n < 1:
        raise ValueError("fold count must be >= 1")
    lo, hi = law.abs_bounds()
    llo, lhi = math.log(lo), math.log(hi)
    if law.kind in ("constant", "atoms"):
        width = max(lhi - llo, 1e-3)
        llo, lhi = llo - 0.05 * width, lhi + 0.05 * width
    step = (lhi - llo) / (grid - 1)
    u = np.linspace(llo, lhi, grid)
    if law.has_density():
        mass = law.log_abs_density(u) * step
    else:
        mass = np.zeros(grid)
        if law.kind == "constant":
            pairs = [(abs(law.value), 1.0)]
        else:
            pairs = [(abs(v), p) for v, p in zip(law.values, law.probs)]
        for v, p in pairs:
            idx = int(round((math.log(v) - llo) / step))
            mass[min(max(idx, 0), grid - 1)] += p
    folded = mass
    for _ in range(n - 1):
        folded = np.convolve(folded, mass)
    folded /= folded.sum()
    density = folded / step
    jumps = np.abs(np.diff(np.concatenate([[0.0], density, [0.0]])))
    x = llo * n + step * np.arange(folded.size)
    return SmoothnessReport(max_jump=float(jumps.max()), grid=x, density=density)


def law_to_dict(law: RatioLaw) -> dict:
    if law.kind == "constant":
        return {"kind": "constant", "value": law.value}
    if law.kind in ("uniform", "log_uniform"):
        return {"kind": law.kind, "a": law.a, "b": law.b}
    if law.kind == "atoms":
        return {"kind": "atoms", "values": list(law.values), "probs": list(law.probs)}
    return {"kind": "density_grid", "a": law.a, "b": law.b, "density": list(law.density)}


def law_from_dict(doc: dict) -> RatioLaw:
    try:
        kind = doc["kind"]
    except (TypeError, KeyError):
        raise SchemaError(f"ratio law must be a tagged object, got {doc!r}") from None
    try:
        if kind == "constant":
            return constant(float(doc["value"]))
        if kind in ("uniform", "log_uniform"):
            return RatioLaw(kind, a=float(doc["a"]), b=float(doc["b"]))
        if kind == "atoms":
            return atoms(doc["values"], doc["probs"])
        if kind == "density_grid":
            return density_grid(float(doc["a"]), float(doc["b"]), doc["density"])
    except KeyError as exc:
        raise SchemaError(f"ratio law {kind!r} is missing field {exc}") from None
    raise SchemaError(f"unknown ratio law kind {kind!r}")


def vector_law_to_dict(vlaw: RatioVectorLaw) -> dict:
    doc = {"coupling": vlaw.coupling,
           "marginals": [law_to_dict(m) for m in vlaw.marginals]}
    if vlaw.coupling == "shared_pairs":
        doc["slots"] = list(vlaw.slots)
    if vlaw.constraint is not None:
        doc["constraint"] = {"type": "max_sum", "groups": [list(g) for g in vlaw.constraint.groups],
                             "bound": vlaw.constraint.bound}
    return doc


def vector_law_from_dict(doc: dict) -> RatioVectorLaw:
    try:
        marginals = tuple(law_from_dict(m) for m in doc["marginals"])
    except (TypeError, KeyError):
        raise SchemaError(f"vector law must carry a marginals list: {doc!r}") from None
    coupling = doc.get("coupling", "independent")
    constraint = None
    if "constraint" in doc and doc["constraint"] is not None:
        cdoc = doc["constraint"]
        if cdoc.get("type") != "max_sum":
            raise SchemaError(f"unknown constraint type {cdoc.get('type')!r}")
        constraint = MaxSumConstraint(tuple(tuple(g) for g in cdoc["groups"]),
                                      float(cdoc["bound"]))
    return RatioVectorLaw(marginals, coupling=coupling,
                          slots=tuple(doc.get("slots", ())), constraint=constraint)
