"""Finite words over {1..N}, cylinders, and the subsystem word sets.

Words are immutable value types (tuple subclass), so prefixes, concatenation
and dict keys behave like plain tuples.  Infinite words never materialize:
anything that needs a tail works with a `Tail` (periodic continuation) and a
finite truncation depth, since projections are always evaluated to a finite
depth with a certified error bound.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import BudgetError, SchemaError

#: Default cap on eagerly enumerated word sets.
ENUMERATION_CAP = 1 << 22


class Word(tuple):
    """A finite word of 1-based letters; the address of a cylinder."""

    def __new__(cls, letters=()):
        return super().__new__(cls, (int(x) for x in letters))

    def __add__(self, other):
        return Word(tuple.__add__(self, tuple(other)))

    def prefix(self, n: int) -> "Word":
        return Word(self[:n])

    def __repr__(self):
        return f"Word({to_string(self)!r})" if len(self) else "Word()"


EMPTY = Word()


def to_string(word, N: int = 9) -> str:
    """Serialize: bare digits for N <= 9, comma-separated otherwise."""
    if N <= 9:
        return "".join(str(x) for x in word)
    return ",".join(str(x) for x in word)


def from_string(text: str, N: int = 9) -> Word:
    text = text.strip()
    if not text:
        return EMPTY
    if "," in text or N > 9:
        return Word(int(x) for x in text.split(","))
    return Word(int(ch) for ch in text)


def validate_word(word, N: int) -> Word:
    word = Word(word)
    for x in word:
        if not 1 <= x <= N:
            raise SchemaError(f"letter {x} outside alphabet 1..{N}")
    return word


@dataclass(frozen=True)
class Tail:
    """Periodic infinite continuation: `letters` repeated forever."""

    letters: Word

    def __post_init__(self):
        if len(self.letters) == 0:
            raise SchemaError("periodic tail needs at least one letter")
        object.__setattr__(self, "letters", Word(self.letters))

    @classmethod
    def constant(cls, letter: int) -> "Tail":
        return cls(Word([letter]))

    def take(self, n: int) -> Word:
        reps = -(-n // len(self.letters))
        return Word((self.letters * reps)[:n])


def extend(word, tail: Tail, depth: int) -> Word:
    """The depth-`depth` truncation of the infinite word `word` + `tail`."""
    word = Word(word)
    if depth < len(word):
        raise ValueError("depth must be >= len(word)")
    return word + tail.take(depth - len(word))


def longest_common_prefix(a, b) -> Word:
    """Maximal common prefix of two (finite) words."""
    out = []
    for x, y in zip(a, b):
        if x != y:
            break
        out.append(x)
    return Word(out)


def enumerate_level(N: int, n: int, *, cap: int = ENUMERATION_CAP, streaming: bool = False):
    """All N^n words of length n, lexicographic.

    Returns a list unless `streaming`, in which case a generator is returned
    and no size cap applies.
    """
    if n < 0:
        raise ValueError("depth must be >= 0")
    gen = (Word(p) for p in itertools.product(range(1, N + 1), repeat=n))
    if streaming:
        return gen
    if N**n > cap:
        raise BudgetError(f"{N}^{n} words exceed enumeration cap {cap}; use streaming")
    return list(gen)


@dataclass(frozen=True)
class SubsystemSpec:
    """Level-n block subsystem: free part of length n plus a fixed suffix.

    The suffix concatenates, per axis k, a smoothing block (letter
    `smooth_letters[k]` repeated `smoothing_lengths[k]` times) and an escape
    block (`escape_letters[k]` repeated `escape_lengths[k]` times).
    """

    n: int
    smooth_letters: tuple
    smoothing_lengths: tuple
    escape_letters: tuple
    escape_lengths: tuple
    suffix: Word = field(init=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise SchemaError("block length n must be >= 1")
        parts = []
        for lk, pk, ek, qk in zip(self.smooth_letters, self.smoothing_lengths,
                                  self.escape_letters, self.escape_lengths):
            parts.extend([lk] * pk)
            parts.extend([ek] * qk)
        object.__setattr__(self, "suffix", Word(parts))

    @property
    def p(self) -> int:
        return sum(self.smoothing_lengths)

    @property
    def p_prime(self) -> int:
        return sum(self.escape_lengths)

    @property
    def q(self) -> int:
        return self.n + self.p + self.p_prime

    def smoothing_blocks(self):
        return tuple(Word([l] * p) for l, p in zip(self.smooth_letters, self.smoothing_lengths))

    def escape_blocks(self):
        return tuple(Word([e] * p) for e, p in zip(self.escape_letters, self.escape_lengths))


def build_subsystem_words(sub: SubsystemSpec, N: int, *, cap: int = ENUMERATION_CAP,
                          streaming: bool = False):
    """The N^n super-letters: every free word of length n plus the suffix."""
    def gen():
        for free in enumerate_level(N, sub.n, streaming=True):
            yield free + sub.suffix
    if streaming:
        return gen()
    if N**sub.n > cap:
        raise BudgetError(f"{N}^{sub.n} words exceed enumeration cap {cap}; use streaming")
    return list(gen())


def matching_block_offsets(word, lcp_len: int, sub: SubsystemSpec):
    """All u in 1..n where the suffix pattern sits at positions lcp+u+1..lcp+u+p+p'."""
    span = sub.p + sub.p_prime
    hits = []
    for u in range(1, sub.n + 1):
        lo = lcp_len + u
        if lo + span <= len(word) and Word(word[lo:lo + span]) == sub.suffix:
            hits.append(u)
    return hits


def locate_block_offset(word_i, word_j, sub: SubsystemSpec) -> int:
    """The block offset u for a divergent pair of subsystem concatenations.

    Both words must be truncations of suffix-periodic words; divergence then
    falls in a free slot v of some block, and u = n - v + 1 marks where the
    next fixed suffix starts relative to the common prefix.
    """
    lcp = longest_common_prefix(word_i, word_j)
    if len(lcp) == min(len(word_i), len(word_j)):
        raise ValueError("words do not diverge")
    v = len(lcp) % sub.q + 1
    if v > sub.n:
        raise ValueError("divergence inside the fixed suffix; words are not "
                         "both subsystem concatenations")
    return sub.n - v + 1
