"""Reduced words over a free product of two free factors.

A word is stored as a tuple of maximal runs ``(generator, exponent)`` with
arbitrary-precision integer exponents, so ``a^(20!)`` is a single run.  The
free basis is split into two blocks K and L by a :class:`FactorPartition`;
the split is what the syllable decomposition and the two-factor
constructions are built on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import WordSyntaxError

K = "K"
L = "L"


@dataclass(frozen=True, order=True)
class Generator:
    """One free generator, named by its factor ("K" or "L") and index.

    The (factor, index) order is total and is used everywhere a
    deterministic generator sweep is needed.
    """

    factor: str
    index: int

    def __post_init__(self):
        if self.factor not in (K, L):
            raise ValueError(f"factor must be 'K' or 'L', got {self.factor!r}")
        if not isinstance(self.index, int) or self.index < 0:
            raise ValueError(f"generator index must be a nonnegative int, got {self.index!r}")

    def __repr__(self):
        return f"{self.factor}{self.index}"


@dataclass(frozen=True)
class FactorPartition:
    """Declares how many generators belong to the K block and the L block."""

    k_size: int
    l_size: int

    def __post_init__(self):
        if self.k_size < 1 or self.l_size < 1:
            raise ValueError("each factor needs at least one generator")

    @property
    def rank(self) -> int:
        return self.k_size + self.l_size

    def generators(self) -> list[Generator]:
        """All generators, K block ascending then L block ascending."""
        return [Generator(K, i) for i in range(self.k_size)] + [
            Generator(L, i) for i in range(self.l_size)
        ]

    def k_generators(self) -> list[Generator]:
        return [Generator(K, i) for i in range(self.k_size)]

    def l_generators(self) -> list[Generator]:
        return [Generator(L, i) for i in range(self.l_size)]

    def check(self, gen: Generator) -> Generator:
        size = self.k_size if gen.factor == K else self.l_size
        if gen.index >= size:
            raise ValueError(f"generator {gen!r} out of range for partition {self}")
        return gen

    def flat_index(self, gen: Generator) -> int:
        """Position of ``gen`` in the K-then-L generator list."""
        self.check(gen)
        return gen.index if gen.factor == K else self.k_size + gen.index

    def letter(self, gen: Generator) -> str:
        """Single-letter name: 'a', 'b', ... assigned K block first, then L."""
        if self.rank > 26:
            raise ValueError("letter syntax supports at most 26 generators")
        return chr(ord("a") + self.flat_index(gen))

    def generator_for_letter(self, ch: str) -> Generator:
        i = ord(ch) - ord("a")
        if not ("a" <= ch <= "z") or i >= self.rank:
            raise WordSyntaxError(f"unknown generator letter {ch!r} for partition {self}")
        if i < self.k_size:
            return Generator(K, i)
        return Generator(L, i - self.k_size)


@dataclass(frozen=True)
class Word:
    """A reduced word: runs on distinct adjacent generators, exponents nonzero.

    Instances are built through :func:`reduce` (or the operations below),
    which establish the run-form invariant; the raw constructor does not
    re-check it.
    """

    runs: tuple

    def is_identity(self) -> bool:
        return not self.runs

    def __mul__(self, other: "Word") -> "Word":
        return multiply(self, other)

    def __invert__(self) -> "Word":
        return invert(self)

    def __pow__(self, e: int) -> "Word":
        return power(self, e)

    def __repr__(self):
        if not self.runs:
            return "Word(1)"
        body = " ".join(f"{g!r}^{e}" if e != 1 else f"{g!r}" for g, e in self.runs)
        return f"Word({body})"


IDENTITY = Word(())


def identity() -> Word:
    return IDENTITY


def reduce(pairs) -> Word:
    """Reduce a sequence of (generator, exponent) pairs to run normal form.

    Adjacent runs on the same generator merge; runs whose exponents cancel
    to zero disappear, which may cascade further merges.
    """
    stack = []
    for g, e in pairs:
        if e == 0:
            continue
        if stack and stack[-1][0] == g:
            merged = stack[-1][1] + e
            stack.pop()
            if merged != 0:
                stack.append((g, merged))
        else:
            stack.append((g, e))
    return Word(tuple(stack))


def multiply(u: Word, v: Word) -> Word:
    return reduce(u.runs + v.runs)


def invert(w: Word) -> Word:
    return Word(tuple((g, -e) for g, e in reversed(w.runs)))


def power(w: Word, e: int) -> Word:
    """w**e.  Single-run words scale their exponent in constant size."""
    if e == 0 or w.is_identity():
        return IDENTITY
    if len(w.runs) == 1:
        g, x = w.runs[0]
        return Word(((g, x * e),))
    if e < 0:
        return power(invert(w), -e)
    result = IDENTITY
    base = w
    while e:
        if e & 1:
            result = multiply(result, base)
        e >>= 1
        if e:
            base = multiply(base, base)
    return result


def exponent_sum(w: Word, gen: Generator) -> int:
    """Signed sum of the exponents of ``gen`` across the word."""
    return sum(e for g, e in w.runs if g == gen)


def word_length(w: Word) -> int:
    """Letter length: the sum of absolute exponents."""
    return sum(abs(e) for _, e in w.runs)


def syllables(w: Word, partition: FactorPartition | None = None) -> list:
    """Split into maximal alternating segments over the K and L factors.

    Returns ``[(factor, word), ...]``; concatenating the segments in order
    gives back ``w`` with no cancellation at the seams.
    """
    if partition is not None:
        for g, _ in w.runs:
            partition.check(g)
    out = []
    for run in w.runs:
        fac = run[0].factor
        if out and out[-1][0] == fac:
            out[-1] = (fac, out[-1][1] + (run,))
        else:
            out.append((fac, (run,)))
    return [(fac, Word(runs)) for fac, runs in out]


_TOKEN = re.compile(r"([a-z])(?:\^(-?\d+))?")


def parse_word(text: str, partition: FactorPartition) -> Word:
    """Parse the `a^120 b^16` syntax (juxtaposition = concatenation).

    Letters are assigned to the K block then the L block in order, `^` takes
    a decimal exponent of any size, and "1" (or an empty string) is the
    identity.  The result is reduced.
    """
    s = text.strip()
    if s in ("", "1"):
        return IDENTITY
    pairs = []
    pos = 0
    n = len(s)
    while pos < n:
        if s[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(s, pos)
        if not m:
            raise WordSyntaxError(f"cannot parse word at position {pos}: {s[pos:pos + 12]!r}")
        gen = partition.generator_for_letter(m.group(1))
        exp = 1 if m.group(2) is None else int(m.group(2))
        pairs.append((gen, exp))
        pos = m.end()
    return reduce(pairs)


def format_word(w: Word, partition: FactorPartition) -> str:
    """Emit the parse syntax losslessly; identity renders as "1"."""
    if w.is_identity():
        return "1"
    parts = []
    for g, e in w.runs:
        letter = partition.letter(g)
        parts.append(letter if e == 1 else f"{letter}^{e}")
    return " ".join(parts)
