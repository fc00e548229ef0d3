"""Reduced words and conjugacy classes in a free group of rank n.

Letters are small integers: generator ``i`` is ``2*i`` and its inverse is
``2*i + 1``, so ``x ^ 1`` inverts a letter and integer order gives the
alphabet order a < A < b < B < ...  In the string form a lowercase letter is
a generator and the matching uppercase letter its inverse.
"""
from __future__ import annotations

import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .errors import EmptyWord

Word = tuple

_TOKEN = re.compile(r"([A-Za-z])(\^-1|⁻¹)?")


def inv(letter: int) -> int:
    return letter ^ 1


def parse_word(text: str) -> Word:
    """Parse ``"abA"``, ``"a b^-1"`` or ``"a b⁻¹"`` into a letter tuple."""
    text = text.replace(" ", "")
    letters = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ValueError(f"cannot parse word {text!r} at position {pos}")
        ch, inverse = m.group(1), m.group(2)
        letter = 2 * (ord(ch.lower()) - ord("a")) + (1 if ch.isupper() else 0)
        letters.append(inv(letter) if inverse else letter)
        pos = m.end()
    return tuple(letters)


def format_word(w: Iterable[int]) -> str:
    return "".join(
        chr(ord("a") + x // 2).upper() if x & 1 else chr(ord("a") + x // 2) for x in w
    )


def inverse_word(w: Sequence[int]) -> Word:
    return tuple(inv(x) for x in reversed(w))


def reduce(w: Iterable[int]) -> Word:
    """Free reduction (idempotent)."""
    out: list[int] = []
    for x in w:
        if out and out[-1] == inv(x):
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def is_reduced(w: Sequence[int]) -> bool:
    return all(w[i + 1] != inv(w[i]) for i in range(len(w) - 1))


def is_cyclically_reduced(w: Sequence[int]) -> bool:
    return is_reduced(w) and (len(w) < 2 or w[0] != inv(w[-1]))


def cyclic_split(w: Sequence[int]) -> tuple[Word, Word]:
    """Write a reduced word as ``c * core * c^-1`` with ``core`` cyclically reduced.

    Returns ``(c, core)``.
    """
    w = reduce(w)
    k = 0
    while 2 * k + 1 < len(w) and w[k] == inv(w[len(w) - 1 - k]):
        k += 1
    return w[:k], w[k : len(w) - k]


def rotations(w: Sequence[int]) -> list[Word]:
    w = tuple(w)
    return [w[i:] + w[:i] for i in range(len(w))]


def min_rotation(w: Sequence[int]) -> Word:
    return min(rotations(w))


def primitive_period(w: Sequence[int]) -> int:
    """Smallest p with w equal to its rotation by p (p divides len(w))."""
    w = tuple(w)
    n = len(w)
    for p in range(1, n + 1):
        if n % p == 0 and w[p:] + w[:p] == w:
            return p
    return n


@dataclass(frozen=True, order=True)
class ConjClass:
    """A conjugacy class, keyed by its cyclically reduced minimal rotation."""

    word: Word

    def __len__(self) -> int:
        return len(self.word)

    def __str__(self) -> str:
        return format_word(self.word)


def conj_class(w: Sequence[int]) -> ConjClass:
    _, core = cyclic_split(w)
    if not core:
        raise EmptyWord("the trivial element has no conjugacy class")
    return ConjClass(min_rotation(core))


def element_root(w: Sequence[int]) -> tuple[Word, int]:
    """Primitive root r and exponent k with ``w == r**k`` as group elements."""
    c, core = cyclic_split(w)
    if not core:
        raise EmptyWord("the trivial element has no root")
    p = primitive_period(core)
    root = reduce(c + core[:p] + inverse_word(c))
    return root, len(core) // p


def are_coprime(g: Sequence[int], h: Sequence[int]) -> bool:
    """True unless g and h are powers of a common element (i.e. they commute)."""
    rg, _ = element_root(g)
    rh, _ = element_root(h)
    return rg != rh and rg != inverse_word(rh)


def power(w: Sequence[int], n: int) -> Word:
    if n < 0:
        return reduce(inverse_word(w) * (-n))
    return reduce(tuple(w) * n)


# -- enumeration -----------------------------------------------------------


def _necklaces(rank: int, length: int, first: int | None = None) -> list[Word]:
    """Cyclically reduced necklaces of exact length, in lexicographic order.

    Backtracking over reduced words while maintaining the length ``p`` of the
    longest Lyndon prefix; a branch is cut as soon as its prefix stops being a
    prenecklace.  A prenecklace of length L is a necklace iff p divides L.
    """
    alphabet = range(2 * rank)
    out: list[Word] = []
    word = [0] * length

    def extend(t: int, p: int) -> None:
        if t == length:
            if length % p == 0 and word[0] != inv(word[-1]):
                out.append(tuple(word))
            return
        ref = word[t - p]
        prev = word[t - 1]
        for x in alphabet:
            if x < ref or x == inv(prev):
                continue
            word[t] = x
            extend(t + 1, p if x == ref else t + 1)

    starts = alphabet if first is None else [first]
    for x in starts:
        word[0] = x
        if length == 1:
            out.append((x,))
        else:
            extend(1, 1)
    return out


def _necklace_task(args):
    return _necklaces(*args)


def enumerate_classes(
    rank: int, max_len: int, workers: int = 1, min_len: int = 1
) -> Iterator[ConjClass]:
    """Every conjugacy class with cyclic length in [min_len, max_len], once each.

    Classes come out ordered by length, then lexicographically.  With
    ``workers > 1`` each (length, first letter) branch runs in its own process;
    the merge is done in branch order so the output is the same.
    """
    if rank < 2 or max_len < 1:
        raise ValueError("need rank >= 2 and max_len >= 1")
    if workers > 1:
        tasks = [(rank, k, x) for k in range(min_len, max_len + 1) for x in range(2 * rank)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk in pool.map(_necklace_task, tasks):
                for w in chunk:
                    yield ConjClass(w)
        return
    for k in range(min_len, max_len + 1):
        for w in _necklaces(rank, k):
            yield ConjClass(w)


def count_cyclically_reduced(rank: int, length: int) -> int:
    """Closed form for the number of cyclically reduced words of a given length."""
    m = 2 * rank - 1
    return m**length + 1 + (rank - 1) * (1 + (-1) ** length)


def random_reduced_word(rank: int, length: int, rng) -> Word:
    w = [int(rng.integers(2 * rank))]
    while len(w) < length:
        x = int(rng.integers(2 * rank))
        if x != inv(w[-1]):
            w.append(x)
    return tuple(w)
