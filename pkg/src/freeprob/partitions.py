"""Set partitions, the non-crossing lattice NC(n) and pairing permutations.

A :class:`Partition` of ``[n] = {1..n}`` is stored canonically: blocks are
ascending tuples, ordered by their minimum.  Internally most algorithms work
on the restricted-growth label vector (``labels[i-1]`` is the index of the
block containing ``i``), which is what the enumerators produce.
"""

from __future__ import annotations

import json
from functools import lru_cache
from math import comb
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ValidationError

MAX_SET_PARTITION_N = 12
MAX_NC_N = 14
MAX_PAIRING_M = 16
MAX_MOBIUS_N = 10


class Partition:
    """A set partition of ``{1..n}`` in canonical block form."""

    __slots__ = ("n", "blocks", "_labels")

    def __init__(self, blocks: Iterable[Iterable[int]], n: int | None = None):
        bl = [tuple(sorted(int(x) for x in b)) for b in blocks]
        if any(len(b) == 0 for b in bl):
            raise ValidationError("partition blocks must be nonempty")
        elements = sorted(x for b in bl for x in b)
        if n is None:
            n = len(elements)
        if n < 1:
            raise ValidationError("partition ground set must be nonempty")
        if elements != list(range(1, n + 1)):
            raise ValidationError(f"blocks {bl} do not partition {{1..{n}}}")
        bl.sort()
        self.n = n
        self.blocks = tuple(bl)
        self._labels = None

    @classmethod
    def from_labels(cls, labels: Sequence) -> "Partition":
        """Group positions by equal label (labels may be arbitrary hashables)."""
        if len(labels) == 0:
            raise ValidationError("empty label vector")
        index: dict = {}
        rgs = []
        groups: list[list[int]] = []
        for pos, lab in enumerate(labels, start=1):
            k = index.get(lab)
            if k is None:
                k = index[lab] = len(groups)
                groups.append([])
            groups[k].append(pos)
            rgs.append(k)
        p = cls._raw(len(labels), tuple(tuple(g) for g in groups))
        p._labels = tuple(rgs)
        return p

    @classmethod
    def _raw(cls, n: int, blocks: tuple) -> "Partition":
        # trusted constructor: blocks already canonical
        p = object.__new__(cls)
        p.n = n
        p.blocks = blocks
        p._labels = None
        return p

    @property
    def labels(self) -> tuple[int, ...]:
        if self._labels is None:
            lab = [0] * self.n
            for k, b in enumerate(self.blocks):
                for x in b:
                    lab[x - 1] = k
            self._labels = tuple(lab)
        return self._labels

    def block_sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def __eq__(self, other) -> bool:
        return isinstance(other, Partition) and self.n == other.n and self.blocks == other.blocks

    def __hash__(self) -> int:
        return hash((self.n, self.blocks))

    def __lt__(self, other: "Partition") -> bool:
        return (self.n, self.blocks) < (other.n, other.blocks)

    def __repr__(self) -> str:
        inner = ", ".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks)
        return f"Partition({{{inner}}})"

    def to_list(self) -> list[list[int]]:
        return [list(b) for b in self.blocks]

    def to_json(self) -> str:
        return json.dumps(self.to_list())

    @classmethod
    def from_json(cls, text: str) -> "Partition":
        return cls(json.loads(text))


def zero(n: int) -> Partition:
    """0_n, the partition into singletons."""
    return Partition._raw(n, tuple((i,) for i in range(1, n + 1)))


def one(n: int) -> Partition:
    """1_n, the partition with a single block."""
    return Partition._raw(n, (tuple(range(1, n + 1)),))


def interval_partition(sizes: Sequence[int]) -> Partition:
    blocks, start = [], 1
    for s in sizes:
        if s < 1:
            raise ValidationError("interval block sizes must be >= 1")
        blocks.append(tuple(range(start, start + s)))
        start += s
    return Partition._raw(start - 1, tuple(blocks))


def kernel(word: Sequence) -> Partition:
    """ker(i): positions p, q are equivalent iff word[p] == word[q]."""
    if len(word) == 0:
        raise ValidationError("kernel of an empty word")
    return Partition.from_labels(word)


# -- enumeration -----------------------------------------------------------

def _check_range(name: str, n: int, hi: int, lo: int = 1) -> None:
    if not isinstance(n, (int, np.integer)) or n < lo or n > hi:
        raise ValidationError(f"{name} must be an integer in [{lo}, {hi}], got {n!r}")


def _rgs_all(n: int) -> Iterator[tuple[int, ...]]:
    lab = [0] * n

    def rec(i, nb):
        if i == n:
            yield tuple(lab)
            return
        for b in range(nb + 1):
            lab[i] = b
            yield from rec(i + 1, nb + (b == nb))

    yield from rec(1, 1)


def _rgs_nc(n: int) -> Iterator[tuple[int, ...]]:
    # Stack of blocks that may still receive elements; joining block b closes
    # every block opened after b's previous element (they would cross).
    lab = [0] * n

    def rec(i, nb, stack):
        if i == n:
            yield tuple(lab)
            return
        for pos, b in enumerate(stack):
            lab[i] = b
            yield from rec(i + 1, nb, stack[: pos + 1])
        lab[i] = nb
        yield from rec(i + 1, nb + 1, stack + (nb,))

    yield from rec(1, 1, (0,))


def _from_rgs(lab: tuple[int, ...]) -> Partition:
    groups: list[list[int]] = []
    for pos, b in enumerate(lab, start=1):
        if b == len(groups):
            groups.append([pos])
        else:
            groups[b].append(pos)
    p = Partition._raw(len(lab), tuple(tuple(g) for g in groups))
    p._labels = lab
    return p


def enumerate_set_partitions(n: int, max_n: int = MAX_SET_PARTITION_N) -> list[Partition]:
    """All partitions of [n], ordered lexicographically by label vector."""
    _check_range("n", n, max_n)
    return [_from_rgs(lab) for lab in _rgs_all(n)]


@lru_cache(maxsize=16)
def _nc_cached(n: int) -> tuple[Partition, ...]:
    return tuple(_from_rgs(lab) for lab in _rgs_nc(n))


def enumerate_nc(n: int, max_n: int = MAX_NC_N) -> list[Partition]:
    """All non-crossing partitions of [n] (Catalan(n) of them)."""
    _check_range("n", n, max_n)
    if n <= 11:
        return list(_nc_cached(n))
    return [_from_rgs(lab) for lab in _rgs_nc(n)]


def iter_nc_labels(n: int) -> Iterator[tuple[int, ...]]:
    """Stream NC(n) as label vectors without building Partition objects."""
    _check_range("n", n, MAX_NC_N)
    return _rgs_nc(n)


def _pairings(elems: tuple[int, ...], noncrossing: bool) -> Iterator[list[tuple[int, int]]]:
    if not elems:
        yield []
        return
    first = elems[0]
    for k in range(1, len(elems), 2 if noncrossing else 1):
        # for NC the partner must enclose an even number of points
        rest_in = elems[1:k]
        rest_out = elems[k + 1:]
        pair = (first, elems[k])
        if noncrossing:
            for inner in _pairings(rest_in, True):
                for outer in _pairings(rest_out, True):
                    yield [pair] + inner + outer
        else:
            for tail in _pairings(rest_in + rest_out, False):
                yield [pair] + tail


def enumerate_pairings(m: int, noncrossing_only: bool = False) -> list[Partition]:
    """Pair partitions P_2(m) or NC_2(m)."""
    if not isinstance(m, (int, np.integer)) or m < 2 or m > MAX_PAIRING_M or m % 2:
        raise ValidationError(f"m must be an even integer in [2, {MAX_PAIRING_M}], got {m!r}")
    out = []
    for pairs in _pairings(tuple(range(1, m + 1)), noncrossing_only):
        out.append(Partition._raw(m, tuple(sorted(pairs))))
    return out


# -- predicates and lattice operations -------------------------------------

def is_noncrossing(p: Partition) -> bool:
    """False iff some a<b<c<d has a~c, b~d and a!~b."""
    lab = p.labels
    # scan left to right; a block may only reappear if it is the innermost
    # block that is still open (i.e. has later elements).
    last = {}
    for i, b in enumerate(lab):
        last[b] = i
    stack: list[int] = []
    for i, b in enumerate(lab):
        if stack and stack[-1] == b:
            pass
        elif b in stack:
            return False
        else:
            stack.append(b)
        if last[b] == i:
            stack.pop()
    return True


def _same_n(p: Partition, s: Partition) -> None:
    if p.n != s.n:
        raise ValidationError(f"partitions of different ground sets ({p.n} vs {s.n})")


def leq(p: Partition, s: Partition) -> bool:
    """Refinement order: every block of p lies inside a block of s."""
    _same_n(p, s)
    ls = s.labels
    return all(len({ls[x - 1] for x in b}) == 1 for b in p.blocks)


def meet(p: Partition, s: Partition) -> Partition:
    _same_n(p, s)
    return Partition.from_labels(list(zip(p.labels, s.labels)))


def join(p: Partition, s: Partition) -> Partition:
    """Join in the full partition lattice P(n)."""
    _same_n(p, s)
    parent = list(range(p.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for part in (p, s):
        for b in part.blocks:
            r = find(b[0] - 1)
            for x in b[1:]:
                rx = find(x - 1)
                if rx != r:
                    parent[rx] = r
    return Partition.from_labels([find(i) for i in range(p.n)])


def _crossing_pair(p: Partition):
    blocks = p.blocks
    for i in range(len(blocks)):
        for j in range(i + 1, len(blocks)):
            if _blocks_cross(blocks[i], blocks[j]):
                return i, j
    return None


def _blocks_cross(a: tuple, b: tuple) -> bool:
    merged = sorted([(x, 0) for x in a] + [(x, 1) for x in b])
    seq = [t for _, t in merged]
    # collapse runs; crossing iff the run pattern has length >= 4
    runs = [seq[0]]
    for t in seq[1:]:
        if t != runs[-1]:
            runs.append(t)
    return len(runs) >= 4


def nc_closure(p: Partition) -> Partition:
    """Smallest non-crossing partition above p (merge crossing blocks)."""
    while True:
        c = _crossing_pair(p)
        if c is None:
            return p
        i, j = c
        blocks = [b for k, b in enumerate(p.blocks) if k not in (i, j)]
        blocks.append(p.blocks[i] + p.blocks[j])
        p = Partition(blocks, p.n)


def join_nc(p: Partition, s: Partition) -> Partition:
    """Join in NC(n): join in P(n), then merge crossing blocks to a fixed point."""
    _same_n(p, s)
    for q in (p, s):
        if not is_noncrossing(q):
            raise ValidationError(f"join_nc needs non-crossing arguments, got {q}")
    return nc_closure(join(p, s))


# -- Moebius function ------------------------------------------------------

def _reps(p: Partition) -> np.ndarray:
    r = np.empty(p.n, dtype=np.intp)
    for b in p.blocks:
        r[[x - 1 for x in b]] = b[0] - 1
    return r


def _label_matrix(parts: Sequence[Partition]) -> np.ndarray:
    return np.array([q.labels for q in parts], dtype=np.int16)


def _below_mask(p: Partition, L: np.ndarray) -> np.ndarray:
    """Boolean mask over rows of L: which partitions are >= p."""
    r = _reps(p)
    return (L[:, r] == L).all(axis=1)


def _interval(p: Partition, s: Partition) -> list[Partition]:
    items = [t for t in _nc_cached(p.n) if leq(p, t) and leq(t, s)]
    items.sort(key=lambda t: -len(t))      # linear extension: finer first
    return items


@lru_cache(maxsize=4096)
def _mobius_cached(p: Partition, s: Partition) -> int:
    items = _interval(p, s)
    L = _label_matrix(items)
    acc = np.zeros(len(items), dtype=np.int64)
    mu = np.zeros(len(items), dtype=np.int64)
    for k, t in enumerate(items):
        mu[k] = 1 if k == 0 else -acc[k]
        if mu[k]:
            up = _below_mask(t, L)
            up[k] = False
            acc[up] += mu[k]
    val = int(mu[-1])
    if abs(val) > 4 ** p.n:
        raise ArithmeticError(f"Moebius value {val} exceeds the 4^n bound")
    return val


def mobius(p: Partition, s: Partition) -> int:
    """Moebius function of NC(n) on the interval [p, s].

    Solved by the recursion mu(p,p)=1, mu(p,t) = -sum_{p<=r<t} mu(p,r)
    over the elements of the interval, memoized per pair.
    """
    _same_n(p, s)
    _check_range("n", p.n, MAX_MOBIUS_N)
    if not (is_noncrossing(p) and is_noncrossing(s)):
        raise ValidationError("mobius is defined here on NC(n) only")
    if not leq(p, s):
        raise ValidationError(f"{p} is not below {s}")
    return _mobius_cached(p, s)


def zeta_matrix(n: int) -> tuple[list[Partition], np.ndarray]:
    """NC(n) in a linear extension and its 0/1 zeta matrix Z[i,j] = [p_i <= p_j]."""
    _check_range("n", n, 9)
    items = sorted(_nc_cached(n), key=lambda t: -len(t))
    L = _label_matrix(items)
    Z = np.zeros((len(items), len(items)), dtype=np.int64)
    for i, t in enumerate(items):
        Z[i] = _below_mask(t, L)
    return items, Z


def mobius_matrix(n: int) -> tuple[list[Partition], np.ndarray]:
    """All Moebius values of NC(n), M[i,j] = mu(p_i, p_j) (zero off the order)."""
    items, Z = zeta_matrix(n)
    size = len(items)
    M = np.zeros_like(Z)
    for j in range(size):
        below = Z[:, j].astype(bool)
        below[j] = False
        M[:, j] = -M[:, below].sum(axis=1)
        M[j, j] = 1
    return items, M


# -- Kreweras complement and hat embedding ---------------------------------

def kreweras(p: Partition) -> Partition:
    """Kreweras complement K(p) in NC(n).

    Barred points i and j (i<j) share a block of K(p) exactly when
    {i+1..j} is a union of blocks of p, i.e. the chord between them crosses
    nothing.
    """
    if not is_noncrossing(p):
        raise ValidationError(f"Kreweras complement needs a non-crossing partition, got {p}")
    n = p.n
    lab = p.labels
    first = {}
    last = {}
    for i, b in enumerate(lab):
        first.setdefault(b, i)
        last[b] = i
    out = list(range(n))
    for i in range(n):
        if out[i] != i:
            continue
        # extend {i+1..j} (0-based positions i+1..j) greedily
        lo_open = 0
        for j in range(i + 1, n):
            b = lab[j]
            if first[b] <= i:
                break
            # positions i+1..j form a union of blocks when every block seen
            # so far has already ended
            lo_open = max(lo_open, last[b])
            if lo_open <= j and out[j] == j:
                out[j] = i
    return Partition.from_labels(out)


def hat_embed(p: Partition, group_sizes: Sequence[int]) -> Partition:
    """Blow up p in NC(m) to NC(n): element j of group g gets p's label of g."""
    if len(group_sizes) != p.n:
        raise ValidationError(f"need {p.n} group sizes, got {len(group_sizes)}")
    if any(g < 1 for g in group_sizes):
        raise ValidationError("group sizes must be >= 1")
    lab = p.labels
    return Partition.from_labels([lab[g] for g, size in enumerate(group_sizes) for _ in range(size)])


# -- permutations ----------------------------------------------------------

def pairing_permutation(p: Partition) -> list[int]:
    """The fixed-point-free involution of a pairing, 1-based (index 0 unused)."""
    if any(len(b) != 2 for b in p.blocks):
        raise ValidationError(f"{p} is not a pair partition")
    perm = [0] * (p.n + 1)
    for r, s in p.blocks:
        perm[r], perm[s] = s, r
    return perm


def count_orbits(perm: Sequence[int]) -> int:
    """Number of cycles of a 1-based permutation given as perm[1..m]."""
    m = len(perm) - 1
    seen = [False] * (m + 1)
    cycles = 0
    for k in range(1, m + 1):
        if not seen[k]:
            cycles += 1
            while not seen[k]:
                seen[k] = True
                k = perm[k]
    return cycles


def gamma_pi_orbits(p: Partition) -> int:
    """#(gamma pi) for the long cycle gamma = (1 2 ... m)."""
    pi = pairing_permutation(p)
    m = p.n
    gp = [0] + [pi[k] % m + 1 for k in range(1, m + 1)]
    return count_orbits(gp)


def genus_exponent(p: Partition) -> int:
    """Exponent #(gamma pi) - 1 - m/2 of N in the GUE genus expansion."""
    return gamma_pi_orbits(p) - 1 - p.n // 2


# -- counting functions ----------------------------------------------------

@lru_cache(maxsize=None)
def catalan(m: int) -> int:
    """C_m from C_0 = 1 and C_m = sum_k C_{k-1} C_{m-k}."""
    if m < 0:
        raise ValidationError("catalan needs m >= 0")
    if m == 0:
        return 1
    return sum(catalan(k - 1) * catalan(m - k) for k in range(1, m + 1))


@lru_cache(maxsize=None)
def bell(n: int) -> int:
    """Bell numbers, B_{n+1} = sum_k binom(n,k) B_k."""
    if n < 0:
        raise ValidationError("bell needs n >= 0")
    if n == 0:
        return 1
    return sum(comb(n - 1, k) * bell(k) for k in range(n))


def double_factorial_odd(k: int) -> int:
    """(2k-1)!! = 1*3*...*(2k-1); equals 1 for k = 0."""
    if k < 0:
        raise ValidationError("double_factorial_odd needs k >= 0")
    out = 1
    for j in range(1, 2 * k, 2):
        out *= j
    return out
