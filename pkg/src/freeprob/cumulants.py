"""Moment / free-cumulant calculus.

Sequences are plain Python lists indexed from order 1: ``seq[0]`` is the
first moment (or cumulant), ``m_0 = 1`` is implicit and never stored.
Every routine is arithmetic-generic: pass :class:`fractions.Fraction` (or
int) values for exact results, floats for speed.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from functools import lru_cache
from math import factorial, prod
from typing import NamedTuple, Sequence

from . import partitions as P
from .errors import ValidationError

MAX_LATTICE_ORDER = 14
MAX_RECURSIVE_ORDER = 64


def as_exact(seq: Sequence) -> list[Fraction]:
    """Convert a sequence of ints/strings/floats to Fractions."""
    return [Fraction(x) for x in seq]


def parse_sequence(text: str, exact: bool = True) -> list:
    """Parse ``"0,1,0,2"`` (also accepts ``1/2``) into a list."""
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ValidationError("empty sequence")
    try:
        return [Fraction(t) if exact else float(Fraction(t)) for t in items]
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"cannot parse sequence {text!r}: {exc}") from None


def _check_order(seq: Sequence, hi: int) -> int:
    k = len(seq)
    if k < 1:
        raise ValidationError("sequence must have order >= 1")
    if k > hi:
        raise ValidationError(f"order {k} exceeds the supported bound {hi}")
    return k


def _integer_partitions(n: int, largest: int | None = None):
    largest = n if largest is None else largest
    if n == 0:
        yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in _integer_partitions(n - first, first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def nc_type_counts(n: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    """Block-size multisets of NC(n) with their multiplicities.

    A type with r_i blocks of size i (b blocks in all) occurs
    n! / ((n - b + 1)! prod r_i!) times, so lattice sums reduce to a sum
    over the integer partitions of n.
    """
    out = []
    for sizes in _integer_partitions(n):
        b = len(sizes)
        denom = factorial(n - b + 1)
        for r in Counter(sizes).values():
            denom *= factorial(r)
        out.append((tuple(sorted(sizes)), factorial(n) // denom))
    return tuple(sorted(out))


def nc_type_counts_enumerated(n: int) -> dict[tuple[int, ...], int]:
    """Same table as :func:`nc_type_counts`, by brute-force enumeration."""
    counts: Counter = Counter()
    for lab in P.iter_nc_labels(n):
        counts[tuple(sorted(Counter(lab).values()))] += 1
    return dict(counts)


def _multiplicative(seq: Sequence, sizes: tuple[int, ...]):
    return prod((seq[s - 1] for s in sizes), start=1)


def moments_from_cumulants(kappa: Sequence) -> list:
    """m_n = sum over pi in NC(n) of prod_{V in pi} kappa_{#V}."""
    K = _check_order(kappa, MAX_LATTICE_ORDER)
    out = []
    for n in range(1, K + 1):
        out.append(sum((c * _multiplicative(kappa, t) for t, c in nc_type_counts(n)), start=0))
    return out


def cumulants_from_moments(m: Sequence) -> list:
    """Inverse of :func:`moments_from_cumulants` (Moebius inversion on NC).

    The moment-cumulant relation is unitriangular in the top cumulant:
    kappa_n = m_n - sum over pi != 1_n of kappa_pi.
    """
    K = _check_order(m, MAX_LATTICE_ORDER)
    kappa: list = []
    for n in range(1, K + 1):
        rest = sum((c * _multiplicative(kappa, t) for t, c in nc_type_counts(n) if t != (n,)),
                   start=0)
        kappa.append(m[n - 1] - rest)
    return kappa


def moments_from_cumulants_recursive(kappa: Sequence) -> list:
    """Moments via m_n = sum_s kappa_s sum_{i_1+..+i_s = n-s} m_{i_1}..m_{i_s}.

    The inner sum is the coefficient of z^{n-s} in M(z)^s, kept up to date
    incrementally, so no lattice enumeration is needed.
    """
    K = _check_order(kappa, MAX_RECURSIVE_ORDER)
    m = [1]
    # powers[s][j] = [z^j] M(z)^s; at the start of step n every row has length n
    powers = [[1]]
    for n in range(1, K + 1):
        prev = powers[n - 1]
        powers.append([sum((m[j] * prev[i - j] for j in range(i + 1)), start=0)
                       for i in range(n)])
        m.append(sum((kappa[s - 1] * powers[s][n - s] for s in range(1, n + 1)), start=0))
        powers[0].append(0)
        for s in range(1, n + 1):
            below = powers[s - 1]
            powers[s].append(sum((m[j] * below[n - j] for j in range(n + 1)), start=0))
    return m[1:]


def series_compose_check(kappa: Sequence, m: Sequence) -> list:
    """Coefficients of C(z M(z)) - M(z) through the common order.

    C(z) = 1 + sum kappa_n z^n, M(z) = 1 + sum m_n z^n.  All entries vanish
    exactly when (m, kappa) are related by the moment-cumulant formula.
    """
    K = min(len(kappa), len(m))
    M = [1] + list(m[:K])
    zM = [0] + M[:K]            # z*M(z) truncated at z^K
    comp = [1] + [0] * K        # C(zM(z))
    powr = [1] + [0] * K        # (zM)^s
    for s in range(1, K + 1):
        new = [0] * (K + 1)
        for i, a in enumerate(powr):
            if a:
                for j in range(1, K + 1 - i):
                    new[i + j] += a * zM[j]
        powr = new
        for i in range(K + 1):
            comp[i] += kappa[s - 1] * powr[i]
    return [comp[i] - M[i] for i in range(1, K + 1)]


def free_convolve_cumulants(a: Sequence, b: Sequence) -> list:
    """Cumulants of the free sum: they add."""
    if len(a) != len(b):
        raise ValidationError(f"order mismatch: {len(a)} vs {len(b)}")
    return [x + y for x, y in zip(a, b)]


def dilate_cumulants(a: Sequence, t) -> list:
    """Cumulants of the free convolution power mu^{boxplus t}: kappa_n -> t kappa_n."""
    if t < 0:
        raise ValidationError("dilation parameter t must be >= 0")
    return [t * x for x in a]


class FreePairSpec(NamedTuple):
    kappa1: Sequence
    kappa2: Sequence
    word: Sequence[int]


def joint_moment_free_pair(kappa1: Sequence, kappa2: Sequence, word: Sequence[int]):
    """phi(a_{p_1} ... a_{p_k}) for free a_1, a_2 with the given cumulants.

    Sum over non-crossing pi <= ker(p) of the block-wise cumulant products.
    """
    k = len(word)
    if k < 1 or k > 12:
        raise ValidationError("word length must be in [1, 12]")
    if any(x not in (1, 2) for x in word):
        raise ValidationError(f"word letters must be 1 or 2, got {list(word)}")
    if min(len(kappa1), len(kappa2)) < k:
        raise ValidationError("cumulant sequences shorter than the word")
    seqs = {1: kappa1, 2: kappa2}
    total = 0
    for lab in P.iter_nc_labels(k):
        blocks: dict[int, list[int]] = {}
        for pos, b in enumerate(lab):
            blocks.setdefault(b, []).append(pos)
        term = 1
        for members in blocks.values():
            letter = word[members[0]]
            if any(word[i] != letter for i in members):
                term = 0
                break
            term = term * seqs[letter][len(members) - 1]
        total = total + term
    return total


def rdiagonal_square_cumulants(alpha: Sequence) -> list:
    """Free cumulants of a*a for an R-diagonal a with determining sequence alpha.

    kappa_n(a*a, ..., a*a) = sum over pi in NC(n) of alpha_pi.
    """
    return moments_from_cumulants(alpha)


def cumulant_with_products_check(kappa: Sequence, group_sizes: Sequence[int]):
    """kappa_m(A_1, ..., A_m) for products A_j of consecutive copies of one variable.

    With 0^ the interval partition given by ``group_sizes`` this is the sum of
    kappa_pi over pi in NC(n) with pi v 0^ = 1_n.
    """
    n = sum(group_sizes)
    if n < 1 or n > 10 or any(g < 1 for g in group_sizes):
        raise ValidationError("group sizes must be >= 1 with total in [1, 10]")
    if len(kappa) < n:
        raise ValidationError("cumulant sequence shorter than the total size")
    zero_hat = P.interval_partition(group_sizes)
    top = P.one(n)
    total = 0
    for pi in P.enumerate_nc(n):
        if P.join_nc(pi, zero_hat) == top:
            total = total + _multiplicative(kappa, pi.block_sizes())
    return total
