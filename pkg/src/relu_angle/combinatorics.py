"""Brute-force combinatorial oracles.

* weighted path sums in the recursion graphs of J, J*, P and Q;
* enumeration of irreducible index configurations;
* reconstruction of Var R, Var(R sin^2) and their covariance by summing
  over every index configuration, classified by repetition pattern.
"""

import math
from functools import lru_cache
from itertools import product

import numpy as np

from .dynamics import moments_of_R
from .errors import BudgetExceeded
from .jfuncs import j_closed, phi_moment

SCHEMES = ("J", "J*", "P", "Q")


def _in_edges(scheme, a, b):
    """Incoming edges of (a, b) as (source vertex, integer coefficient, cos power)."""
    edges = []
    if scheme == "J":
        if a >= 2 and b >= 1:
            edges.append(((a - 2, b), a - 1, 0))
            edges.append(((a - 1, b - 1), b, 1))
    elif scheme == "J*":
        if 2 <= a <= b:
            edges.append(((a - 2, b), a - 1, 0))
            edges.append(((a - 1, b - 1), 1, 0))
        elif a == 1 and b >= 1:
            edges.append(((0, b - 1), 1, 0))
    elif scheme in ("P", "Q"):
        if a >= 1 and 0 <= b <= a:
            if a >= 2:
                edges.append(((a - 2, b), a - 1 if scheme == "P" else a, 0))
            if b >= 1:
                edges.append(((a - 1, b - 1), 1, 0))
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return edges


def is_source(scheme, vertex) -> bool:
    return not _in_edges(scheme, *vertex)


def _poly_add(acc, poly, coeff=1, shift=0):
    for p, c in poly.items():
        acc[p + shift] = acc.get(p + shift, 0) + coeff * c


def _clean(poly):
    return {p: c for p, c in sorted(poly.items()) if c != 0}


def _naive(scheme, src, dst):
    # depth-first walk backwards from dst, one term per complete path
    total = {}

    def walk(v, coeff, power):
        if v == src:
            total[power] = total.get(power, 0) + coeff
            return
        if v[0] < src[0] or v[1] < src[1]:
            return
        for u, c, p in _in_edges(scheme, *v):
            walk(u, coeff * c, power + p)

    walk(dst, 1, 0)
    return _clean(total)


def _memo(scheme, src, dst):
    @lru_cache(maxsize=None)
    def w(v):
        if v == src:
            return ((0, 1),)
        if v[0] < src[0] or v[1] < src[1]:
            return ()
        acc = {}
        for u, c, p in _in_edges(scheme, *v):
            _poly_add(acc, dict(w(u)), c, p)
        return tuple(_clean(acc).items())

    return dict(w(dst))


def path_weight_sum(scheme: str, src, dst, naive: bool = False):
    """Sum over directed paths src -> dst of the product of edge weights.

    Weights are exact monomials c * cos(theta)^p, so the result is returned
    as {power of cos(theta): integer coefficient}; {} when dst is unreachable.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    src, dst = tuple(src), tuple(dst)
    if max(dst) > 30:
        raise ValueError("lattice bound exceeded (coordinates must be <= 30)")
    if naive:
        if dst[0] > 10:
            raise ValueError("naive enumeration is limited to a <= 10")
        return _naive(scheme, src, dst)
    return _memo(scheme, src, dst)


def falling_poly(b, k):
    out = 1
    for i in range(k):
        out *= b - i
    return out


def expected_J_weight(src, dst):
    """Closed-form path weight in the J graph from a row-0 or row-1 source."""
    row, n = src
    a, b = dst
    k = b - n
    if k < 0:
        return {}
    from .bessel import bessel_P, bessel_Q

    if row == 0:
        c = bessel_P(a, k) - (bessel_Q(a - 1, k - 1) if a >= 1 and k >= 1 else 0)
    else:
        c = bessel_Q(a - 1, k) if a >= 1 else 0
    c *= falling_poly(b, k)
    return {k: c} if c else {}


def evaluate_poly(poly, theta):
    c = np.cos(np.asarray(theta, dtype=float))
    return sum(coeff * c ** p for p, coeff in poly.items())


# ---------------------------------------------------------------- irreducible


def falling(n, k):
    return math.perm(n, k) if k <= n else 0


IRREDUCIBLE_COEFFS = {
    2: (0, 1, 6, 4),
    3: (0, 1, 28, 68, 32),
    4: (0, 1, 123, 844, 1268, 544, 48),
}


def irreducible_polynomial(k_points: int, n: int) -> int:
    """Closed count of irreducible configurations: sum_j c_j (n)_j."""
    return sum(c * falling(n, j) for j, c in enumerate(IRREDUCIBLE_COEFFS[k_points]))


def count_irreducible(k_points: int, n: int, budget: int = 50_000_000) -> int:
    """Exhaustively count k-tuples of index pairs in [n] with no reducible point.

    A point (i_m, j_m) is reducible when {i_m, j_m} shares no index with the
    pairs of all the other points.
    """
    if k_points < 2:
        raise ValueError("need at least two points")
    total = n ** (2 * k_points)
    if total > budget:
        raise BudgetExceeded(f"enumeration needs {total} tuples, budget is {budget}", total)
    count = 0
    # split on the first coordinate to bound memory
    rest = 2 * k_points - 1
    tail = np.indices((n,) * rest, dtype=np.int16).reshape(rest, -1)
    for first in range(n):
        idx = np.vstack([np.full(tail.shape[1], first, dtype=np.int16), tail])
        pts = idx.reshape(k_points, 2, -1)
        ok = np.ones(tail.shape[1], dtype=bool)
        for m in range(k_points):
            shared = np.zeros(tail.shape[1], dtype=bool)
            for o in range(k_points):
                if o == m:
                    continue
                for x in (0, 1):
                    for y in (0, 1):
                        shared |= pts[m, x] == pts[o, y]
            ok &= shared
        count += int(np.count_nonzero(ok))
    return count


# -------------------------------------------------------------- pattern tables


def canonical_pattern(config) -> str:
    """Relabel indices by order of first appearance, e.g. (5, 2, 5, 7) -> 'abac'."""
    seen = {}
    out = []
    for i in config:
        if i not in seen:
            seen[i] = "abcd"[len(seen)]
        out.append(seen[i])
    return "".join(out)


def is_reducible(config) -> bool:
    i1, j1, i2, j2 = config
    return not ({i1, j1} & {i2, j2})


def _entries_var_R(J):
    q = 0.25
    t = {
        "aaaa": (J[2, 2], J[2, 2], J[4, 4]),
        "abab": (q, q, 2.25),
        "abba": (q, q, J[2, 2] ** 2),
        "aaab": (J[2, 2], q, 0.5 * J[4, 2]),
        "aaba": (J[2, 2], q, 0.5 * J[4, 2]),
        "abaa": (q, J[2, 2], 0.5 * J[4, 2]),
        "abbb": (q, J[2, 2], 0.5 * J[4, 2]),
        "abac": (q, q, 1.5 * q),
        "abcb": (q, q, 1.5 * q),
        "abca": (q, q, q * J[2, 2]),
        "abbc": (q, q, q * J[2, 2]),
    }
    return t


def _entries_var_Rsin2(J):
    ef = 0.5 - 2 * J[1, 1] ** 2
    two = 6 * J[2, 2] ** 2 - 8 * J[3, 1] ** 2 + 4.5
    three = 4 * J[2, 2] * J[1, 1] ** 2 - 4 * J[3, 1] * J[1, 1] + 0.5 * J[2, 2] + 0.75
    t = {p: (ef, ef, two) for p in ("abab", "abba")}
    t.update({p: (ef, ef, three) for p in ("abac", "abca", "abcb", "abbc")})
    return t


def _entries_cov(J):
    ef = 0.5 - 2 * J[1, 1] ** 2
    q = 0.25
    diag = J[4, 2] - 2 * J[1, 1] * J[3, 3]
    two = J[2, 2] ** 2 - 2 * J[3, 1] ** 2 + 2.25
    # three distinct indices: the squared-norm factor meets only one of the
    # two cross terms of the antisymmetric square
    three = 0.375 + 0.25 * J[2, 2] - J[1, 1] * J[3, 1]
    t = {"abbb": (ef, J[2, 2], diag), "abaa": (ef, J[2, 2], diag)}
    t.update({p: (ef, q, two) for p in ("abab", "abba")})
    t.update({p: (ef, q, three) for p in ("abac", "abca", "abbc", "abcb")})
    return t


TABLES = {
    "var_R": (_entries_var_R, 16.0),
    "var_Rsin2": (_entries_var_Rsin2, 4.0),
    "cov": (_entries_cov, 8.0),
}

_MOMENT_KEY = {"var_R": "Var_R", "var_Rsin2": "Var_Rsin2", "cov": "Cov"}


def _j_values(theta):
    return {idx: j_closed(idx, theta) for idx in
            [(1, 1), (2, 2), (3, 1), (3, 3), (4, 2), (4, 4)]}


def table_sum(table: str, n: int, theta: float) -> float:
    """Direct sum over all configurations in [n]^4 using per-pattern table entries."""
    entries, pref = TABLES[table]
    rows = entries(_j_values(theta))
    acc = 0.0
    for config in product(range(n), repeat=4):
        if is_reducible(config):
            continue
        row = rows.get(canonical_pattern(config))
        if row is None:
            # one factor vanishes identically on this pattern
            continue
        e1, e2, e12 = row
        acc += e12 - e1 * e2
    return pref * acc / n ** 4


def pattern_table_check(table: str, n: int, theta: float) -> float:
    """|configuration sum - closed-form moment| for one of var_R, var_Rsin2, cov."""
    if not 2 <= n <= 8:
        raise ValueError("n must lie in [2, 8]")
    if table not in TABLES:
        raise ValueError(f"unknown table {table!r}")
    closed = moments_of_R(theta, n).as_dict()[_MOMENT_KEY[table]]
    return abs(table_sum(table, n, theta) - closed)


# ------------------------------------------------ generic monomial expansion


def _f_R(i, j):
    return [(1.0, {i: (2, 0)}, {j: (0, 2)})]


def _f_S(i, j):
    return [(1.0, {i: (2, 0)}, {j: (0, 2)}),
            (1.0, {j: (2, 0)}, {i: (0, 2)}),
            (-2.0, {i: (1, 1)}, {j: (1, 1)})]


def _merge_mono(*parts):
    out = {}
    for part in parts:
        for k, (p, q) in part.items():
            a, b = out.get(k, (0, 0))
            out[k] = (a + p, b + q)
    return out


def _mono_expect(mono, J):
    val = 1.0
    for p, q in mono.values():
        if p and q:
            val *= J(p, q)
        elif p or q:
            val *= phi_moment(p + q)
    return val


def _expand(fn, i, j):
    return [(c, _merge_mono(m1, m2)) for c, m1, m2 in fn(i, j)]


def monomial_pattern_values(table: str, config, theta: float):
    """(E f1, E f2, E f1 f2) for a configuration by expanding into monomials."""
    cache = {}

    def J(p, q):
        if (p, q) not in cache:
            cache[p, q] = j_closed((p, q), theta)
        return cache[p, q]

    f1, f2 = {"var_R": (_f_R, _f_R), "var_Rsin2": (_f_S, _f_S), "cov": (_f_S, _f_R)}[table]
    i1, j1, i2, j2 = config
    t1 = _expand(f1, i1, j1)
    t2 = _expand(f2, i2, j2)
    e1 = sum(c * _mono_expect(m, J) for c, m in t1)
    e2 = sum(c * _mono_expect(m, J) for c, m in t2)
    e12 = sum(c1 * c2 * _mono_expect(_merge_mono(m1, m2), J) for c1, m1 in t1 for c2, m2 in t2)
    return e1, e2, e12


def monomial_sum(table: str, n: int, theta: float) -> float:
    """Same configuration sum with expectations from the generic monomial rule."""
    pref = TABLES[table][1]
    memo = {}
    acc = 0.0
    for config in product(range(n), repeat=4):
        if is_reducible(config):
            continue
        key = canonical_pattern(config)
        if key not in memo:
            e1, e2, e12 = monomial_pattern_values(table, config, theta)
            memo[key] = e12 - e1 * e2
        acc += memo[key]
    return pref * acc / n ** 4
