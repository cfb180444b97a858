"""Mixed ReLU moments of a correlated Gaussian pair.

``J(a, b; theta) = E[relu(G)^a relu(H)^b]`` where ``G, H`` are standard
normals with correlation ``cos(theta)``.  A zero power stands for the
indicator of a positive argument, so ``J(0, 0)`` is the quadrant probability.
"""

import math

import numpy as np

from .bessel import bessel_P, bessel_Q

C_EVEN = 2.0 * math.pi
C_ODD = 2.0 * math.sqrt(2.0 * math.pi)

BASE_INDICES = ((0, 0), (1, 0), (1, 1))


def double_factorial(k: int) -> int:
    """k!! with the conventions (-1)!! = 0!! = 1."""
    if k < -1:
        raise ValueError(f"double factorial undefined for {k}")
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def falling_factorial(x: int, k: int) -> int:
    out = 1
    for i in range(k):
        out *= x - i
    return out


def norm_constant(parity: int) -> float:
    return C_ODD if parity % 2 else C_EVEN


def phi_moment(k: int) -> float:
    """E[relu(G)^k] for a standard normal G (k = 0 gives P(G > 0))."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k % 2 == 0:
        return double_factorial(k - 1) / 2.0
    return double_factorial(k - 1) / math.sqrt(2.0 * math.pi)


def _as_theta(theta):
    t = np.asarray(theta, dtype=float)
    return t, t.ndim == 0


def _out(val, scalar):
    return float(val) if scalar else val


def sin_minus_x_cos(x):
    """sin(x) - x cos(x) without cancellation for small x."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 0.5
    xs = np.where(small, x, 0.0)
    # alternating series x^3/3 - x^5/30 + ...: term k is (-1)^k x^(2k+3) 2(k+1)/(2k+3)!
    acc = np.zeros_like(xs)
    term = xs ** 3 / 3.0
    for k in range(12):
        acc = acc + term
        term = -term * xs * xs * (2 * k + 4) / ((2 * k + 2) * (2 * k + 4) * (2 * k + 5))
    direct = np.sin(x) - x * np.cos(x)
    return np.where(small, acc, direct)


class _FloatCtx:
    """Trigonometric ingredients evaluated in float64.

    For obtuse angles everything is expressed through psi = pi - theta so the
    base values keep full relative accuracy as theta approaches pi.
    """

    def __init__(self, t, magnitude=False):
        t = np.asarray(t, dtype=float)
        self.t = t
        self.psi = math.pi - t
        obtuse = t > 0.5 * math.pi
        cos = np.where(obtuse, -np.cos(self.psi), np.cos(t))
        self.s = np.where(obtuse, np.sin(self.psi), np.sin(t))
        self.one_plus_cos = np.where(obtuse, 2.0 * np.sin(0.5 * self.psi) ** 2, 1.0 + cos)
        self.j11_num = np.where(obtuse, sin_minus_x_cos(self.psi), self.s + self.psi * cos)
        self.c = np.abs(cos) if magnitude else cos
        self.magnitude = magnitude
        self.c0 = C_EVEN
        self.c1 = C_ODD

    def zero(self):
        return np.zeros_like(self.t)

    def norm(self, parity):
        return self.c1 if parity % 2 else self.c0

    def base(self, which):
        if which == (0, 0):
            return self.psi / self.c0
        if which in ((1, 0), (0, 1)):
            return self.one_plus_cos / self.c1
        if which == (1, 1):
            return self.j11_num / self.c0
        raise ValueError(f"no base formula for index {which}")


class _MpCtx:
    """Same ingredients in a private mpmath context at a chosen precision."""

    def __init__(self, psi: float, dps: int):
        import mpmath

        mp = mpmath.MPContext()
        mp.dps = dps
        self.mp = mp
        self.psi = mp.mpf(psi)
        self.t = mp.pi - self.psi
        self.c = -mp.cos(self.psi)
        self.s = mp.sin(self.psi)
        self.one_plus_cos = 1 + self.c
        self.j11_num = self.s + self.psi * self.c
        self.magnitude = False
        self.c0 = 2 * mp.pi
        self.c1 = 2 * mp.sqrt(2 * mp.pi)

    def zero(self):
        return self.mp.mpf(0)

    def norm(self, parity):
        return self.c1 if parity % 2 else self.c0

    def base(self, which):
        if which == (0, 0):
            return self.psi / self.c0
        if which in ((1, 0), (0, 1)):
            return self.one_plus_cos / self.c1
        if which == (1, 1):
            return self.j11_num / self.c0
        raise ValueError(f"no base formula for index {which}")


def j_base(which, theta):
    """Elementary closed forms for J(0,0), J(1,0) and J(1,1)."""
    t, scalar = _as_theta(theta)
    return _out(_FloatCtx(t).base(tuple(which)), scalar)


# float64 results whose cancellation ratio (sum of term magnitudes over the
# result) exceeds this are recomputed in extended precision
CANCELLATION_LIMIT = 16.0


def _evaluate(algo, a, b, theta):
    t, scalar = _as_theta(theta)
    if np.any((t < 0) | (t > math.pi)):
        raise ValueError("theta must lie in [0, pi]")
    shape = t.shape
    t = t.reshape(-1)
    ctx = _FloatCtx(t)
    val = np.array(algo(a, b, ctx), dtype=float) * np.ones_like(t)
    if a + b >= 2:
        mag = np.asarray(algo(a, b, _FloatCtx(t, magnitude=True)), dtype=float) * np.ones_like(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = mag / np.abs(val)
        bad = (ctx.psi > 0) & ~(ratio <= CANCELLATION_LIMIT)
        for k in np.flatnonzero(bad):
            val[k] = _extended(algo, a, b, float(ctx.psi[k]), float(mag[k]))
    val = val.reshape(shape)
    return _out(val, scalar)


def _extended(algo, a, b, psi, mag):
    dps = 40
    for _ in range(8):
        ctx = _MpCtx(psi, dps)
        v = algo(a, b, ctx)
        if v != 0:
            lost = math.log10(mag) - float(ctx.mp.log10(abs(v)))
            if lost + 20 <= dps:
                return float(v)
            dps = int(lost) + 30
        else:
            dps *= 2
    raise ArithmeticError(f"J({a},{b}) at pi - {psi} did not converge in extended precision")


class _RecursionTable:
    """Memoized recurrence evaluation for one set of angle ingredients."""

    def __init__(self, ctx):
        self.ctx = ctx
        self.memo = {}

    def row0(self, a):
        # J(a, 0) from the inhomogeneous recurrence in a
        key = (a, 0)
        if key in self.memo:
            return self.memo[key]
        ctx = self.ctx
        if a <= 1:
            val = ctx.base((a, 0))
        else:
            drive = ctx.s ** (a - 1) * ctx.c * (double_factorial(a - 2) / ctx.norm(a))
            val = (a - 1) * self.row0(a - 2) + drive
        self.memo[key] = val
        return val

    def get(self, a, b):
        if a > b:
            a, b = b, a
        if a == 0:
            return self.row0(b)
        key = (a, b)
        if key in self.memo:
            return self.memo[key]
        c = self.ctx.c
        if a == 1 and b == 1:
            val = self.ctx.base((1, 1))
        elif a == 1:
            # J(b, 1) with the first index as the recursing one
            val = (b - 1) * self.get(b - 2, 1) + c * self.get(b - 1, 0)
        else:
            val = (a - 1) * self.get(a - 2, b) + b * c * self.get(a - 1, b - 1)
        self.memo[key] = val
        return val


def _recursive_algo(a, b, ctx):
    return _RecursionTable(ctx).get(a, b)


def j_recursive(idx, theta):
    """J(a, b; theta) by dynamic programming over the two recurrences."""
    a, b = (int(v) for v in idx)
    if a < 0 or b < 0:
        raise ValueError("indices must be non-negative")
    return _evaluate(_recursive_algo, a, b, theta)


def _row0_closed(a, ctx):
    if a <= 1:
        return ctx.base((a, 0))
    p = a % 2
    acc = ctx.zero()
    for i in range(1 - p, a, 2):
        if i == 0:
            continue
        acc = acc + double_factorial(i - 1) * ctx.s ** i / double_factorial(i)
    return double_factorial(a - 1) * (ctx.base((p, 0)) + ctx.c * acc / ctx.norm(p))


def _row1_closed(a, ctx):
    if a <= 1:
        return ctx.base((a, 1)) if a == 1 else ctx.base((1, 0))
    p = a % 2
    acc = ctx.zero()
    for i in range(1 - p, a, 2):
        if i == 0:
            continue
        acc = acc + _row0_closed(i, ctx) / double_factorial(i)
    start = ctx.base((1, 1)) if p else ctx.base((1, 0))
    return double_factorial(a - 1) * (start + ctx.c * acc)


def closed_coefficients(a: int, b: int):
    """Exact integer coefficients of the expansion of J(a, b) over source rows.

    Returns a list of ``(row, n, coeff, power)`` meaning
    ``coeff * cos(theta)**power * J(row, n)`` with row in {0, 1}.  Requires
    ``b >= a >= 2``.
    """
    terms = []
    for i in range(1, a + 1):
        n = b - a + i
        ff = falling_factorial(b, a - i)
        if i % 2 == 0:
            c = bessel_P(a, a - i)
            if a - 1 - i >= 0:
                c -= bessel_Q(a - 1, a - 1 - i)
            row = 0
        else:
            c = bessel_Q(a - 1, a - i)
            row = 1
        if c:
            terms.append((row, n, ff * c, a - i))
    return terms


def _closed_algo(a, b, ctx):
    a, b = min(a, b), max(a, b)
    if a == 0:
        return _row0_closed(b, ctx)
    if a == 1:
        return _row1_closed(b, ctx)
    val = ctx.zero()
    for row, n, coeff, power in closed_coefficients(a, b):
        src = _row0_closed(n, ctx) if row == 0 else _row1_closed(n, ctx)
        if ctx.magnitude:
            coeff = abs(coeff)
        val = val + coeff * ctx.c ** power * src
    return val


def j_closed(idx, theta):
    """J(a, b; theta) from the non-recursive expansion in Bessel numbers."""
    a, b = (int(v) for v in idx)
    if a < 0 or b < 0:
        raise ValueError("indices must be non-negative")
    return _evaluate(_closed_algo, a, b, theta)
