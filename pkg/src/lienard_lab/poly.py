"""The damping polynomial F and the exact root machinery built around it.

``Poly`` stores F(x) = c1*x + c2*x**2 + ... + cN*x**N with no constant term, so
the origin is always the equilibrium of the Liénard field.  Real roots are
isolated exactly: coefficients are converted to ``Fraction`` (floats convert
without loss), reduced to their square-free part and counted with a Sturm
chain, then each isolating interval is bisected down to ``ROOT_TOL``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .errors import InvalidParameters, NoOuterBranch

MAX_DEGREE = 16
ROOT_TOL = 1e-12

__all__ = [
    "Poly",
    "HalfLineMinima",
    "OuterBranches",
    "even_odd_decompose",
    "odd_unique_root",
    "half_line_minima",
    "outer_branches",
    "real_roots",
    "parse_coeffs",
]


@dataclass(frozen=True)
class Poly:
    """F(x) = sum(coeffs[k-1] * x**k); ``coeffs`` is ascending and starts at x**1."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        cs = [float(c) for c in self.coeffs]
        while cs and cs[-1] == 0.0:
            cs.pop()
        if len(cs) > MAX_DEGREE:
            raise InvalidParameters(f"degree {len(cs)} exceeds the cap of {MAX_DEGREE}")
        for k, c in enumerate(cs, start=1):
            if c != c or c in (float("inf"), float("-inf")):
                raise InvalidParameters(f"coefficient of x^{k} is not finite: {c}")
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def from_abcd(cls, a: float, b: float, c: float, d: float) -> "Poly":
        """The quartic family F = a x^4 + b x^3 + c x^2 + d x."""
        return cls((d, c, b, a))

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    @property
    def leading(self) -> float:
        return self.coeffs[-1] if self.coeffs else 0.0

    @property
    def full(self) -> tuple[float, ...]:
        """Ascending coefficients including the (zero) constant term."""
        return (0.0,) + self.coeffs

    def is_even(self) -> bool:
        return all(c == 0.0 for c in self.coeffs[0::2])

    def is_odd(self) -> bool:
        return all(c == 0.0 for c in self.coeffs[1::2])

    def __call__(self, x: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc * x

    def deriv(self, x: float) -> float:
        acc = 0.0
        for k in range(len(self.coeffs), 0, -1):
            acc = acc * x + k * self.coeffs[k - 1]
        return acc

    def deriv_coeffs(self) -> tuple[float, ...]:
        """Ascending coefficients of F', constant term first."""
        return tuple(k * c for k, c in enumerate(self.coeffs, start=1))

    def __add__(self, other: "Poly") -> "Poly":
        n = max(self.degree, other.degree)
        a = self.coeffs + (0.0,) * (n - self.degree)
        b = other.coeffs + (0.0,) * (n - other.degree)
        return Poly(tuple(x + y for x, y in zip(a, b)))

    def reflected(self) -> "Poly":
        """F(-x) negated: the damping seen by the conjugacy (x, t) -> (-x, -t)."""
        return Poly(tuple(c if k % 2 == 0 else -c for k, c in enumerate(self.coeffs, start=1)))

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for k in range(self.degree, 0, -1):
            c = self.coeffs[k - 1]
            if c == 0.0:
                continue
            mono = "x" if k == 1 else f"x^{k}"
            terms.append(f"{c:g}*{mono}")
        return " + ".join(terms).replace("+ -", "- ")


def parse_coeffs(text: str) -> Poly:
    """Parse the CLI form "c1,c2,...,cN" (ascending powers, no constant term)."""
    parts = text.split(",")
    values = []
    for i, part in enumerate(parts, start=1):
        try:
            values.append(float(part.strip()))
        except ValueError:
            raise InvalidParameters(f"coefficient {i} ({part!r}) is not a number") from None
    return Poly(tuple(values))


def even_odd_decompose(f: Poly) -> tuple[Poly, Poly]:
    even = tuple(c if k % 2 == 0 else 0.0 for k, c in enumerate(f.coeffs, start=1))
    odd = tuple(c if k % 2 == 1 else 0.0 for k, c in enumerate(f.coeffs, start=1))
    return Poly(even), Poly(odd)


# --- exact polynomial arithmetic on ascending Fraction lists -----------------

def _trim(p: list[Fraction]) -> list[Fraction]:
    while p and p[-1] == 0:
        p.pop()
    return p


def _derivative(p: Sequence[Fraction]) -> list[Fraction]:
    return _trim([k * p[k] for k in range(1, len(p))])


def _rem(a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    r = list(a)
    db, lb = len(b) - 1, b[-1]
    while len(r) - 1 >= db and r:
        q = r[-1] / lb
        shift = len(r) - 1 - db
        for i in range(db + 1):
            r[shift + i] -= q * b[i]
        r.pop()
        _trim(r)
    return r


def _quo(a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    r = list(a)
    db, lb = len(b) - 1, b[-1]
    q = [Fraction(0)] * max(len(a) - db, 1)
    while r and len(r) - 1 >= db:
        c = r[-1] / lb
        shift = len(r) - 1 - db
        q[shift] = c
        for i in range(db + 1):
            r[shift + i] -= c * b[i]
        r.pop()
        _trim(r)
    return _trim(q)


def _gcd(a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    a, b = list(a), list(b)
    while b:
        a, b = b, _rem(a, b)
    return [c / a[-1] for c in a]


def _eval(p: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def _sturm_chain(p: list[Fraction]) -> list[list[Fraction]]:
    chain = [p, _derivative(p)]
    while chain[-1]:
        r = _rem(chain[-2], chain[-1])
        if not r:
            break
        chain.append([-c for c in r])
    return [q for q in chain if q]


def _variations(signs: Iterable[int]) -> int:
    nz = [s for s in signs if s != 0]
    return sum(1 for u, v in zip(nz, nz[1:]) if u != v)


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def _var_at(chain, x: Fraction) -> int:
    return _variations(_sign(_eval(q, x)) for q in chain)


def _var_at_inf(chain, positive: bool) -> int:
    signs = []
    for q in chain:
        deg = len(q) - 1
        s = _sign(q[-1])
        if not positive and deg % 2 == 1:
            s = -s
        signs.append(s)
    return _variations(signs)


def _squarefree(p: list[Fraction]) -> list[Fraction]:
    dp = _derivative(p)
    if not dp:
        return p
    g = _gcd(p, dp)
    return _quo(p, g) if len(g) > 1 else p


def _cauchy_bound(p: Sequence[Fraction]) -> Fraction:
    lead = abs(p[-1])
    return 1 + max((abs(c) / lead for c in p[:-1]), default=Fraction(0))


def count_roots_in(p_full: Sequence[float], lo: float | None, hi: float | None) -> int:
    """Number of distinct real roots in (lo, hi]; ``None`` stands for -inf / +inf."""
    p = _trim([Fraction(c) for c in p_full])
    if len(p) <= 1:
        return 0
    chain = _sturm_chain(_squarefree(p))
    v_lo = _var_at_inf(chain, False) if lo is None else _var_at(chain, Fraction(lo))
    v_hi = _var_at_inf(chain, True) if hi is None else _var_at(chain, Fraction(hi))
    return v_lo - v_hi


@lru_cache(maxsize=4096)
def _real_roots_cached(p_full: tuple[float, ...], tol: float) -> tuple[float, ...]:
    p = _trim([Fraction(c) for c in p_full])
    if len(p) <= 1:
        return ()
    sq = _squarefree(p)
    chain = _sturm_chain(sq)
    bound = _cauchy_bound(sq)
    roots: list[float] = []
    # (lo, hi] intervals holding exactly n roots, processed left to right
    stack = [(-bound, bound)]
    isolated: list[tuple[Fraction, Fraction]] = []
    while stack:
        lo, hi = stack.pop()
        n = _var_at(chain, lo) - _var_at(chain, hi)
        if n == 0:
            continue
        if n == 1:
            isolated.append((lo, hi))
            continue
        mid = (lo + hi) / 2
        stack.append((mid, hi))
        stack.append((lo, mid))
    ftol = Fraction(tol)
    for lo, hi in sorted(isolated):
        if _eval(sq, hi) == 0:
            roots.append(float(hi))
            continue
        s_hi = _sign(_eval(sq, hi))
        while hi - lo > ftol:
            # midpoints are rounded to doubles so denominators stay bounded
            mid = Fraction(float((lo + hi) / 2))
            if mid <= lo or mid >= hi:
                break
            v = _eval(sq, mid)
            if v == 0:
                lo = hi = mid
                break
            if _sign(v) == s_hi:
                hi = mid
            else:
                lo = mid
        roots.append(float((lo + hi) / 2))
    return tuple(roots)


def real_roots(p_full: Sequence[float], tol: float = ROOT_TOL) -> list[float]:
    """Distinct real roots, ascending, of sum(p_full[k] * x**k) (constant first)."""
    return list(_real_roots_cached(tuple(float(c) for c in p_full), tol))


def odd_unique_root(o: Poly) -> bool:
    """True iff x = 0 is the only real root of the odd polynomial ``o``."""
    if not o.is_odd():
        raise InvalidParameters(f"{o} is not an odd polynomial")
    if not o.coeffs:
        return False
    # O(x) = x * R(x^2); drop the powers of u = x^2 that only re-add the root x = 0
    r = list(o.coeffs[0::2])
    while r and r[0] == 0.0:
        r.pop(0)
    return count_roots_in(r, 0.0, None) == 0


@dataclass(frozen=True)
class HalfLineMinima:
    m_minus: float
    m_plus: float
    argmin_minus: float
    argmin_plus: float


def _require_even_positive(f: Poly) -> None:
    if f.degree == 0 or f.degree % 2 or f.leading <= 0:
        raise InvalidParameters(f"need even degree with positive leading coefficient, got {f}")


def critical_points(f: Poly) -> list[float]:
    return real_roots(f.deriv_coeffs())


def half_line_minima(f: Poly) -> HalfLineMinima:
    _require_even_positive(f)
    crit = critical_points(f)
    left = [0.0] + [x for x in crit if x < 0]
    right = [0.0] + [x for x in crit if x > 0]
    xm = min(left, key=f)
    xp = min(right, key=f)
    return HalfLineMinima(m_minus=f(xm), m_plus=f(xp), argmin_minus=xm, argmin_plus=xp)


@dataclass(frozen=True)
class OuterBranches:
    a_of_y: float
    b_of_y: float
    y: float


def outer_branches(f: Poly, y: float) -> OuterBranches:
    """Largest and smallest real solutions of F(x) = y, for y above both half-line minima."""
    mins = half_line_minima(f)
    if not y > max(mins.m_minus, mins.m_plus):
        raise NoOuterBranch(
            f"y={y} is not above both half-line minima ({mins.m_minus}, {mins.m_plus})"
        )
    roots = real_roots((-float(y),) + f.coeffs)
    return OuterBranches(a_of_y=roots[-1], b_of_y=roots[0], y=float(y))
