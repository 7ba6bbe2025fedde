"""Exact scalar arithmetic.

Three layers, all exact:

* ``Rational`` is :class:`fractions.Fraction` (arbitrary precision,
  always reduced, positive denominator).
* :class:`QuadScalar` is an element ``a + b*sqrt(D)`` of a single real
  quadratic extension, with ``a, b`` rational and ``D`` a squarefree
  integer >= 2.  One extension per problem instance; purely rational
  values carry ``D = None`` and mix freely with any extension.
* :class:`RootSum` is a finite formal sum ``sum(c_f * sqrt(f))`` over
  squarefree positive integer tags ``f`` with rational coefficients.
  It is the ring in which products of scaled matrices are compared;
  square roots of distinct squarefree integers are linearly independent
  over the rationals, so equality is coefficient-wise.

Floating point appears only in the explicit ``to_float`` conversions
consumed by the enumeration and density layers.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import DomainMismatchError, ParseError

Rational = Fraction


def squarefree_decomposition(n: int) -> tuple[int, int]:
    """Write ``n = s**2 * f`` with ``f`` squarefree; return ``(s, f)``.

    Trial division; fine for the desk-scale integers that arise here.
    """
    if n <= 0:
        raise ValueError("squarefree_decomposition needs a positive integer")
    s, f = 1, 1
    i = 2
    while i * i <= n:
        if n % i == 0:
            e = 0
            while n % i == 0:
                n //= i
                e += 1
            s *= i ** (e // 2)
            if e % 2:
                f *= i
        i += 1 if i == 2 else 2
    return s, f * n


def is_squarefree(n: int) -> bool:
    return n >= 1 and squarefree_decomposition(n)[1] == n


def normalize_root(rho: Fraction) -> tuple[Fraction, int]:
    """Normalize ``sqrt(rho)`` for positive rational ``rho``.

    Returns ``(c, f)`` with ``sqrt(rho) = c * sqrt(f)``, ``c`` a positive
    rational and ``f`` a squarefree positive integer.
    """
    rho = Fraction(rho)
    if rho <= 0:
        raise ValueError("root scales must be positive")
    # sqrt(p/q) = sqrt(p*q)/q
    p, q = rho.numerator, rho.denominator
    s, f = squarefree_decomposition(p * q)
    return Fraction(s, q), f


def _coerce_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rational(x)
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


def parse_rational(text) -> Fraction:
    """Parse the problem-file rational syntax ``"p/q"`` (or a bare integer)."""
    if isinstance(text, bool):
        raise ParseError(f"not a rational: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, Fraction):
        return text
    if not isinstance(text, str):
        raise ParseError(f"not a rational: {text!r}")
    try:
        value = Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad rational literal {text!r}: {exc}") from None
    return value


def format_rational(x: Fraction) -> str:
    return str(Fraction(x))


class QuadScalar:
    """An exact element ``a + b*sqrt(D)`` of Q(sqrt(D))."""

    __slots__ = ("a", "b", "D")

    def __init__(self, a, b=0, D: int | None = None):
        a = _coerce_fraction(a)
        b = _coerce_fraction(b)
        if b == 0:
            D = None
        else:
            if D is None:
                raise ValueError("irrational part requires a sqrt domain D")
            if not isinstance(D, int) or D < 2 or not is_squarefree(D):
                raise ValueError(f"D must be a squarefree integer >= 2, got {D!r}")
        self.a = a
        self.b = b
        self.D = D

    # -- construction helpers -------------------------------------------------

    @classmethod
    def zero(cls) -> "QuadScalar":
        return cls(0)

    @classmethod
    def one(cls) -> "QuadScalar":
        return cls(1)

    @classmethod
    def sqrt_of(cls, D: int) -> "QuadScalar":
        return cls(0, 1, D)

    @classmethod
    def coerce(cls, x) -> "QuadScalar":
        if isinstance(x, QuadScalar):
            return x
        return cls(_coerce_fraction(x))

    # -- domain handling ------------------------------------------------------

    def _merged_domain(self, other: "QuadScalar") -> int | None:
        if self.D is None:
            return other.D
        if other.D is None or other.D == self.D:
            return self.D
        raise DomainMismatchError(f"mixed sqrt domains {self.D} and {other.D}")

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    # -- arithmetic -----------------------------------------------------------

    _COERCIBLE = (int, Fraction, str)

    def __add__(self, other):
        if not isinstance(other, QuadScalar):
            if not isinstance(other, self._COERCIBLE):
                return NotImplemented
            other = QuadScalar.coerce(other)
        D = self._merged_domain(other)
        return QuadScalar(self.a + other.a, self.b + other.b, D)

    __radd__ = __add__

    def __neg__(self):
        return QuadScalar(-self.a, -self.b, self.D)

    def __sub__(self, other):
        if not isinstance(other, (QuadScalar, *self._COERCIBLE)):
            return NotImplemented
        return self + (-QuadScalar.coerce(other))

    def __rsub__(self, other):
        if not isinstance(other, (QuadScalar, *self._COERCIBLE)):
            return NotImplemented
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, QuadScalar):
            if not isinstance(other, self._COERCIBLE):
                return NotImplemented
            other = QuadScalar.coerce(other)
        D = self._merged_domain(other)
        if self.b == 0 and other.b == 0:
            return QuadScalar(self.a * other.a)
        return QuadScalar(
            self.a * other.a + (D or 0) * self.b * other.b,
            self.a * other.b + self.b * other.a,
            D,
        )

    __rmul__ = __mul__

    def inverse(self) -> "QuadScalar":
        if not self:
            raise ZeroDivisionError("inverse of zero")
        if self.b == 0:
            return QuadScalar(1 / self.a)
        n = self.norm()
        return QuadScalar(self.a / n, -self.b / n, self.D)

    def __truediv__(self, other):
        other = QuadScalar.coerce(other)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return QuadScalar.coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        out = QuadScalar.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # -- predicates and order -------------------------------------------------

    def __bool__(self) -> bool:
        return self.a != 0 or self.b != 0

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, str)):
            other = QuadScalar.coerce(other)
        if not isinstance(other, QuadScalar):
            return NotImplemented
        if self.a != other.a or self.b != other.b:
            return False
        return self.b == 0 or self.D == other.D

    def __hash__(self):
        return hash((self.a, self.b, self.D))

    def norm(self) -> Fraction:
        """Field norm ``a**2 - D*b**2``; nonzero for nonzero elements."""
        return self.a * self.a - (self.D or 0) * self.b * self.b

    def conjugate(self) -> "QuadScalar":
        return QuadScalar(self.a, -self.b, self.D)

    def sign(self) -> int:
        """Exact sign of the real number ``a + b*sqrt(D)``."""
        a, b = self.a, self.b
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0:
            return 1 if b > 0 else -1
        if a > 0 and b > 0:
            return 1
        if a < 0 and b < 0:
            return -1
        # opposite signs: compare a^2 with D b^2 (equality impossible, D squarefree)
        lhs, rhs = a * a, self.D * b * b
        if a > 0:
            return 1 if lhs > rhs else -1
        return -1 if lhs > rhs else 1

    def __lt__(self, other):
        return (self - QuadScalar.coerce(other)).sign() < 0

    def __le__(self, other):
        return (self - QuadScalar.coerce(other)).sign() <= 0

    def __gt__(self, other):
        return (self - QuadScalar.coerce(other)).sign() > 0

    def __ge__(self, other):
        return (self - QuadScalar.coerce(other)).sign() >= 0

    def abs(self) -> "QuadScalar":
        return -self if self.sign() < 0 else self

    # -- conversions ----------------------------------------------------------

    def to_float(self) -> float:
        """Binary64 mirror; the exact value is authoritative."""
        out = float(self.a)
        if self.b:
            out += float(self.b) * math.sqrt(self.D)
        return out

    def to_json(self):
        if self.b == 0:
            return format_rational(self.a)
        return {"a": format_rational(self.a), "b": format_rational(self.b), "sqrt": self.D}

    @classmethod
    def from_json(cls, obj, D: int | None = None) -> "QuadScalar":
        """Parse the problem-file scalar syntax (bit-exact round trip)."""
        if isinstance(obj, dict):
            try:
                a = parse_rational(obj["a"])
                b = parse_rational(obj["b"])
                sqrt = obj["sqrt"]
            except KeyError as exc:
                raise ParseError(f"scalar object missing field {exc}") from None
            if not isinstance(sqrt, int):
                raise ParseError(f"sqrt field must be an integer, got {sqrt!r}")
            if D is not None and sqrt != D and b != 0:
                raise ParseError(f"scalar uses sqrt({sqrt}) but problem declares sqrt({D})")
            try:
                return cls(a, b, sqrt)
            except ValueError as exc:
                raise ParseError(str(exc)) from None
        return cls(parse_rational(obj))

    def __repr__(self):
        if self.b == 0:
            return f"QuadScalar({self.a})"
        return f"QuadScalar({self.a}, {self.b}, sqrt={self.D})"

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        return f"{self.a}+{self.b}*sqrt({self.D})"


def scalar_arith(a: QuadScalar, b: QuadScalar, op: str) -> QuadScalar:
    """Named-operation wrapper over the operator protocol.

    ``op`` is one of ``add``, ``sub``, ``mul``, ``div``; division by zero and
    mismatched sqrt domains raise.
    """
    a, b = QuadScalar.coerce(a), QuadScalar.coerce(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown op {op!r}")


def _fraction_sqrt(x: Fraction) -> Fraction | None:
    """Exact square root of a positive rational, or None."""
    if x <= 0:
        return None
    num_s = math.isqrt(x.numerator)
    if num_s * num_s != x.numerator:
        return None
    den_s = math.isqrt(x.denominator)
    if den_s * den_s != x.denominator:
        return None
    return Fraction(num_s, den_s)


_SMALL_PRIMES = (2, 3, 5, 7, 11, 13)


def _reduce_tag(rho: Fraction) -> tuple[Fraction, Fraction]:
    """Cheaply write ``sqrt(rho) = mult * sqrt(tag)`` with a smaller tag.

    Pulls out the full square part when ``rho`` is a perfect square and strips
    small prime squares; tags are canonical only up to square ratios, which is
    what the term-merging in :class:`RootSum` works with.  No factorization of
    large integers ever happens here.
    """
    if rho <= 0:
        raise ValueError("root tags must be positive")
    full = _fraction_sqrt(rho)
    if full is not None:
        return full, Fraction(1)
    num, den = rho.numerator, rho.denominator
    mult_num, mult_den = 1, 1
    for p in _SMALL_PRIMES:
        p2 = p * p
        while num % p2 == 0:
            num //= p2
            mult_num *= p
        while den % p2 == 0:
            den //= p2
            mult_den *= p
    # sqrt(num/den) = sqrt(num*den)/den
    return Fraction(mult_num, mult_den * den), Fraction(num * den)


class RootSum:
    """Finite formal sum ``sum(c_t * sqrt(t))`` over positive rational tags.

    Tags are kept pairwise inequivalent: whenever two tags have a rational
    square ratio the terms are merged, so a value is zero iff the dict is
    empty.  (Square roots of rationals with non-square ratios are linearly
    independent over the rationals.)
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        clean: dict[Fraction, Fraction] = {}
        for t, c in (terms or {}).items():
            _merge_term(clean, Fraction(t), _coerce_fraction(c))
        self.terms = clean

    @classmethod
    def zero(cls) -> "RootSum":
        return cls()

    @classmethod
    def from_quadscalar(cls, x: QuadScalar) -> "RootSum":
        terms: dict[Fraction, Fraction] = {}
        if x.a:
            terms[Fraction(1)] = x.a
        if x.b:
            terms[Fraction(x.D)] = x.b
        return cls(terms)

    @classmethod
    def from_root(cls, coeff, rho) -> "RootSum":
        """``coeff * sqrt(rho)`` for a positive rational ``rho``."""
        q = QuadScalar.coerce(coeff)
        rho = Fraction(rho)
        terms: dict[Fraction, Fraction] = {}
        if q.a:
            _merge_term(terms, rho, q.a)
        if q.b:
            _merge_term(terms, rho * q.D, q.b)
        out = cls.__new__(cls)
        out.terms = terms
        return out

    @classmethod
    def coerce(cls, x) -> "RootSum":
        if isinstance(x, RootSum):
            return x
        return cls.from_quadscalar(QuadScalar.coerce(x))

    def __add__(self, other):
        other = RootSum.coerce(other)
        terms = dict(self.terms)
        for t, c in other.terms.items():
            _merge_term(terms, t, c)
        out = RootSum.__new__(RootSum)
        out.terms = terms
        return out

    __radd__ = __add__

    def __neg__(self):
        out = RootSum.__new__(RootSum)
        out.terms = {t: -c for t, c in self.terms.items()}
        return out

    def __sub__(self, other):
        return self + (-RootSum.coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = RootSum.coerce(other)
        terms: dict[Fraction, Fraction] = {}
        for t1, c1 in self.terms.items():
            for t2, c2 in other.terms.items():
                _merge_term(terms, t1 * t2, c1 * c2)
        out = RootSum.__new__(RootSum)
        out.terms = terms
        return out

    __rmul__ = __mul__

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, QuadScalar)):
            other = RootSum.coerce(other)
        if not isinstance(other, RootSum):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None  # equal values may carry different (square-equivalent) tags

    def as_quadscalar(self, D: int | None = None) -> QuadScalar:
        """Convert back when the value lies in Q(sqrt(D)); raise otherwise."""
        a = Fraction(0)
        b = Fraction(0)
        for t, c in self.terms.items():
            s = _fraction_sqrt(t)
            if s is not None:
                a += c * s
                continue
            if D is not None:
                s = _fraction_sqrt(t / D)
                if s is not None:
                    b += c * s
                    continue
            raise DomainMismatchError(f"value {self} does not lie in Q(sqrt({D}))")
        return QuadScalar(a, b, D if b else None)

    def single_root(self) -> tuple[QuadScalar, int]:
        """Express the value as ``q * sqrt(tag)`` with a squarefree integer tag.

        Accepts 0, one term, or two terms whose tag ratio has squarefree part
        D (then ``q`` lives in Q(sqrt(D))).  Raises otherwise.
        """
        if not self.terms:
            return QuadScalar.zero(), 1
        items = sorted(self.terms.items())
        if len(items) == 1:
            (t, c), = items
            mult, tag = normalize_root(t)
            return QuadScalar(c * mult), tag
        if len(items) == 2:
            (t1, c1), (t2, c2) = items
            m1, f1 = normalize_root(t1)
            m2, f2 = normalize_root(t2)
            g = math.gcd(f1, f2)
            D = (f1 // g) * (f2 // g)
            if D >= 2:
                # beta*sqrt(D)*sqrt(f1) must give the sqrt(f2) term:
                # D*f1/f2 = (f1/g)^2 is always a perfect square here
                ratio = _fraction_sqrt(Fraction(D * f1, f2))
                if ratio is not None:
                    return QuadScalar(c1 * m1, c2 * m2 / ratio, D), f1
        raise DomainMismatchError(f"value {self} is not a single scaled root")

    def to_float(self) -> float:
        return sum(float(c) * math.sqrt(float(t)) for t, c in self.terms.items())

    def __repr__(self):
        if not self.terms:
            return "RootSum(0)"
        bits = [f"{c}*sqrt({t})" if t != 1 else f"{c}"
                for t, c in sorted(self.terms.items())]
        return "RootSum(" + " + ".join(bits) + ")"


def _merge_term(terms: dict, rho: Fraction, coeff: Fraction):
    if not coeff:
        return
    mult, tag = _reduce_tag(rho)
    coeff = coeff * mult
    for t in terms:
        ratio = _fraction_sqrt(tag / t)
        if ratio is not None:
            new = terms[t] + coeff * ratio
            if new:
                terms[t] = new
            else:
                del terms[t]
            return
    terms[tag] = coeff
