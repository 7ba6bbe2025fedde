"""Quadratic forms, linear maps, signatures, and the density hypotheses.

Conventions.  A form is ``Q(x) = x.T @ gram @ x`` with a symmetric gram, so
an off-diagonal coefficient ``c * x_i * x_j`` enters the gram as ``c/2`` in
both symmetric slots.  A linear map is a full-rank ``s x d`` matrix of rows.

The hypothesis checks implemented by :func:`check_conditions` are, for a
nondegenerate rational form ``Q`` and a map ``M`` over Q(sqrt(D)):

1. ``d > 2s`` and ``rank(Q | ker M) > 2``;
2. ``Q | ker M`` indefinite;
3. no nonzero rational covector lies in the real row span of ``M``.

Check 3 is decided exactly: a rational covector lies in the row span iff it
annihilates a kernel basis of ``M``, i.e. iff it kills both the rational part
and the sqrt(D) part of every kernel basis vector, so condition 3 holds iff
the stacked rational matrix built from those two parts has trivial kernel.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import DimensionError, HypothesisViolation
from .matrices import QMat, diagonalizing_congruence
from .scalars import QuadScalar


class QuadraticForm:
    """Symmetric exact gram matrix wrapper."""

    __slots__ = ("gram",)

    def __init__(self, gram: QMat):
        if not gram.is_square:
            raise DimensionError("gram must be square")
        if not gram.is_symmetric():
            raise DimensionError("gram must be symmetric")
        self.gram = gram

    @classmethod
    def from_rows(cls, rows) -> "QuadraticForm":
        return cls(QMat(rows))

    @classmethod
    def diagonal(cls, entries) -> "QuadraticForm":
        return cls(QMat.diagonal(entries))

    @property
    def dim(self) -> int:
        return self.gram.nrows

    def value(self, x) -> QuadScalar:
        v = self.gram.matvec(x)
        acc = QuadScalar.zero()
        for xi, vi in zip(x, v):
            xi = QuadScalar.coerce(xi)
            if xi and vi:
                acc = acc + xi * vi
        return acc

    def is_nondegenerate(self) -> bool:
        return bool(self.gram.det())

    def is_rational(self) -> bool:
        return all(x.is_rational for row in self.gram.rows for x in row)

    def to_float(self):
        return self.gram.to_float()

    def __eq__(self, other):
        if not isinstance(other, QuadraticForm):
            return NotImplemented
        return self.gram == other.gram

    def __hash__(self):
        return hash(self.gram)

    def __repr__(self):
        return f"QuadraticForm({self.gram!r})"


class LinearMap:
    """``s x d`` exact matrix of linear forms (rows), full rank over the reals."""

    __slots__ = ("rows",)

    def __init__(self, rows: QMat):
        self.rows = rows

    @classmethod
    def from_rows(cls, rows) -> "LinearMap":
        return cls(QMat(rows))

    @property
    def s(self) -> int:
        return self.rows.nrows

    @property
    def d(self) -> int:
        return self.rows.ncols

    def value(self, x) -> list[QuadScalar]:
        return self.rows.matvec(x)

    def has_full_rank(self) -> bool:
        return self.rows.rank() == self.s

    def to_float(self):
        return self.rows.to_float()

    def __eq__(self, other):
        if not isinstance(other, LinearMap):
            return NotImplemented
        return self.rows == other.rows

    def __repr__(self):
        return f"LinearMap({self.rows!r})"


@dataclass(frozen=True)
class Signature:
    p: int
    q: int

    @property
    def rank(self) -> int:
        return self.p + self.q

    def is_indefinite(self) -> bool:
        return self.p >= 1 and self.q >= 1

    def astuple(self) -> tuple[int, int]:
        return (self.p, self.q)


def signature(Q: QuadraticForm) -> Signature:
    """Counts of positive and negative squares in a real diagonalization.

    Computed exactly by symmetric congruence elimination over Q(sqrt(D));
    an all-zero remaining diagonal with a surviving off-diagonal entry is a
    hyperbolic block and contributes (1, 1).  Degenerate forms are fine and
    simply report a smaller rank.
    """
    _, diag = diagonalizing_congruence(Q.gram)
    p = sum(1 for x in diag if x.sign() > 0)
    q = sum(1 for x in diag if x.sign() < 0)
    return Signature(p, q)


def kernel_basis(M: LinearMap) -> QMat:
    """Columns form an exact basis of ``ker(M)``; errors on rank deficiency."""
    ns = M.rows.nullspace()
    if ns.ncols != M.d - M.s:
        raise HypothesisViolation("rank(M) = s", f"kernel has dimension {ns.ncols}")
    return ns


def restrict(Q: QuadraticForm, basis: QMat) -> QuadraticForm:
    """Form restricted to the span of the basis columns: ``B.T @ gram @ B``."""
    if basis.nrows != Q.dim:
        raise DimensionError("basis rows must match the form dimension")
    if basis.rank() != basis.ncols:
        raise HypothesisViolation("independent basis columns")
    return QuadraticForm(basis.T @ Q.gram @ basis)


@dataclass(frozen=True)
class ConditionReport:
    """Evidence for each of the three density hypotheses."""

    d: int
    s: int
    dim_ok: bool
    signature_q: Signature
    restricted_signature: Signature
    rank_restricted: int
    rank_ok: bool
    indefinite_restricted: bool
    irrationality_ok: bool

    @property
    def overall(self) -> bool:
        return (self.dim_ok and self.rank_ok and self.indefinite_restricted
                and self.irrationality_ok)

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "s": self.s,
            "dim_ok": self.dim_ok,
            "signature": list(self.signature_q.astuple()),
            "restricted_signature": list(self.restricted_signature.astuple()),
            "rank_restricted": self.rank_restricted,
            "rank_ok": self.rank_ok,
            "indefinite_restricted": self.indefinite_restricted,
            "irrationality_ok": self.irrationality_ok,
            "overall": self.overall,
        }

    def lines(self) -> list[str]:
        yes = lambda b: "ok" if b else "FAIL"
        return [
            f"condition 1a (d > 2s): d={self.d}, s={self.s} -> {yes(self.dim_ok)}",
            f"condition 1b (rank(Q|ker M) > 2): rank={self.rank_restricted} -> {yes(self.rank_ok)}",
            f"condition 2  (Q|ker M indefinite): signature={self.restricted_signature.astuple()}"
            f" -> {yes(self.indefinite_restricted)}",
            f"condition 3  (no rational form in span M): -> {yes(self.irrationality_ok)}",
            f"overall: {'PASS' if self.overall else 'FAIL'}",
        ]


def _rational_parts(A: QMat) -> tuple[QMat, QMat]:
    ra = A.map(lambda x: QuadScalar(x.a))
    rb = A.map(lambda x: QuadScalar(x.b))
    return ra, rb


def irrationality_holds(M: LinearMap) -> bool:
    """Exact decision of hypothesis 3 via the kernel-annihilation criterion."""
    K = kernel_basis(M)
    ka, kb = _rational_parts(K)
    stacked = QMat(list(ka.T.rows) + list(kb.T.rows), ncols=M.d)
    return stacked.nullspace().ncols == 0


def check_conditions(Q: QuadraticForm, M: LinearMap) -> ConditionReport:
    """Evaluate all hypotheses; computable on failing inputs too."""
    if Q.dim != M.d:
        raise DimensionError("form and map dimensions differ")
    d, s = Q.dim, M.s
    sig_q = signature(Q)
    K = kernel_basis(M)
    sig_r = signature(restrict(Q, K))
    return ConditionReport(
        d=d,
        s=s,
        dim_ok=d > 2 * s,
        signature_q=sig_q,
        restricted_signature=sig_r,
        rank_restricted=sig_r.rank,
        rank_ok=sig_r.rank > 2,
        indefinite_restricted=sig_r.is_indefinite(),
        irrationality_ok=irrationality_holds(M),
    )
