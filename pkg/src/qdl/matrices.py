"""Exact matrices over Q(sqrt(D)) and scaled matrices with root diagonals.

:class:`QMat` is a dense immutable matrix of :class:`QuadScalar` entries
with field-exact Gaussian elimination (rank, inverse, null space, rref).

:class:`ScaledMatrix` represents ``diag(sqrt(r_i)) @ core @ diag(sqrt(c_j))``
with positive rational ``r_i, c_j`` and a QMat core.  Products that involve
the root diagonals are evaluated in the :class:`RootSum` ring, so every
identity checked here is exact with zero tolerance.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .errors import DimensionError, NotRepresentableError, ParseError
from .scalars import (
    QuadScalar,
    Rational,
    RootSum,
    format_rational,
    parse_rational,
)

_ZERO = QuadScalar.zero()
_ONE = QuadScalar.one()


def _as_scalar(x) -> QuadScalar:
    return x if isinstance(x, QuadScalar) else QuadScalar.coerce(x)


class QMat:
    """Immutable dense matrix of QuadScalar entries."""

    __slots__ = ("rows", "nrows", "ncols")

    def __init__(self, rows, ncols: int | None = None):
        mat = tuple(tuple(_as_scalar(x) for x in row) for row in rows)
        self.nrows = len(mat)
        if mat:
            self.ncols = len(mat[0])
            if any(len(r) != self.ncols for r in mat):
                raise DimensionError("ragged rows")
        else:
            self.ncols = 0 if ncols is None else ncols
        if ncols is not None and self.nrows and ncols != self.ncols:
            raise DimensionError("ncols does not match rows")
        self.rows = mat

    # -- constructors ---------------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "QMat":
        return cls([[_ONE if i == j else _ZERO for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, m: int, n: int) -> "QMat":
        return cls([[_ZERO] * n for _ in range(m)], ncols=n)

    @classmethod
    def diagonal(cls, entries) -> "QMat":
        entries = [_as_scalar(e) for e in entries]
        n = len(entries)
        return cls([[entries[i] if i == j else _ZERO for j in range(n)] for i in range(n)])

    @classmethod
    def from_columns(cls, cols, nrows: int | None = None) -> "QMat":
        cols = [list(c) for c in cols]
        if not cols:
            return cls([], ncols=0) if nrows is None else cls([[] for _ in range(nrows)], ncols=0)
        m = len(cols[0])
        return cls([[cols[j][i] for j in range(len(cols))] for i in range(m)])

    @classmethod
    def column(cls, entries) -> "QMat":
        return cls([[e] for e in entries])

    # -- shape and access -------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def is_square(self) -> bool:
        return self.nrows == self.ncols

    def __getitem__(self, key):
        i, j = key
        return self.rows[i][j]

    def row(self, i: int):
        return self.rows[i]

    def col(self, j: int):
        return tuple(r[j] for r in self.rows)

    def submatrix(self, row_idx, col_idx) -> "QMat":
        row_idx, col_idx = list(row_idx), list(col_idx)
        return QMat([[self.rows[i][j] for j in col_idx] for i in row_idx], ncols=len(col_idx))

    def tolists(self) -> list[list[QuadScalar]]:
        return [list(r) for r in self.rows]

    # -- algebra ----------------------------------------------------------------

    @property
    def T(self) -> "QMat":
        return QMat([[self.rows[i][j] for i in range(self.nrows)] for j in range(self.ncols)],
                    ncols=self.nrows)

    def __add__(self, other: "QMat") -> "QMat":
        if self.shape != other.shape:
            raise DimensionError(f"add {self.shape} vs {other.shape}")
        return QMat([[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)],
                    ncols=self.ncols)

    def __sub__(self, other: "QMat") -> "QMat":
        return self + (-other)

    def __neg__(self) -> "QMat":
        return QMat([[-x for x in r] for r in self.rows], ncols=self.ncols)

    def __mul__(self, scalar) -> "QMat":
        s = _as_scalar(scalar)
        return QMat([[s * x for x in r] for r in self.rows], ncols=self.ncols)

    __rmul__ = __mul__

    def __matmul__(self, other: "QMat") -> "QMat":
        if self.ncols != other.nrows:
            raise DimensionError(f"matmul {self.shape} @ {other.shape}")
        orows = other.rows
        out = [[_ZERO] * other.ncols for _ in range(self.nrows)]
        for i, arow in enumerate(self.rows):
            orow = out[i]
            for k, a in enumerate(arow):
                if not a:
                    continue  # zero-skip keeps sparse products cheap
                brow = orows[k]
                for j, b in enumerate(brow):
                    if b:
                        orow[j] = orow[j] + a * b
        return QMat(out, ncols=other.ncols)

    def matvec(self, vec):
        if self.ncols != len(vec):
            raise DimensionError("matvec size mismatch")
        vec = [_as_scalar(v) for v in vec]
        out = []
        for rowvals in self.rows:
            acc = _ZERO
            for a, v in zip(rowvals, vec):
                if a and v:
                    acc = acc + a * v
            out.append(acc)
        return out

    def __eq__(self, other):
        if not isinstance(other, QMat):
            return NotImplemented
        return self.shape == other.shape and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def is_zero(self) -> bool:
        return all(not x for r in self.rows for x in r)

    def is_symmetric(self) -> bool:
        if not self.is_square:
            return False
        return all(self.rows[i][j] == self.rows[j][i]
                   for i in range(self.nrows) for j in range(i))

    def map(self, fn) -> "QMat":
        return QMat([[fn(x) for x in r] for r in self.rows], ncols=self.ncols)

    # -- elimination -----------------------------------------------------------

    def rref(self) -> tuple["QMat", list[int]]:
        """Reduced row echelon form over the exact field; returns (R, pivot cols)."""
        rows = self.tolists()
        m, n = self.nrows, self.ncols
        pivots: list[int] = []
        r = 0
        for c in range(n):
            pivot = next((i for i in range(r, m) if rows[i][c]), None)
            if pivot is None:
                continue
            rows[r], rows[pivot] = rows[pivot], rows[r]
            inv = rows[r][c].inverse()
            rows[r] = [inv * x for x in rows[r]]
            for i in range(m):
                if i != r and rows[i][c]:
                    f = rows[i][c]
                    rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
            pivots.append(c)
            r += 1
            if r == m:
                break
        return QMat(rows, ncols=n), pivots

    def rank(self) -> int:
        return len(self.rref()[1])

    def nullspace(self) -> "QMat":
        """Columns form a basis of the right kernel (exact)."""
        R, pivots = self.rref()
        free = [j for j in range(self.ncols) if j not in pivots]
        cols = []
        for j in free:
            v = [_ZERO] * self.ncols
            v[j] = _ONE
            for r, c in enumerate(pivots):
                v[c] = -R.rows[r][j]
            cols.append(v)
        return QMat.from_columns(cols, nrows=self.ncols)

    def inv(self) -> "QMat":
        if not self.is_square:
            raise DimensionError("inverse of non-square matrix")
        n = self.nrows
        aug = [list(r) + [(_ONE if i == j else _ZERO) for j in range(n)]
               for i, r in enumerate(self.rows)]
        R, pivots = QMat(aug).rref()
        if pivots != list(range(n)):
            raise ZeroDivisionError("matrix is singular")
        return QMat([r[n:] for r in R.rows], ncols=n)

    def det(self) -> QuadScalar:
        if not self.is_square:
            raise DimensionError("determinant of non-square matrix")
        rows = self.tolists()
        n = self.nrows
        det = _ONE
        for c in range(n):
            pivot = next((i for i in range(c, n) if rows[i][c]), None)
            if pivot is None:
                return _ZERO
            if pivot != c:
                rows[c], rows[pivot] = rows[pivot], rows[c]
                det = -det
            det = det * rows[c][c]
            inv = rows[c][c].inverse()
            for i in range(c + 1, n):
                if rows[i][c]:
                    f = rows[i][c] * inv
                    rows[i] = [x - f * y for x, y in zip(rows[i], rows[c])]
        return det

    def solve(self, rhs: "QMat") -> "QMat":
        """Solve ``self @ X = rhs`` exactly (unique solution assumed)."""
        if self.nrows != rhs.nrows:
            raise DimensionError("solve shape mismatch")
        aug = [list(a) + list(b) for a, b in zip(self.rows, rhs.rows)]
        R, pivots = QMat(aug).rref()
        if pivots[: self.ncols] != list(range(self.ncols)):
            raise ZeroDivisionError("system is singular or underdetermined")
        for r in R.rows[self.ncols:]:
            if any(r[self.ncols:]):
                raise ZeroDivisionError("inconsistent system")
        return QMat([list(R.rows[i][self.ncols:]) for i in range(self.ncols)],
                    ncols=rhs.ncols)

    def column_span_contains(self, vec) -> bool:
        ext = QMat.from_columns([list(c) for c in self.T.rows] + [list(vec)],
                                nrows=self.nrows)
        return ext.rank() == self.rank()

    # -- conversions -------------------------------------------------------------

    def to_float(self) -> np.ndarray:
        return np.array([[x.to_float() for x in r] for r in self.rows], dtype=float).reshape(
            self.nrows, self.ncols)

    def to_json(self):
        return [[x.to_json() for x in r] for r in self.rows]

    @classmethod
    def from_json(cls, obj, D: int | None = None) -> "QMat":
        if not isinstance(obj, list):
            raise ParseError("matrix must be a list of rows")
        return cls([[QuadScalar.from_json(x, D) for x in row] for row in obj])

    def __repr__(self):
        return f"QMat({[[str(x) for x in r] for r in self.rows]})"


def hstack(a: QMat, b: QMat) -> QMat:
    if a.nrows != b.nrows:
        raise DimensionError("hstack row mismatch")
    return QMat([list(ra) + list(rb) for ra, rb in zip(a.rows, b.rows)],
                ncols=a.ncols + b.ncols)


def vstack(a: QMat, b: QMat) -> QMat:
    if a.ncols != b.ncols:
        raise DimensionError("vstack column mismatch")
    return QMat(list(a.rows) + list(b.rows), ncols=a.ncols)


def block(grid) -> QMat:
    """Assemble a block matrix from a grid of QMat pieces (sizes may be 0)."""
    out_rows: list[QMat] = []
    for row in grid:
        acc = row[0]
        for piece in row[1:]:
            acc = hstack(acc, piece)
        out_rows.append(acc)
    acc = out_rows[0]
    for piece in out_rows[1:]:
        acc = vstack(acc, piece)
    return acc


def permutation_matrix(perm) -> QMat:
    """Matrix ``P`` with ``P[i, perm[i]] = 1`` (so ``(P x)_i = x_perm[i]``)."""
    n = len(perm)
    rows = [[_ONE if j == perm[i] else _ZERO for j in range(n)] for i in range(n)]
    return QMat(rows, ncols=n)


class ScaledMatrix:
    """``diag(sqrt(left)) @ core @ diag(sqrt(right))`` with rational roots."""

    __slots__ = ("left_roots", "core", "right_roots")

    def __init__(self, left_roots, core: QMat, right_roots):
        self.core = core
        self.left_roots = tuple(Fraction(r) for r in left_roots)
        self.right_roots = tuple(Fraction(r) for r in right_roots)
        if len(self.left_roots) != core.nrows or len(self.right_roots) != core.ncols:
            raise DimensionError("root diagonal sizes must match the core")
        if any(r <= 0 for r in self.left_roots + self.right_roots):
            raise ValueError("root scales must be positive rationals")

    @classmethod
    def from_core(cls, core: QMat) -> "ScaledMatrix":
        return cls([Fraction(1)] * core.nrows, core, [Fraction(1)] * core.ncols)

    @classmethod
    def identity(cls, n: int) -> "ScaledMatrix":
        return cls.from_core(QMat.identity(n))

    @property
    def shape(self) -> tuple[int, int]:
        return self.core.shape

    @property
    def is_trivially_scaled(self) -> bool:
        return all(r == 1 for r in self.left_roots + self.right_roots)

    @property
    def T(self) -> "ScaledMatrix":
        return ScaledMatrix(self.right_roots, self.core.T, self.left_roots)

    def inverse(self) -> "ScaledMatrix":
        inv_core = self.core.inv()
        return ScaledMatrix([1 / r for r in self.right_roots], inv_core,
                            [1 / r for r in self.left_roots])

    def row_block(self, i0: int, i1: int) -> "ScaledMatrix":
        return ScaledMatrix(self.left_roots[i0:i1],
                            QMat(self.core.rows[i0:i1], ncols=self.core.ncols),
                            self.right_roots)

    def entry(self, i: int, j: int) -> RootSum:
        rho = self.left_roots[i] * self.right_roots[j]
        return RootSum.from_root(self.core[i, j], rho) if self.core[i, j] else RootSum.zero()

    def to_rootsum_rows(self) -> list[list[RootSum]]:
        return [[self.entry(i, j) for j in range(self.core.ncols)]
                for i in range(self.core.nrows)]

    def apply(self, vec) -> list[RootSum]:
        """Exact image of a QuadScalar vector."""
        if len(vec) != self.core.ncols:
            raise DimensionError("apply size mismatch")
        vec = [_as_scalar(v) for v in vec]
        out = []
        for i in range(self.core.nrows):
            acc = RootSum.zero()
            for j, v in enumerate(vec):
                c = self.core[i, j]
                if c and v:
                    acc = acc + RootSum.from_root(c * v, self.left_roots[i] * self.right_roots[j])
            out.append(acc)
        return out

    def _is_monomial(self) -> bool:
        seen_cols = set()
        for r in self.core.rows:
            nz = [j for j, x in enumerate(r) if x]
            if len(nz) != 1 or nz[0] in seen_cols:
                return False
            seen_cols.add(nz[0])
        return self.core.is_square and len(seen_cols) == self.core.nrows

    def compose(self, other: "ScaledMatrix") -> "ScaledMatrix":
        """Product ``self @ other`` when it stays representable.

        Representable cases: the middle scales ``right_i * left_i`` are all
        perfect squares of rationals, or one of the cores is monomial so its
        scales commute through.  Raises :class:`NotRepresentableError` otherwise.
        """
        if self.core.ncols != other.core.nrows:
            raise DimensionError("compose shape mismatch")
        mids = [r * l for r, l in zip(self.right_roots, other.left_roots)]
        sq = []
        for rho in mids:
            num_s = _isqrt_exact(rho.numerator)
            den_s = _isqrt_exact(rho.denominator)
            if num_s is None or den_s is None:
                sq = None
                break
            sq.append(Fraction(num_s, den_s))
        if sq is not None:
            mid = QMat.diagonal([QuadScalar(s) for s in sq])
            return ScaledMatrix(self.left_roots, self.core @ mid @ other.core,
                                other.right_roots)
        if self._is_monomial():
            # push self's right scales and other's left scales through the monomial
            perm = {}
            for i, r in enumerate(self.core.rows):
                j = next(k for k, x in enumerate(r) if x)
                perm[i] = j
            new_left = [self.left_roots[i] * self.right_roots[perm[i]] * other.left_roots[perm[i]]
                        for i in range(self.core.nrows)]
            return ScaledMatrix(new_left, self.core @ other.core, other.right_roots)
        if other._is_monomial():
            perm = {}
            for i, r in enumerate(other.core.rows):
                j = next(k for k, x in enumerate(r) if x)
                perm[i] = j
            new_right = [Fraction(1)] * other.core.ncols
            for i in range(other.core.nrows):
                new_right[perm[i]] = other.right_roots[perm[i]] * other.left_roots[i] * self.right_roots[i]
            return ScaledMatrix(self.left_roots, self.core @ other.core, new_right)
        raise NotRepresentableError("product of scaled matrices leaves the representable class")

    def to_float(self) -> np.ndarray:
        import math
        left = np.array([math.sqrt(float(r)) for r in self.left_roots])
        right = np.array([math.sqrt(float(r)) for r in self.right_roots])
        return left[:, None] * self.core.to_float() * right[None, :]

    def to_json(self):
        return {
            "left_roots": [format_rational(r) for r in self.left_roots],
            "core": self.core.to_json(),
            "right_roots": [format_rational(r) for r in self.right_roots],
        }

    @classmethod
    def from_json(cls, obj, D: int | None = None) -> "ScaledMatrix":
        try:
            left = [parse_rational(r) for r in obj["left_roots"]]
            core = QMat.from_json(obj["core"], D)
            right = [parse_rational(r) for r in obj["right_roots"]]
        except (KeyError, TypeError) as exc:
            raise ParseError(f"bad scaled matrix object: {exc}") from None
        return cls(left, core, right)

    def __repr__(self):
        return f"ScaledMatrix(left={self.left_roots}, core={self.core!r}, right={self.right_roots})"


def _isqrt_exact(n: int) -> int | None:
    import math
    if n < 0:
        return None
    s = math.isqrt(n)
    return s if s * s == n else None


# -- RootSum matrix helpers ------------------------------------------------------


def rs_rows_from_qmat(A: QMat) -> list[list[RootSum]]:
    return [[RootSum.from_quadscalar(x) for x in r] for r in A.rows]


def rs_matmul(A: list[list[RootSum]], B: list[list[RootSum]]) -> list[list[RootSum]]:
    n, k = len(A), len(B)
    if n and len(A[0]) != k:
        raise DimensionError("rs_matmul shape mismatch")
    m = len(B[0]) if k else 0
    out = [[RootSum.zero()] * m for _ in range(n)]
    for i in range(n):
        arow = A[i]
        orow = out[i]
        for t in range(k):
            a = arow[t]
            if a.is_zero():
                continue
            brow = B[t]
            for j in range(m):
                b = brow[j]
                if not b.is_zero():
                    orow[j] = orow[j] + a * b
    return out


def rs_transpose(A: list[list[RootSum]]) -> list[list[RootSum]]:
    if not A:
        return []
    return [[A[i][j] for i in range(len(A))] for j in range(len(A[0]))]


def rs_equal(A: list[list[RootSum]], B: list[list[RootSum]]) -> bool:
    if len(A) != len(B):
        return False
    for ra, rb in zip(A, B):
        if len(ra) != len(rb) or any(a != b for a, b in zip(ra, rb)):
            return False
    return True


def scaled_product_rows(*factors) -> list[list[RootSum]]:
    """Exact RootSum product of a chain of QMat / ScaledMatrix factors."""
    rows = None
    for f in factors:
        if isinstance(f, QMat):
            cur = rs_rows_from_qmat(f)
        elif isinstance(f, ScaledMatrix):
            cur = f.to_rootsum_rows()
        else:
            cur = f
        rows = cur if rows is None else rs_matmul(rows, cur)
    return rows


def congruence_check(A: QMat, G: ScaledMatrix, B: QMat) -> bool:
    """Exact test of ``G.T @ B @ G == A`` in the RootSum ring."""
    if not (A.is_square and B.is_square):
        raise DimensionError("congruence_check needs square gram matrices")
    if G.shape != (B.nrows, A.nrows):
        raise DimensionError(
            f"congruence_check shapes A={A.shape}, G={G.shape}, B={B.shape}")
    g = G.to_rootsum_rows()
    prod = rs_matmul(rs_matmul(rs_transpose(g), rs_rows_from_qmat(B)), g)
    return rs_equal(prod, rs_rows_from_qmat(A))


def scaled_apply(M: ScaledMatrix, vec) -> list[tuple[QuadScalar, int]]:
    """Apply a scaled matrix to an exact vector.

    Each output entry is returned as ``(q, tag)`` with value ``q * sqrt(tag)``
    and ``tag`` a squarefree positive integer, so squaring any entry lands
    back in Q(sqrt(D)).
    """
    return [rs.single_root() for rs in M.apply(vec)]


# -- symmetric congruence diagonalization ----------------------------------------


def diagonalizing_congruence(A: QMat) -> tuple[QMat, list[QuadScalar]]:
    """Find invertible ``S`` with ``S.T @ A @ S`` diagonal; return (S, diagonal).

    Pivots in index order; a zero diagonal entry with a nonzero partner is
    repaired by the congruence ``x_j -> x_j + x_k`` (splitting hyperbolic
    blocks), so degenerate inputs are fine and produce zero diagonal entries.
    """
    if not A.is_symmetric():
        raise DimensionError("diagonalizing_congruence needs a symmetric matrix")
    n = A.nrows
    B = A.tolists()
    S = QMat.identity(n).tolists()

    def right_mult_elem(j: int, k: int, f: QuadScalar):
        # S <- S @ (I + f * E_kj), B <- T^T B T with T = I + f*E_kj  (x_k += f x_j)
        for i in range(n):
            if S[i][k]:
                S[i][j] = S[i][j] + f * S[i][k]
        for i in range(n):
            if B[i][k]:
                B[i][j] = B[i][j] + f * B[i][k]
        for i in range(n):
            if B[k][i]:
                B[j][i] = B[j][i] + f * B[k][i]

    def swap(j: int, k: int):
        for i in range(n):
            S[i][j], S[i][k] = S[i][k], S[i][j]
        for i in range(n):
            B[i][j], B[i][k] = B[i][k], B[i][j]
        B[j], B[k] = B[k], B[j]

    for k in range(n):
        if not B[k][k]:
            cand = next((j for j in range(k + 1, n) if B[j][j]), None)
            if cand is not None and B[k][cand]:
                swap(k, cand)
            else:
                off = next((j for j in range(k + 1, n) if B[k][j]), None)
                if off is None:
                    continue
                if B[off][off]:
                    swap(k, off)
                else:
                    right_mult_elem(k, off, _ONE)  # B_kk becomes 2*B[k][off] != 0
        piv = B[k][k]
        if not piv:
            continue
        inv = piv.inverse()
        for j in range(k + 1, n):
            if B[k][j]:
                right_mult_elem(j, k, -(B[k][j] * inv))
    diag = [B[i][i] for i in range(n)]
    Smat = QMat(S, ncols=n)
    return Smat, diag


def rational_square_scale(mu: QuadScalar) -> QuadScalar | None:
    """Find ``c`` in the extension with ``mu * c**2`` rational, if one exists.

    For irrational ``mu = m1 + m2*sqrt(D)`` such a ``c`` exists iff the field
    norm ``m1**2 - D*m2**2`` is the square of a positive rational; then
    ``c = 1 + v*sqrt(D)`` with ``v = (-m1 + sqrt(norm)) / (m2*D)`` works.
    """
    if mu.is_rational:
        return QuadScalar.one()
    n = mu.norm()
    if n <= 0:
        return None
    num_s = _isqrt_exact(n.numerator)
    den_s = _isqrt_exact(n.denominator)
    if num_s is None or den_s is None:
        return None
    root = Fraction(num_s, den_s)
    for branch in (root, -root):
        v = (-mu.a + branch) / (mu.b * mu.D)
        c = QuadScalar(1, v, mu.D)
        if (mu * c * c).is_rational and c:
            return c
    return None


def sylvester_transform(A: QMat) -> tuple[ScaledMatrix, int, int]:
    """Invertible ``T`` (scaled) with ``T.T @ A @ T = diag(+1..+1, -1..-1)``.

    Requires nonsingular symmetric ``A``; returns ``(T, p, q)``.  Irrational
    diagonal values are first rescaled into the rationals when the field-norm
    square criterion allows; otherwise the target is not expressible with
    rational root diagonals and :class:`NotRepresentableError` is raised.
    """
    S, diag = diagonalizing_congruence(A)
    if any(not x for x in diag):
        raise ZeroDivisionError("sylvester_transform needs a nonsingular form")
    cols = [list(c) for c in S.T.rows]  # columns of S
    fixed: list[QuadScalar] = []
    for j, mu in enumerate(diag):
        c = rational_square_scale(mu)
        if c is None:
            raise NotRepresentableError(
                f"diagonal value {mu} cannot be scaled into the rationals")
        cols[j] = [c * x for x in cols[j]]
        fixed.append(mu * c * c)
    pos = [i for i, x in enumerate(fixed) if x.sign() > 0]
    neg = [i for i, x in enumerate(fixed) if x.sign() < 0]
    order = pos + neg
    core = QMat.from_columns([cols[src] for src in order], nrows=len(diag))
    right = [Fraction(1) / abs(fixed[src].a) for src in order]
    return ScaledMatrix([Fraction(1)] * len(diag), core, right), len(pos), len(neg)
