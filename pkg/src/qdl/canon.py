"""Constructive reduction of a pair (form, map) to its canonical shape.

The canonical pair on R^d with parameters ``(m, p', q', r, n)`` is::

    Q0(x) = Qmid(x_{m+1..s}) + 2*sum_{i<=m} x_i x_{s+r+n+i}
            + sum_{s<i<=s+r} x_i^2 - sum_{s+r<i<=s+r+n} x_i^2
    M0(x) = (x_1, ..., x_s)

with ``Qmid`` a nondegenerate form on the middle coordinates of signature
``(p', q')`` and ``m = d - s - rank(Q|ker M)``.  ``reduce_pair`` produces an
exactly verifiable certificate ``(g_d, g_s)`` with ``Q(x) = Q0(g_d x)`` and
``M(x) = g_s M0(g_d x)``; ``reduce_single`` specializes to one linear form,
where the target is either a pure +-1 diagonal with the form in the first or
last slot, or the hyperbolic-corner shape (case 2).

Strategy: all shears, pivots, and block mixes are performed first, exactly,
over Q(sqrt(D)); square roots enter only through the final normalization of
rational diagonal values and are carried in the certificate's root diagonals.
Irrational diagonal values are first rescaled into the rationals where the
field-norm square criterion permits (always, for rational inputs); otherwise
no certificate with rational root scales exists and a
:class:`~qdl.errors.NotRepresentableError` is raised with the witness value.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import HypothesisViolation, InvariantBreach, NotRepresentableError
from .matrices import QMat, ScaledMatrix, congruence_check, rational_square_scale, \
    rs_equal, rs_rows_from_qmat, scaled_product_rows
from .quadforms import LinearMap, QuadraticForm, Signature, kernel_basis, restrict, signature
from .scalars import QuadScalar

_ZERO = QuadScalar.zero()
_ONE = QuadScalar.one()


@dataclass(frozen=True)
class CanonicalParams:
    m: int
    p_prime: int
    q_prime: int
    r: int
    n: int
    middle_form: QuadraticForm

    @property
    def s(self) -> int:
        return self.m + self.middle_form.dim

    @property
    def d(self) -> int:
        return self.s + self.r + self.n + self.m

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "p_prime": self.p_prime,
            "q_prime": self.q_prime,
            "r": self.r,
            "n": self.n,
            "middle_form": self.middle_form.gram.to_json(),
        }

    @classmethod
    def from_json(cls, obj, D=None) -> "CanonicalParams":
        return cls(obj["m"], obj["p_prime"], obj["q_prime"], obj["r"], obj["n"],
                   QuadraticForm(QMat.from_json(obj["middle_form"], D)))


def build_canonical_gram(params: CanonicalParams) -> QMat:
    d, s, m = params.d, params.s, params.m
    rows = [[_ZERO] * d for _ in range(d)]
    mid = params.middle_form.gram
    for i in range(mid.nrows):
        for j in range(mid.ncols):
            rows[m + i][m + j] = mid[i, j]
    for i in range(m):
        rows[i][s + params.r + params.n + i] = _ONE
        rows[s + params.r + params.n + i][i] = _ONE
    for i in range(params.r):
        rows[s + i][s + i] = _ONE
    for i in range(params.n):
        rows[s + params.r + i][s + params.r + i] = -_ONE
    return QMat(rows, ncols=d)


def build_canonical_pair(params: CanonicalParams) -> tuple[QuadraticForm, LinearMap]:
    Q0 = QuadraticForm(build_canonical_gram(params))
    M0 = QMat([[(_ONE if i == j else _ZERO) for j in range(params.d)]
               for i in range(params.s)], ncols=params.d)
    return Q0, LinearMap(M0)


@dataclass(frozen=True)
class CanonicalCertificate:
    g_d: ScaledMatrix
    g_s: ScaledMatrix
    params: CanonicalParams

    def to_json(self, verified: bool | None = None) -> dict:
        out = {
            "g_d": self.g_d.to_json(),
            "g_s": self.g_s.to_json(),
            "params": self.params.to_json(),
        }
        if verified is not None:
            out["verified"] = verified
        return out


def verify_certificate(Q: QuadraticForm, M: LinearMap, cert: CanonicalCertificate) -> bool:
    """Exact check of both defining identities of the equivalence."""
    params = cert.params
    d, s = params.d, params.s
    if Q.dim != d or M.d != d or M.s != s:
        return False
    if cert.g_d.shape != (d, d) or cert.g_s.shape != (s, s):
        return False
    A0 = build_canonical_gram(params)
    if not congruence_check(Q.gram, cert.g_d, A0):
        return False
    # M0 @ g_d is the first s rows of g_d
    prod = scaled_product_rows(cert.g_s, cert.g_d.row_block(0, s))
    return rs_equal(prod, rs_rows_from_qmat(M.rows))


# -- the reduction engine ----------------------------------------------------------


class _Reduction:
    """Mutable working state; accumulates the substitution inverse exactly.

    State lives in plain nested lists; the elementary substitutions update
    rows and columns in place rather than through dense matrix products.
    """

    def __init__(self, Q: QuadraticForm, M: LinearMap):
        self.d = Q.dim
        self.s = M.s
        self.A = Q.gram.tolists()
        self.Mw = M.rows.tolists()
        self.Rinv = QMat.identity(self.d).tolists()
        self.G = QMat.identity(self.s).tolists()

    # x = T z; A <- T^T A T, rows of M compose, inverse accumulates on the left
    def subst_generic(self, T: QMat, Tinv: QMat):
        self.A = (T.T @ QMat(self.A) @ T).tolists()
        self.Mw = (QMat(self.Mw, ncols=self.d) @ T).tolists()
        self.Rinv = (Tinv @ QMat(self.Rinv)).tolists()

    def shear(self, j: int, k: int, gamma: QuadScalar):
        """Substitution x_j = z_j + gamma * z_k (column k gains gamma * column j)."""
        if not gamma:
            return
        A, d = self.A, self.d
        for i in range(d):
            x = A[i][j]
            if x:
                A[i][k] = A[i][k] + gamma * x
        rowj = A[j]
        rowk = A[k]
        for i in range(d):
            if rowj[i]:
                rowk[i] = rowk[i] + gamma * rowj[i]
        for row in self.Mw:
            if row[j]:
                row[k] = row[k] + gamma * row[j]
        rj, rk = self.Rinv[j], self.Rinv[k]
        for i in range(d):
            if rk[i]:
                rj[i] = rj[i] - gamma * rk[i]

    def scale_coord(self, j: int, c: QuadScalar):
        if c == _ONE:
            return
        cinv = c.inverse()
        for i in range(self.d):
            self.A[i][j] = self.A[i][j] * c
        self.A[j] = [x * c for x in self.A[j]]
        for row in self.Mw:
            row[j] = row[j] * c
        self.Rinv[j] = [x * cinv for x in self.Rinv[j]]

    def permute(self, mapping: dict[int, int]):
        """Relabel coordinates: old coordinate ``src`` becomes ``mapping[src]``."""
        full = [mapping.get(i, i) for i in range(self.d)]
        if all(i == v for i, v in enumerate(full)):
            return
        inv = [0] * self.d
        for src, dst in enumerate(full):
            inv[dst] = src
        self.A = [[self.A[inv[i]][inv[j]] for j in range(self.d)] for i in range(self.d)]
        self.Mw = [[row[inv[j]] for j in range(self.d)] for row in self.Mw]
        self.Rinv = [self.Rinv[inv[i]] for i in range(self.d)]

    def mix_pair(self, j1: int, j2: int, cols: QMat):
        """Substitution replacing coordinates (j1, j2) by the given 2x2 column basis."""
        T = QMat.identity(self.d).tolists()
        T[j1][j1], T[j1][j2] = cols[0, 0], cols[0, 1]
        T[j2][j1], T[j2][j2] = cols[1, 0], cols[1, 1]
        inv = cols.inv()
        Tinv = QMat.identity(self.d).tolists()
        Tinv[j1][j1], Tinv[j1][j2] = inv[0, 0], inv[0, 1]
        Tinv[j2][j1], Tinv[j2][j2] = inv[1, 0], inv[1, 1]
        self.subst_generic(QMat(T), QMat(Tinv))

    def row_op(self, E: QMat):
        self.Mw = (E @ QMat(self.Mw, ncols=self.d)).tolists()
        self.G = (E @ QMat(self.G)).tolists()


def _pin_map_rows(st: _Reduction):
    """Row-reduce M and substitute until its rows are distinct coordinates."""
    d, s = st.d, st.s
    pivots: list[int] = []
    for t in range(s):
        # clear earlier pivot coordinates from this row (row operations)
        for t2, u2 in enumerate(pivots):
            c = st.Mw[t][u2]
            if c:
                E = QMat.identity(s).tolists()
                E[t][t2] = -c
                st.row_op(QMat(E))
        u = next((j for j in range(d) if st.Mw[t][j]), None)
        if u is None:
            raise HypothesisViolation("rank(M) = s", f"row {t + 1} depends on earlier rows")
        c = st.Mw[t][u]
        if c != _ONE:
            E = QMat.identity(s).tolists()
            E[t][t] = c.inverse()
            st.row_op(QMat(E))
        # clear the pivot coordinate from later rows
        for t2 in range(t + 1, s):
            c2 = st.Mw[t2][u]
            if c2:
                E = QMat.identity(s).tolists()
                E[t2][t] = -c2
                st.row_op(QMat(E))
        # substitution making row t exactly the coordinate u
        coeffs = [st.Mw[t][j] for j in range(d)]
        T = QMat.identity(d).tolists()
        Tinv = QMat.identity(d).tolists()
        for j in range(d):
            if j != u and coeffs[j]:
                T[u][j] = -coeffs[j]
                Tinv[u][j] = coeffs[j]
        st.subst_generic(QMat(T), QMat(Tinv))
        pivots.append(u)
    # relabel so that pivot t sits at coordinate t
    mapping = {u: t for t, u in enumerate(pivots)}
    rest = sorted(set(range(d)) - set(pivots))
    for k, src in enumerate(rest):
        mapping[src] = s + k
    st.permute(mapping)


def _diagonalize_tail(st: _Reduction):
    d, s = st.d, st.s
    for k in range(s, d):
        if not st.A[k][k]:
            swap = next((j for j in range(k + 1, d) if st.A[j][j] and st.A[k][j]), None)
            if swap is not None:
                st.permute({k: swap, swap: k})
            else:
                off = next((j for j in range(k + 1, d) if st.A[k][j]), None)
                if off is None:
                    continue
                if st.A[off][off]:
                    st.permute({k: off, off: k})
                else:
                    st.shear(off, k, _ONE)  # hyperbolic block: make A_kk = 2 A_koff
        piv = st.A[k][k]
        if not piv:
            continue
        inv = piv.inverse()
        for j in range(k + 1, d):
            c = st.A[k][j]
            if c:
                st.shear(k, j, -(c * inv))  # x_k += gamma x_j clears A[k, j]


def _clear_cross_terms(st: _Reduction):
    d, s = st.d, st.s
    for j in range(s, d):
        mu = st.A[j][j]
        if not mu:
            continue
        inv = mu.inverse()
        for i in range(s):
            c = st.A[i][j]
            if c:
                st.shear(j, i, -(c * inv))


def _pair_zero_coords(st: _Reduction) -> list[int]:
    """Give each zero tail coordinate a unit cross with its own first-block slot."""
    d, s = st.d, st.s
    zeros = [j for j in range(s, d) if not st.A[j][j]]
    m = len(zeros)
    if m == 0:
        return zeros
    C = QMat([[st.A[z][i] for i in range(s)] for z in zeros], ncols=s)
    if C.rank() != m:
        raise InvariantBreach("zero tail coordinates have dependent cross rows "
                              "(form must have been degenerate)")
    R, piv = C.rref()
    Cp = C.submatrix(range(m), piv)
    X = Cp.inv()
    cols = []
    for a in range(m):
        v = [_ZERO] * s
        for row_idx, col_idx in enumerate(piv):
            v[col_idx] = X[row_idx, a]
        cols.append(v)
    null = C.nullspace()
    for b in range(null.ncols):
        cols.append(list(null.col(b)))
    g = QMat.from_columns(cols, nrows=s)
    T = QMat.identity(d).tolists()
    Tinv_g = g.inv()
    Tinv = QMat.identity(d).tolists()
    for i in range(s):
        for j in range(s):
            T[i][j] = g[i, j]
            Tinv[i][j] = Tinv_g[i, j]
    st.subst_generic(QMat(T), QMat(Tinv))
    st.row_op(Tinv_g)  # restore M rows to exact coordinates
    return zeros


def _clean_first_block(st: _Reduction, zeros: list[int]):
    for i, zeta in enumerate(zeros):
        dcoef = st.A[i][i]
        if dcoef:
            st.shear(zeta, i, -(dcoef * QuadScalar.coerce(Fraction(1, 2))))
        for i2 in range(st.s):
            if i2 == i:
                continue
            c = st.A[i][i2]
            if c:
                st.shear(zeta, i2, -c)


def _rationalize_tail(st: _Reduction, zeros: list[int]):
    """Rescale (and if needed mix) tail coordinates until all diagonal values
    are rational; raises NotRepresentableError if obstructed."""
    d, s = st.d, st.s
    diag_coords = [j for j in range(s, d) if j not in zeros]
    pending = []
    for j in diag_coords:
        mu = st.A[j][j]
        if mu.is_rational:
            continue
        c = rational_square_scale(mu)
        if c is not None:
            st.scale_coord(j, c)
        else:
            pending.append(j)
    # pairwise mixing: look for an exact vector in the plane with rational value
    unresolved = []
    while pending:
        j1 = pending.pop(0)
        fixed = False
        for j2 in list(pending) + [j for j in diag_coords if st.A[j][j].is_rational]:
            if _try_mix(st, j1, j2):
                if j2 in pending and st.A[j2][j2].is_rational:
                    pending.remove(j2)
                fixed = True
                break
        if fixed and not st.A[j1][j1].is_rational:
            fixed = False
        if not fixed:
            unresolved.append(st.A[j1][j1])
    if unresolved:
        raise NotRepresentableError(
            "no certificate with rational root scales: diagonal values "
            f"{[str(x) for x in unresolved]} are not rational-by-squares")


def _try_mix(st: _Reduction, j1: int, j2: int) -> bool:
    """Attempt a 2x2 exact basis change on (j1, j2) making both values rational."""
    mu1, mu2 = st.A[j1][j1], st.A[j2][j2]
    D = mu1.D or mu2.D
    if D is None:
        return False
    candidates = []
    for nu in range(-4, 5):
        for de in (1, 2, 3):
            candidates.append(Fraction(nu, de))
    for u in candidates:
        for v in candidates:
            beta = QuadScalar(u, v, D) if v else QuadScalar(u)
            if not beta:
                continue
            val = mu1 + beta * beta * mu2
            if not val or not val.is_rational:
                continue
            # w1 = e_j1 + beta e_j2; w2 = Q-orthogonal complement in the plane
            coef = (beta * mu2) / val
            w2_0, w2_1 = -coef, _ONE - coef * beta
            val2 = mu2 * w2_1 * w2_1 + mu1 * w2_0 * w2_0
            c2 = rational_square_scale(val2)
            if c2 is None:
                continue
            cols = QMat([[_ONE, w2_0 * c2], [beta, w2_1 * c2]])
            if not cols.det():
                continue
            st.mix_pair(j1, j2, cols)
            return True
    return False


def _reduce_core(Q: QuadraticForm, M: LinearMap, require_indefinite: bool,
                 single_mode: bool):
    d, s = Q.dim, M.s
    if d != M.d:
        raise HypothesisViolation("dim(Q) = dim(M)")
    if not Q.is_nondegenerate():
        raise HypothesisViolation("Q nondegenerate")
    if not M.has_full_rank():
        raise HypothesisViolation("rank(M) = s")
    sig_q = signature(Q)
    if require_indefinite:
        restricted = signature(restrict(Q, kernel_basis(M)))
        if not restricted.is_indefinite():
            raise HypothesisViolation("Q restricted to ker(M) indefinite",
                                      f"restricted signature {restricted.astuple()}")

    st = _Reduction(Q, M)
    _pin_map_rows(st)
    _diagonalize_tail(st)
    _clear_cross_terms(st)
    zeros = _pair_zero_coords(st)
    _clean_first_block(st, zeros)
    _rationalize_tail(st, zeros)
    m = len(zeros)

    single_sign = 0
    if single_mode and m == 0:
        c = rational_square_scale(st.A[0][0])
        if c is None:
            raise NotRepresentableError(
                f"single-form slot value {st.A[0][0]} is not rational-by-squares")
        st.scale_coord(0, c)

    # normalization roots: rational diagonal values become exactly +-1, the
    # square scales go to the certificate's root diagonal (never applied to A
    # via a substitution, so M's tracked rows stay exact coordinates)
    roots = [Fraction(1)] * d
    diag_signs: dict[int, int] = {}
    rows = st.A
    norm_coords = [j for j in range(s, d) if j not in zeros]
    if single_mode and m == 0:
        norm_coords.append(0)
    for j in norm_coords:
        mu = rows[j][j]
        if not mu.is_rational or not mu:
            raise InvariantBreach("diagonal value not a nonzero rational at normalization")
        sign = mu.sign()
        if j >= s:
            diag_signs[j] = sign
        else:
            single_sign = sign
        if mu.a != sign:
            roots[j] = abs(mu.a)
            rows[j][j] = QuadScalar(sign)
    middle = QuadraticForm(QMat([[rows[i][j] for j in range(m, s)] for i in range(m, s)], ncols=s - m))

    # final relabeling: positives, negatives, then the hyperbolic partners
    pos = [j for j in range(s, d) if diag_signs.get(j) == 1]
    neg = [j for j in range(s, d) if diag_signs.get(j) == -1]
    r_count, n_count = len(pos), len(neg)
    mapping: dict[int, int] = {}
    for k, src in enumerate(pos):
        mapping[src] = s + k
    for k, src in enumerate(neg):
        mapping[src] = s + r_count + k
    for k, src in enumerate(zeros):
        mapping[src] = s + r_count + n_count + k
    if single_mode and m == 0 and single_sign < 0:
        # the form's slot carries a negative square: canonical position is last
        mapping = {0: d - 1}
        for k, src in enumerate(pos):
            mapping[src] = k
        for k, src in enumerate(neg):
            mapping[src] = r_count + k
    st.permute(mapping)
    perm = {i: mapping.get(i, i) for i in range(d)}

    left_roots = [Fraction(1)] * d
    for src, dst in perm.items():
        left_roots[dst] = roots[src]
    g_d = ScaledMatrix(left_roots, QMat(st.Rinv, ncols=d), [Fraction(1)] * d)

    # g_s makes M = g_s * M0 * g_d exact: each tracked row of M is a scalar
    # times a coordinate, and that coordinate's root scale must be undone
    gs_core_scale = QMat.identity(s).tolists()
    gs_left = [Fraction(1)] * s
    for t in range(s):
        pos_t = next((j for j in range(d) if st.Mw[t][j]), None)
        if pos_t is None:
            raise InvariantBreach("pinned map row vanished")
        gs_core_scale[t][t] = st.Mw[t][pos_t]
        gs_left[t] = Fraction(1) / left_roots[pos_t]
        if not single_mode and (pos_t != t or st.Mw[t][pos_t] != _ONE):
            raise InvariantBreach("map rows not pinned to leading coordinates")
    g_s = ScaledMatrix(gs_left, QMat(st.G).inv() @ QMat(gs_core_scale), [Fraction(1)] * s)
    return st, g_d, g_s, m, r_count, n_count, middle, sig_q, single_sign


def reduce_pair(Q: QuadraticForm, M: LinearMap) -> CanonicalCertificate:
    """Canonical certificate for a pair whose restriction to ker(M) is indefinite."""
    st, g_d, g_s, m, r, n, middle, sig_q, _ = _reduce_core(
        Q, M, require_indefinite=True, single_mode=False)
    sig_mid = signature(middle)
    if sig_mid.rank != middle.dim:
        raise InvariantBreach("middle form is degenerate")
    params = CanonicalParams(m, sig_mid.p, sig_mid.q, r, n, middle)
    if r < 1 or n < 1:
        raise InvariantBreach("indefinite hypothesis held but r or n vanished")
    if (sig_q.p, sig_q.q) != (sig_mid.p + m + r, sig_mid.q + m + n):
        raise InvariantBreach("signature bookkeeping failed")
    if QMat(st.A, ncols=params.d) != build_canonical_gram(params):
        raise InvariantBreach("reduced gram does not match the canonical gram")
    cert = CanonicalCertificate(g_d, g_s, params)
    if not verify_certificate(Q, M, cert):
        raise InvariantBreach("freshly built certificate failed verification")
    return cert


@dataclass(frozen=True)
class SingleCertificate:
    """Certificate for the one-form reduction; target determined by the case tag."""

    g_d: ScaledMatrix
    g_s: ScaledMatrix
    case_tag: str
    sig: Signature

    @property
    def d(self) -> int:
        return self.sig.rank

    def target(self) -> tuple[QuadraticForm, LinearMap]:
        return canonical_single_target(self.case_tag, self.sig.p, self.sig.q)

    def verify(self, Q: QuadraticForm, L: LinearMap) -> bool:
        Qt, Mt = self.target()
        if Q.dim != Qt.dim or L.d != Qt.dim or L.s != 1:
            return False
        if not congruence_check(Q.gram, self.g_d, Qt.gram):
            return False
        row = next(j for j in range(Qt.dim) if Mt.rows[0, j])
        prod = scaled_product_rows(self.g_s, self.g_d.row_block(row, row + 1))
        return rs_equal(prod, rs_rows_from_qmat(L.rows))


def canonical_single_target(case_tag: str, p: int, q: int) -> tuple[QuadraticForm, LinearMap]:
    d = p + q
    if case_tag in ("1a", "1b"):
        gram = QMat.diagonal([_ONE] * p + [-_ONE] * q)
        pos = 0 if case_tag == "1a" else d - 1
        row = [[(_ONE if j == pos else _ZERO) for j in range(d)]]
        return QuadraticForm(gram), LinearMap(QMat(row, ncols=d))
    params = CanonicalParams(1, 0, 0, p - 1, q - 1,
                             QuadraticForm(QMat([], ncols=0)))
    Q0, _ = build_canonical_pair(params)
    row = [[(_ONE if j == 0 else _ZERO) for j in range(d)]]
    return Q0, LinearMap(QMat(row, ncols=d))


def reduce_single(Q: QuadraticForm, L: LinearMap) -> tuple[SingleCertificate, str]:
    """One-form reduction with case tag 1a, 1b (rank d-1) or 2 (rank d-2)."""
    if L.s != 1:
        raise HypothesisViolation("L is a single linear form")
    if L.rows.is_zero():
        raise HypothesisViolation("L nonzero")
    st, g_d, g_s, m, r, n, middle, sig_q, single_sign = _reduce_core(
        Q, L, require_indefinite=False, single_mode=True)
    if m == 1:
        case = "2"
    elif m == 0:
        case = "1a" if single_sign > 0 else "1b"
    else:
        raise InvariantBreach(f"impossible radical dimension {m} for s = 1")
    cert = SingleCertificate(g_d, g_s, case, sig_q)
    if not cert.verify(Q, L):
        raise InvariantBreach("single-form certificate failed verification")
    return cert, case
