"""Stabilizer groups and Lie-algebra machinery for the canonical pair.

Everything is indexed by a parameter triple ``(i1, i2, i3)`` on top of the
canonical parameters ``(p', q', m, r, n)``.  Coordinates split into four
blocks of sizes ``[l, tau, sigma, l]`` with::

    l      = m - i3
    tau    = (p' - i1) + (q' - i2)        (tau1 + tau2)
    sigma  = (r + i1 + i3) + (n + i2 + i3)  (sigma1 + sigma2)

The reference form ``Qp`` has unit antidiagonal corner blocks coupling the
two ``l`` blocks, the indefinite identity ``I_{tau1,tau2}`` in the middle,
and ``I_{sigma1,sigma2}`` in the third block.  The group ``U`` consists of
unipotent block matrices parameterized by ``t`` (an ``l x sigma`` matrix) and
``s`` with ``s + s.T + t J t.T = 0``; ``D`` is the rotation subgroup of the
third block.  The ambient Lie algebra splits into ten tagged subspaces
(``v+ v- v a d c u- u+ b+ b-``), and every identity used about them (shape
relations, brackets, the eta coordinate moves) is machine-checked exactly.

All checks are zero tolerance; rational sample points on rotation groups come
from the Pythagorean parametrization ``(cos, sin) = ((1-t^2)/(1+t^2),
2t/(1+t^2))`` and its hyperbolic analogue, so no floats appear anywhere.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .canon import CanonicalCertificate, build_canonical_gram
from .errors import DimensionError, InvariantBreach, QdlError
from .matrices import (
    QMat,
    ScaledMatrix,
    congruence_check,
    rs_equal,
    rs_rows_from_qmat,
    scaled_product_rows,
    sylvester_transform,
)
from .quadforms import LinearMap, QuadraticForm
from .scalars import QuadScalar

_ZERO = QuadScalar.zero()
_ONE = QuadScalar.one()
_HALF = QuadScalar.coerce(Fraction(1, 2))

SUBSPACE_LABELS = ("v+", "v-", "v", "a", "d", "c", "u-", "u+", "b+", "b-")


@dataclass(frozen=True)
class GroupParams:
    """Canonical parameters plus the induction triple (i1, i2, i3)."""

    p_prime: int
    q_prime: int
    m: int
    r: int
    n: int
    i1: int = 0
    i2: int = 0
    i3: int = 0

    def __post_init__(self):
        if min(self.p_prime, self.q_prime, self.m, self.r, self.n) < 0:
            raise QdlError("negative canonical parameters")
        if not (0 <= self.i1 <= self.p_prime):
            raise QdlError(f"i1 = {self.i1} outside [0, {self.p_prime}]")
        if not (0 <= self.i2 <= self.q_prime):
            raise QdlError(f"i2 = {self.i2} outside [0, {self.q_prime}]")
        lo = -min(self.p_prime, self.q_prime)
        if not (lo <= self.i3 <= self.m):
            raise QdlError(f"i3 = {self.i3} outside [{lo}, {self.m}]")
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise QdlError("negative block size sigma1/sigma2")

    # block sizes
    @property
    def l(self) -> int:
        return self.m - self.i3

    @property
    def tau1(self) -> int:
        return self.p_prime - self.i1

    @property
    def tau2(self) -> int:
        return self.q_prime - self.i2

    @property
    def tau(self) -> int:
        return self.tau1 + self.tau2

    @property
    def sigma1(self) -> int:
        return self.r + self.i1 + self.i3

    @property
    def sigma2(self) -> int:
        return self.n + self.i2 + self.i3

    @property
    def sigma(self) -> int:
        return self.sigma1 + self.sigma2

    @property
    def s(self) -> int:
        return self.m + self.p_prime + self.q_prime

    @property
    def d(self) -> int:
        return 2 * self.l + self.tau + self.sigma

    @property
    def offsets(self) -> tuple[int, int, int, int]:
        """Starting indices of the four blocks."""
        return (0, self.l, self.l + self.tau, self.l + self.tau + self.sigma)

    def shifted(self, d1: int, d2: int, d3: int) -> "GroupParams":
        return GroupParams(self.p_prime, self.q_prime, self.m, self.r, self.n,
                           self.i1 + d1, self.i2 + d2, self.i3 + d3)


def valid_triples(p_prime: int, q_prime: int, m: int, r: int = 1, n: int = 1):
    """All index triples admissible for these canonical parameters."""
    out = []
    for i1 in range(p_prime + 1):
        for i2 in range(q_prime + 1):
            for i3 in range(-min(p_prime, q_prime), m + 1):
                if r + i1 + i3 >= 0 and n + i2 + i3 >= 0:
                    out.append(GroupParams(p_prime, q_prime, m, r, n, i1, i2, i3))
    return out


def indef_identity(z1: int, z2: int) -> QMat:
    return QMat.diagonal([_ONE] * z1 + [-_ONE] * z2)


def build_Q_prime(params: GroupParams) -> QuadraticForm:
    """Reference gram: corner couplings, middle I_{tau1,tau2}, I_{sigma1,sigma2}."""
    d, l = params.d, params.l
    b1, b2, b3, b4 = params.offsets
    rows = [[_ZERO] * d for _ in range(d)]
    for i in range(l):
        rows[b1 + i][b4 + i] = _ONE
        rows[b4 + i][b1 + i] = _ONE
    for i in range(params.tau):
        rows[b2 + i][b2 + i] = _ONE if i < params.tau1 else -_ONE
    for i in range(params.sigma):
        rows[b3 + i][b3 + i] = _ONE if i < params.sigma1 else -_ONE
    return QuadraticForm(QMat(rows, ncols=d))


def _embed(params: GroupParams, pieces: dict[tuple[int, int], QMat]) -> QMat:
    d = params.d
    offs = params.offsets
    rows = [[_ZERO] * d for _ in range(d)]
    for (bi, bj), piece in pieces.items():
        oi, oj = offs[bi - 1], offs[bj - 1]
        for i in range(piece.nrows):
            for j in range(piece.ncols):
                if piece[i, j]:
                    rows[oi + i][oj + j] = piece[i, j]
    return QMat(rows, ncols=d)


def _block(params: GroupParams, f: QMat, bi: int, bj: int) -> QMat:
    offs = params.offsets
    sizes = (params.l, params.tau, params.sigma, params.l)
    oi, oj = offs[bi - 1], offs[bj - 1]
    return f.submatrix(range(oi, oi + sizes[bi - 1]), range(oj, oj + sizes[bj - 1]))


# -- the groups U and D -------------------------------------------------------------


def build_U(params: GroupParams, t: QMat, s_mat: QMat) -> QMat:
    """Assemble the unipotent element for parameters (t, s).

    Requires ``s + s.T + t J t.T = 0`` exactly; the residual matrix is named
    in the error otherwise.
    """
    l, sigma = params.l, params.sigma
    if t.shape != (l, sigma) or s_mat.shape != (l, l):
        raise DimensionError(f"U parameters must be {l}x{sigma} and {l}x{l}")
    J = indef_identity(params.sigma1, params.sigma2)
    residual = s_mat + s_mat.T + t @ J @ t.T
    if not residual.is_zero():
        raise QdlError(f"U constraint violated: s + s.T + t J t.T = {residual!r}")
    return _embed(params, {
        (1, 1): QMat.identity(l),
        (2, 2): QMat.identity(params.tau),
        (3, 1): -(J @ t.T),
        (3, 3): QMat.identity(sigma),
        (4, 1): s_mat,
        (4, 3): t,
        (4, 4): QMat.identity(l),
    })


def build_U_from_t(params: GroupParams, t: QMat, antisym: QMat | None = None) -> QMat:
    """U element with the symmetric part of s forced by the constraint."""
    J = indef_identity(params.sigma1, params.sigma2)
    s_mat = -_HALF * (t @ J @ t.T)
    if antisym is not None:
        if not (antisym + antisym.T).is_zero():
            raise QdlError("extra s part must be antisymmetric")
        s_mat = s_mat + antisym
    return build_U(params, t, s_mat)


def extract_U_params(params: GroupParams, g: QMat) -> tuple[QMat, QMat] | None:
    """Pattern-match a matrix against the U block shape; None if it does not fit."""
    t = _block(params, g, 4, 3)
    s_mat = _block(params, g, 4, 1)
    try:
        rebuilt = build_U(params, t, s_mat)
    except QdlError:
        return None
    return (t, s_mat) if rebuilt == g else None


def _rotation(c: QuadScalar, s: QuadScalar) -> QMat:
    return QMat([[c, -s], [s, c]])


def _boost(ch: QuadScalar, sh: QuadScalar) -> QMat:
    return QMat([[ch, sh], [sh, ch]])


def rotation_point(t: Fraction) -> tuple[QuadScalar, QuadScalar]:
    """Exact point on the circle: cos = (1-t^2)/(1+t^2), sin = 2t/(1+t^2)."""
    t = Fraction(t)
    den = 1 + t * t
    return QuadScalar(Fraction(1 - t * t, 1) / den), QuadScalar(2 * t / den)

def boost_point(t: Fraction) -> tuple[QuadScalar, QuadScalar]:
    """Exact point on the hyperbola: cosh = (1+t^2)/(1-t^2), sinh = 2t/(1-t^2)."""
    t = Fraction(t)
    if abs(t) >= 1:
        raise ValueError("boost parameter must satisfy |t| < 1")
    den = 1 - t * t
    return QuadScalar((1 + t * t) / den), QuadScalar(2 * t / den)


def so_group_samples(z1: int, z2: int, t: Fraction = Fraction(1, 2)) -> list[QMat]:
    """Rational sample generators of SO(z1, z2)^o: plane rotations, boosts,
    and (for rank >= 3) unipotent shears along isotropic directions."""
    z = z1 + z2
    J = indef_identity(z1, z2)
    out: list[QMat] = []

    def embed2(i, j, piece):
        rows = QMat.identity(z).tolists()
        rows[i][i], rows[i][j] = piece[0, 0], piece[0, 1]
        rows[j][i], rows[j][j] = piece[1, 0], piece[1, 1]
        return QMat(rows)

    for i in range(z):
        for j in range(i + 1, z):
            same = (j < z1) if i < z1 else (i >= z1)
            if same:
                c, s = rotation_point(t)
                out.append(embed2(i, j, _rotation(c, s)))
            else:
                ch, sh = boost_point(t)
                out.append(embed2(i, j, _boost(ch, sh)))
    if z >= 3:
        for i in range(z1):
            for j in range(z1, z):
                k = next(k for k in range(z) if k not in (i, j))
                v = [_ZERO] * z
                v[i], v[j] = _ONE, _ONE
                w = [_ZERO] * z
                w[k] = _ONE
                vq, wq = QMat.column(v), QMat.column(w)
                X = vq @ (wq.T @ J) - wq @ (vq.T @ J)
                X2 = X @ X
                shear = QMat.identity(z) + X + _HALF * X2
                out.append(shear)
    for g in out:
        if g.T @ J @ g != J:
            raise InvariantBreach("sample generator does not preserve the block form")
    return out


def build_D_generators(params: GroupParams, t: Fraction = Fraction(1, 2)) -> list[QMat]:
    """Rational sample generators of D embedded in the third block."""
    out = []
    for g in so_group_samples(params.sigma1, params.sigma2, t):
        out.append(_embed(params, {
            (1, 1): QMat.identity(params.l),
            (2, 2): QMat.identity(params.tau),
            (3, 3): g,
            (4, 4): QMat.identity(params.l),
        }))
    return out


def u_group_generators(params: GroupParams) -> list[QMat]:
    """One U element per parameter direction (t basis plus antisymmetric s)."""
    l, sigma = params.l, params.sigma
    out = []
    for a in range(l):
        for b in range(sigma):
            t = QMat.zeros(l, sigma).tolists()
            t[a][b] = _ONE
            out.append(build_U_from_t(params, QMat(t, ncols=sigma)))
    for a in range(l):
        for b in range(a + 1, l):
            s_mat = QMat.zeros(l, l).tolists()
            s_mat[a][b], s_mat[b][a] = _ONE, -_ONE
            out.append(build_U(params, QMat.zeros(l, sigma), QMat(s_mat)))
    return out


def h_star_generators(params: GroupParams) -> list[QMat]:
    return u_group_generators(params) + build_D_generators(params)


def fixes_leading_forms(params: GroupParams, g: QMat) -> bool:
    """Does g fix the coordinate forms x_1 .. x_{l+tau} (all of M0 at level 0)?"""
    k = params.l + params.tau
    return all(g[t, j] == (_ONE if t == j else _ZERO)
               for t in range(k) for j in range(params.d))


def verify_normalization(params: GroupParams, samples: int = 20,
                         seed: int = 0) -> tuple[bool, dict | None]:
    """Check d u d^-1 lands back in U, re-extracting its (t, s) parameters."""
    rng = random.Random(seed)
    d_gens = build_D_generators(params)
    if params.l == 0 or params.sigma == 0 or not d_gens:
        return True, None
    for _ in range(samples):
        t = _random_matrix(rng, params.l, params.sigma)
        anti = _random_antisym(rng, params.l)
        u = build_U_from_t(params, t, anti)
        dmat = d_gens[rng.randrange(len(d_gens))]
        if rng.random() < 0.5:
            dmat = dmat @ d_gens[rng.randrange(len(d_gens))]
        conj = dmat @ u @ dmat.inv()
        if extract_U_params(params, conj) is None:
            return False, {"t": t.to_json(), "s_extra": anti.to_json(),
                           "d": dmat.to_json()}
    return True, None


def _random_matrix(rng: random.Random, m: int, n: int) -> QMat:
    return QMat([[QuadScalar(Fraction(rng.randint(-3, 3), rng.choice((1, 2))))
                  for _ in range(n)] for _ in range(m)], ncols=n)


def _random_antisym(rng: random.Random, n: int) -> QMat:
    rows = QMat.zeros(n, n).tolists()
    for i in range(n):
        for j in range(i + 1, n):
            x = QuadScalar(Fraction(rng.randint(-2, 2)))
            rows[i][j], rows[j][i] = x, -x
    return QMat(rows)


# -- fixed forms and invariant subspaces ---------------------------------------------


def fixed_forms(generators: list[QMat], dim: int | None = None) -> QMat:
    """Exact basis (columns) of the forms fixed by every generator.

    The action on a form with covector ``v`` is ``v -> g.T v``, so the fixed
    space is the null space of the stacked ``g.T - I``.
    """
    if not generators:
        if dim is None:
            raise DimensionError("fixed_forms of an empty list needs a dimension")
        return QMat.identity(dim)
    d = generators[0].nrows
    stacked_rows = []
    for g in generators:
        diff = g.T - QMat.identity(d)
        stacked_rows.extend(diff.rows)
    return QMat(stacked_rows, ncols=d).nullspace()


def spans_equal(A: QMat, B: QMat) -> bool:
    """Exact equality of the column spans of two matrices."""
    if A.nrows != B.nrows:
        return False
    ra, rb = A.rank(), B.rank()
    if ra != rb:
        return False
    stacked = QMat.from_columns([list(A.col(j)) for j in range(A.ncols)] +
                                [list(B.col(j)) for j in range(B.ncols)],
                                nrows=A.nrows)
    return stacked.rank() == ra


def invariance_check(basis: QMat, generators: list[QMat]) -> bool:
    """Is the column span of ``basis`` invariant under all ``g.T`` actions?"""
    for g in generators:
        gt = g.T
        for j in range(basis.ncols):
            v = gt.matvec(basis.col(j))
            if not basis.column_span_contains(v):
                return False
    return True


def _coordinate_basis(d: int, coords) -> QMat:
    cols = []
    for c in coords:
        v = [_ZERO] * d
        v[c] = _ONE
        cols.append(v)
    return QMat.from_columns(cols, nrows=d)


def classification_probe(basis: QMat, params: GroupParams, group: str) -> str:
    """Which branch of the invariant-subspace dichotomy a subspace falls in.

    ``group="D"``: contained in the D-fixed forms, or contains the full third
    block.  ``group="H"``: contained in the leading-coordinate forms, or
    contains the swapped block span (blocks 1 and 3).  Returns one of
    ``contained_in_fixed``, ``contains_L_m_block``, ``neither``.
    """
    d = params.d
    b1, b2, b3, b4 = params.offsets
    block3 = list(range(b3, b3 + params.sigma))
    if group == "D":
        fixed_coords = list(range(0, b3)) + list(range(b4, d))
        block_coords = block3
    elif group == "H":
        fixed_coords = list(range(0, b3))
        block_coords = list(range(0, params.l)) + block3
    else:
        raise ValueError("group must be 'D' or 'H'")
    fixed = _coordinate_basis(d, fixed_coords)
    contained = all(fixed.column_span_contains(basis.col(j)) for j in range(basis.ncols))
    if contained:
        return "contained_in_fixed"
    blockb = _coordinate_basis(d, block_coords)
    contains_block = all(basis.column_span_contains(blockb.col(j))
                         for j in range(blockb.ncols))
    if contains_block:
        return "contains_L_m_block"
    return "neither"


# -- the Lie algebra decomposition ----------------------------------------------------


@dataclass(frozen=True)
class AlgebraElement:
    """A matrix in the ambient algebra, tagged by its defining subspace."""

    params: GroupParams
    mat: QMat
    label: str | None = None

    def satisfies_ambient_relation(self) -> bool:
        Qp = build_Q_prime(self.params).gram
        return (self.mat.T @ Qp + Qp @ self.mat).is_zero()

    def components(self) -> dict[str, QMat]:
        comps, rem = decompose(self.params, self.mat)
        if not rem.is_zero():
            raise InvariantBreach("element does not lie in the ambient algebra")
        return {k: v for k, v in comps.items() if not v.is_zero()}


@dataclass(frozen=True)
class SubspaceBasis:
    label: str
    elements: tuple[AlgebraElement, ...]

    @property
    def dim(self) -> int:
        return len(self.elements)


def so_algebra_basis(z1: int, z2: int) -> list[QMat]:
    """Basis of the algebra preserving I_{z1,z2}: J @ (antisymmetric)."""
    z = z1 + z2
    J = indef_identity(z1, z2)
    out = []
    for i in range(z):
        for j in range(i + 1, z):
            W = QMat.zeros(z, z).tolists()
            W[i][j], W[j][i] = _ONE, -_ONE
            out.append(J @ QMat(W))
    return out


def embed_subspace(params: GroupParams, label: str, param_mat: QMat) -> AlgebraElement:
    """Place a parameter matrix into the block pattern of the named subspace."""
    Jt = indef_identity(params.tau1, params.tau2)
    Js = indef_identity(params.sigma1, params.sigma2)
    v = param_mat
    if label == "v+":
        pieces = {(1, 2): -(v.T @ Jt), (2, 4): v}
    elif label == "v-":
        pieces = {(2, 1): v, (4, 2): -(v.T @ Jt)}
    elif label == "v":
        pieces = {(2, 3): v, (3, 2): -(Js @ v.T @ Jt)}
    elif label == "a":
        pieces = {(2, 2): v}
    elif label == "d":
        pieces = {(3, 3): v}
    elif label == "c":
        pieces = {(1, 1): v, (4, 4): -v.T}
    elif label == "u-":
        pieces = {(3, 1): -(Js @ v.T), (4, 3): v}
    elif label == "u+":
        pieces = {(1, 3): v, (3, 4): -(Js @ v.T)}
    elif label == "b+":
        pieces = {(1, 4): v}
    elif label == "b-":
        pieces = {(4, 1): v}
    else:
        raise ValueError(f"unknown subspace label {label!r}")
    return AlgebraElement(params, _embed(params, pieces), label)


def subspace_param_shapes(params: GroupParams) -> dict[str, tuple[int, int]]:
    l, tau, sigma = params.l, params.tau, params.sigma
    return {
        "v+": (tau, l), "v-": (tau, l), "v": (tau, sigma),
        "a": (tau, tau), "d": (sigma, sigma), "c": (l, l),
        "u-": (l, sigma), "u+": (l, sigma), "b+": (l, l), "b-": (l, l),
    }


def subspace_dimension(params: GroupParams, label: str) -> int:
    l, tau, sigma = params.l, params.tau, params.sigma
    return {
        "v+": tau * l, "v-": tau * l, "v": tau * sigma,
        "a": tau * (tau - 1) // 2, "d": sigma * (sigma - 1) // 2, "c": l * l,
        "u-": l * sigma, "u+": l * sigma,
        "b+": l * (l - 1) // 2, "b-": l * (l - 1) // 2,
    }[label]


def subspace_basis(params: GroupParams, label: str) -> SubspaceBasis:
    elems = []
    if label in ("a", "d"):
        z1, z2 = ((params.tau1, params.tau2) if label == "a"
                  else (params.sigma1, params.sigma2))
        for X in so_algebra_basis(z1, z2):
            elems.append(embed_subspace(params, label, X))
    elif label in ("b+", "b-"):
        l = params.l
        for i in range(l):
            for j in range(i + 1, l):
                W = QMat.zeros(l, l).tolists()
                W[i][j], W[j][i] = _ONE, -_ONE
                elems.append(embed_subspace(params, label, QMat(W)))
    else:
        m, n = subspace_param_shapes(params)[label]
        for i in range(m):
            for j in range(n):
                E = QMat.zeros(m, n).tolists()
                E[i][j] = _ONE
                elems.append(embed_subspace(params, label, QMat(E, ncols=n)))
    return SubspaceBasis(label, tuple(elems))


def row_line_basis(params: GroupParams, label: str, k: int) -> list[AlgebraElement]:
    """Basis of the row-k slice of v, u+ or u- (1-based k as in the block rows)."""
    shapes = subspace_param_shapes(params)
    m, n = shapes[label]
    if not (1 <= k <= m):
        raise ValueError(f"row index {k} outside 1..{m}")
    out = []
    for j in range(n):
        E = QMat.zeros(m, n).tolists()
        E[k - 1][j] = _ONE
        out.append(embed_subspace(params, label, QMat(E, ncols=n)))
    return out


def decompose(params: GroupParams, f: QMat) -> tuple[dict[str, QMat], QMat]:
    """Split a matrix into the ten tagged components plus a remainder."""
    comps = {
        "v+": _block(params, f, 2, 4),
        "v-": _block(params, f, 2, 1),
        "v": _block(params, f, 2, 3),
        "a": _block(params, f, 2, 2),
        "d": _block(params, f, 3, 3),
        "c": _block(params, f, 1, 1),
        "u-": _block(params, f, 4, 3),
        "u+": _block(params, f, 1, 3),
        "b+": _block(params, f, 1, 4),
        "b-": _block(params, f, 4, 1),
    }
    total = QMat.zeros(params.d, params.d)
    for label, piece in comps.items():
        total = total + embed_subspace(params, label, piece).mat
    return comps, f - total


def lie_bracket(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    if a.params != b.params:
        raise DimensionError("bracket of elements over different parameters")
    return AlgebraElement(a.params, a.mat @ b.mat - b.mat @ a.mat)


def projection_labels(elem: AlgebraElement) -> set[str]:
    return set(elem.components().keys())


# -- eta coordinate moves --------------------------------------------------------------


def eta_target(which: int, params: GroupParams, variant: str = "pos") -> GroupParams:
    if which in (0, 1, 2):
        return params
    if which == 3:
        return params.shifted(0, 0, 1)
    if which == 4:
        return params.shifted(1, 0, 0) if variant == "pos" else params.shifted(0, 1, 0)
    if which == 5:
        return params.shifted(1, 1, -1)
    raise ValueError("which must be 0..5")


def build_eta(which: int, params: GroupParams, aux: dict | None = None,
              variant: str = "pos") -> ScaledMatrix:
    """The coordinate moves used to enlarge the index triple.

    eta0 diagonalizes a supplied middle form (block-diagonal, roots allowed);
    eta1 = diag(a1, a2, I, a1); eta2 is the shear family with parameters
    (alpha1, alpha2); eta3 moves a corner pair into the third block
    (i3 + 1); eta4 moves a middle +1 (or -1) slot into the third block
    (i1 + 1 / i2 + 1); eta5 trades a middle hyperbolic pair for a corner pair
    (i1 + 1, i2 + 1, i3 - 1).  Entries 1/sqrt(2) ride in the root diagonals.
    """
    aux = aux or {}
    d, l, tau, sigma = params.d, params.l, params.tau, params.sigma

    if which == 0:
        middle: QuadraticForm = aux["middle"]
        if middle.dim != params.p_prime + params.q_prime:
            raise DimensionError("middle form size does not match p' + q'")
        T, p, q = sylvester_transform(middle.gram)
        if (p, q) != (params.p_prime, params.q_prime):
            raise QdlError("middle form signature does not match (p', q')")
        m = params.m
        core = QMat.identity(d).tolists()
        right = [Fraction(1)] * d
        for i in range(middle.dim):
            right[m + i] = T.right_roots[i]
            for j in range(middle.dim):
                core[m + i][m + j] = T.core[i, j]
        return ScaledMatrix([Fraction(1)] * d, QMat(core), right)

    if which == 1:
        a1: QMat = aux.get("a1", QMat.identity(l))
        a2: QMat = aux.get("a2", QMat.identity(tau))
        if a1.shape != (l, l) or a2.shape != (tau, tau):
            raise DimensionError("eta1 blocks must be l x l and tau x tau")
        if a1.T @ a1 != QMat.identity(l) or (l > 0 and a1.det() != _ONE):
            raise QdlError("a1 must be a rotation of the first block")
        Jt = indef_identity(params.tau1, params.tau2)
        if a2.T @ Jt @ a2 != Jt:
            raise QdlError("a2 must preserve the middle block form")
        core = _embed(params, {(1, 1): a1, (2, 2): a2,
                               (3, 3): QMat.identity(sigma), (4, 4): a1})
        return ScaledMatrix.from_core(core)

    if which == 2:
        alpha1 = QuadScalar.coerce(aux.get("alpha1", 0))
        alpha2 = QuadScalar.coerce(aux.get("alpha2", 0))
        if l < 1:
            raise QdlError("eta2 requires l >= 1")
        if alpha1 and params.tau1 < 1:
            raise QdlError("alpha1 requires a positive middle slot")
        if alpha2 and params.tau2 < 1:
            raise QdlError("alpha2 requires a negative middle slot")
        alpha = (alpha2 * alpha2 - alpha1 * alpha1) * _HALF
        core = QMat.identity(d).tolists()
        il, i_l1, i_lt, i_d = l - 1, l, l + tau - 1, d - 1
        if alpha1:
            core[i_l1][il] = alpha1
            core[i_d][i_l1] = -alpha1
        if alpha2:
            core[i_lt][il] = alpha2
            core[i_d][i_lt] = core[i_d][i_lt] + alpha2
        if alpha:
            core[i_d][il] = alpha
        return ScaledMatrix.from_core(QMat(core))

    if which == 3:
        if l < 1:
            raise QdlError("eta3 requires l >= 1")
        eta_target(3, params)  # validates the target triple
        core = QMat.zeros(d, d).tolists()
        roots = [Fraction(1)] * d
        for i in range(l - 1):
            core[i][i] = _ONE
        core[l - 1][tau + l - 1] = _ONE
        core[l - 1][l + tau + sigma] = -_ONE
        roots[l - 1] = Fraction(1, 2)
        for i in range(l, tau + l):
            core[i][i - 1] = _ONE
        for i in range(tau + l, sigma + tau + l):
            core[i][i] = _ONE
        for i in range(sigma + tau + l, d - 1):
            core[i][i + 1] = _ONE
        core[d - 1][tau + l - 1] = _ONE
        core[d - 1][l + tau + sigma] = _ONE
        roots[d - 1] = Fraction(1, 2)
        return ScaledMatrix(roots, QMat(core), [Fraction(1)] * d)

    if which == 4:
        core = QMat.zeros(d, d).tolists()
        if variant == "pos":
            if params.tau1 < 1:
                raise QdlError("eta4 (positive variant) requires tau1 >= 1")
            eta_target(4, params, "pos")
            for i in range(d):
                if i < l or i >= l + tau:
                    core[i][i] = _ONE
            core[l][l + tau - 1] = _ONE
            for j in range(2, tau + 1):
                core[l + j - 1][l + j - 2] = _ONE
        else:
            if params.tau2 < 1:
                raise QdlError("eta4 (negative variant) requires tau2 >= 1")
            eta_target(4, params, "neg")
            for i in range(d):
                if i < l + tau - 1 or i >= l + tau + sigma:
                    core[i][i] = _ONE
            core[l + tau - 1][l + tau + sigma - 1] = _ONE
            for k in range(1, sigma + 1):
                core[l + tau + k - 1][l + tau + k - 2] = _ONE
        return ScaledMatrix.from_core(QMat(core))

    if which == 5:
        if params.tau1 < 1 or params.tau2 < 1:
            raise QdlError("eta5 requires tau1 >= 1 and tau2 >= 1")
        eta_target(5, params)  # validates the target triple
        core = QMat.zeros(d, d).tolists()
        roots = [Fraction(1)] * d
        for i in range(l):
            core[i][i] = _ONE
        core[l][l] = _ONE
        core[l][d - 1] = _ONE
        roots[l] = Fraction(1, 2)
        for i in range(l + 1, l + tau - 1):
            core[i][i] = _ONE
        core[l + tau - 1][l] = _ONE
        core[l + tau - 1][d - 1] = -_ONE
        roots[l + tau - 1] = Fraction(1, 2)
        for i in range(l + tau, d):
            core[i][i - 1] = _ONE
        return ScaledMatrix(roots, QMat(core), [Fraction(1)] * d)

    raise ValueError("which must be 0..5")


def eta_congruence_holds(which: int, params: GroupParams, aux: dict | None = None,
                         variant: str = "pos") -> bool:
    """Exact check of Q_params(eta x) = Q_target(x)."""
    eta = build_eta(which, params, aux, variant)
    if which == 0:
        # eta0 carries the canonical form (arbitrary middle) to the base shape
        if (params.i1, params.i2, params.i3) != (0, 0, 0):
            raise QdlError("eta0 is defined at the base triple only")
        A0 = build_canonical_gram_from_group(params, aux["middle"])
        return congruence_check(build_Q_prime(params).gram, eta, A0)
    src = build_Q_prime(params).gram
    tgt = build_Q_prime(eta_target(which, params, variant)).gram
    return congruence_check(tgt, eta, src)


def build_canonical_gram_from_group(params: GroupParams, middle: QuadraticForm) -> QMat:
    """Gram of the canonical pair's form laid out in the group's block pattern."""
    from .canon import CanonicalParams
    cp = CanonicalParams(params.m, params.p_prime, params.q_prime,
                         params.r, params.n, middle)
    return build_canonical_gram(cp)


def eta2_commutes(params: GroupParams, aux: dict) -> bool:
    """eta2 u = u eta2 = u for every basis element u of u- and d."""
    eta = build_eta(2, params, aux).core
    for label in ("u-", "d"):
        for elem in subspace_basis(params, label).elements:
            u = elem.mat
            if eta @ u != u or u @ eta != u:
                return False
    return True


# -- transported fixed forms -----------------------------------------------------------


def transported_fixed_forms_match(Q: QuadraticForm, M: LinearMap,
                                  cert: CanonicalCertificate) -> bool:
    """Exact check that conjugating the stabilizer by the certificate fixes
    exactly the row span of M.

    Verifies, for every canonical-level generator g, that ``h = g_d^{-1} g g_d``
    satisfies ``M h = M`` and preserves the form; span equality follows from
    the certificate rows and is checked exactly over the base field.
    """
    params = GroupParams(cert.params.p_prime, cert.params.q_prime,
                         cert.params.m, cert.params.r, cert.params.n)
    gens = h_star_generators(params)
    gd_inv = cert.g_d.inverse()
    m_rows = rs_rows_from_qmat(M.rows)
    a_rows = rs_rows_from_qmat(Q.gram)
    for g in gens:
        h = scaled_product_rows(gd_inv, g, cert.g_d)
        if not rs_equal(scaled_product_rows(m_rows, h), m_rows):
            return False
        ht = [[h[i][j] for i in range(len(h))] for j in range(len(h))]
        if not rs_equal(scaled_product_rows(ht, a_rows, h), a_rows):
            return False
    # the fixed space transports to the span of the leading certificate rows
    lead = QMat(cert.g_d.core.rows[: M.s], ncols=M.d)
    return spans_equal(lead.T, M.rows.T)


# -- the index walk --------------------------------------------------------------------


@dataclass(frozen=True)
class WalkReport:
    ok: bool
    longest_path: int
    n_states: int
    n_edges: int
    detail: str = ""


def _moves(p_prime: int, q_prime: int, m: int, state: tuple[int, int, int]):
    i1, i2, i3 = state
    lo = -min(p_prime, q_prime)
    if i1 < p_prime:
        yield (i1 + 1, i2, i3)
    if i2 < q_prime:
        yield (i1, i2 + 1, i3)
    if i3 < m:
        yield (i1, i2, i3 + 1)
    if i1 < p_prime and i2 < q_prime and i3 > lo:
        yield (i1 + 1, i2 + 1, i3 - 1)


def index_walk_check(p_prime: int, q_prime: int, m: int) -> WalkReport:
    """Exhaustive walk of the index graph from (0, 0, 0).

    Confirms the potential i1+i2+i3 strictly increases along every move, every
    maximal path is finite and ends at the full potential, and the longest
    path has length exactly p' + q' + m.
    """
    total = p_prime + q_prime + m
    start = (0, 0, 0)
    seen = {start}
    frontier = [start]
    n_edges = 0
    while frontier:
        nxt = []
        for state in frontier:
            for succ in _moves(p_prime, q_prime, m, state):
                n_edges += 1
                if sum(succ) != sum(state) + 1:
                    return WalkReport(False, 0, len(seen), n_edges,
                                      f"potential not increased on {state} -> {succ}")
                if succ not in seen:
                    seen.add(succ)
                    nxt.append(succ)
        frontier = nxt
    # terminal states must sit at full potential
    for state in seen:
        if not list(_moves(p_prime, q_prime, m, state)) and sum(state) != total:
            return WalkReport(False, 0, len(seen), n_edges,
                              f"stuck state {state} below full potential")
    # every path gains +1 per step, so the longest path length is the max potential
    longest = max(sum(state) for state in seen)
    ok = longest == total
    return WalkReport(ok, longest, len(seen), n_edges,
                      "" if ok else "full potential unreachable")
