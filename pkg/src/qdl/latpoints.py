"""Integer points on a quadric up to a height bound, and integral automorphs.

``enumerate_box`` lists every x in Z^d with Q(x) = a and sup-norm at most H.
The gram matrix is cleared of denominators once, a pivoted exact LDL split of
the form drives per-level interval pruning of the backtracking (larger
diagonal pivots are pivoted first, which nests them innermost where they are
solved algebraically rather than scanned), and the innermost two or three
levels are solved on vectorized integer grids when the scaled bounds fit in
int64.  Every candidate is re-verified against the integer gram: in int64 when
a precomputed magnitude bound proves that exact, in rational arithmetic
otherwise.  Coordinates that never admit a diagonal pivot (hyperbolic blocks
with zero diagonal) are scanned outermost with coarse interval pruning.

``find_automorphs`` returns exactly verified integral symmetries: signed
permutations of the gram plus shear (transvection-style) automorphs built from
integral isotropic vectors.  ``orbit_expand`` closes a point set under a list
of automorphs inside a box.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import HypothesisViolation
from .quadforms import QuadraticForm
from .scalars import QuadScalar

_INT64_GUARD = 1 << 60


class PointSet:
    """Integer solutions of Q(x) = a found inside a sup-norm box.

    Points live in a lexicographically sorted ``(N, d)`` int64 array; the
    ``points`` view as tuples is intended for small sets.
    """

    __slots__ = ("array", "height", "exhaustive", "nodes", "order", "_tuples")

    def __init__(self, array: np.ndarray, height: int, exhaustive: bool,
                 nodes: int = 0, order: tuple[int, ...] = ()):
        arr = np.asarray(array, dtype=np.int64)
        if arr.ndim != 2:
            arr = arr.reshape(0, 0)
        self.array = _lexsorted_unique(arr)
        self.height = height
        self.exhaustive = exhaustive
        self.nodes = nodes
        self.order = order
        self._tuples = None

    @classmethod
    def from_tuples(cls, pts, height: int, exhaustive: bool, nodes: int = 0,
                    order: tuple[int, ...] = ()) -> "PointSet":
        pts = list(pts)
        d = len(pts[0]) if pts else 0
        arr = np.array(pts, dtype=np.int64).reshape(len(pts), d)
        return cls(arr, height, exhaustive, nodes, order)

    @property
    def count(self) -> int:
        return int(self.array.shape[0])

    @property
    def points(self) -> tuple[tuple[int, ...], ...]:
        if self._tuples is None:
            self._tuples = tuple(tuple(int(v) for v in row) for row in self.array)
        return self._tuples

    def restrict_height(self, H: int) -> "PointSet":
        if self.count:
            mask = np.abs(self.array).max(axis=1) <= H
            arr = self.array[mask]
        else:
            arr = self.array
        return PointSet(arr, H, self.exhaustive and H <= self.height,
                        self.nodes, self.order)

    def to_json(self) -> dict:
        return {"count": self.count, "H": self.height, "exhaustive": self.exhaustive}


def _lexsorted_unique(arr: np.ndarray) -> np.ndarray:
    if arr.shape[0] <= 1:
        return arr
    keys = tuple(arr[:, c] for c in range(arr.shape[1] - 1, -1, -1))
    arr = arr[np.lexsort(keys)]
    keep = np.ones(arr.shape[0], dtype=bool)
    keep[1:] = np.any(arr[1:] != arr[:-1], axis=1)
    return arr[keep]


@dataclass(frozen=True)
class Automorph:
    """Integral matrix with gamma.T @ gram @ gamma = gram and det +-1."""

    mat: tuple[tuple[int, ...], ...]

    def apply(self, point: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(sum(row[j] * point[j] for j in range(len(point)))
                     for row in self.mat)

    def to_json(self):
        return [list(r) for r in self.mat]


def _integer_gram(Q: QuadraticForm, a) -> tuple[list[list[int]], int]:
    """Clear denominators: (L*gram as ints, L*a as int) for the lcm L."""
    entries = []
    for row in Q.gram.rows:
        for x in row:
            if not x.is_rational:
                raise HypothesisViolation("rational form required for enumeration")
            entries.append(x.a)
    a = Fraction(a) if not isinstance(a, QuadScalar) else a.a
    L = 1
    for v in entries + [Fraction(a)]:
        L = L * v.denominator // math.gcd(L, v.denominator)
    A = [[int(x.a * L) for x in row] for row in Q.gram.rows]
    return A, int(Fraction(a) * L)


def _pivoted_ldl(A: list[list[int]]):
    """Pivoted exact LDL of a symmetric integer matrix.

    Returns (pivots, raw, raw_coeff):  Q = sum d_k (x_c + sum u_k[j] x_j)^2
    plus the residual bilinear form on the never-pivoted raw coordinates.
    """
    d = len(A)
    S = [[Fraction(x) for x in row] for row in A]
    remaining = list(range(d))
    pivots = []
    while remaining:
        best = max(remaining, key=lambda c: (abs(S[c][c]), -c))
        if S[best][best] == 0:
            break
        c = best
        dk = S[c][c]
        u = {j: S[c][j] / dk for j in remaining if j != c and S[c][j]}
        pivots.append((c, dk, u))
        remaining.remove(c)
        for i in remaining:
            if S[c][i]:
                for j in remaining:
                    if S[c][j]:
                        S[i][j] -= S[c][i] * S[c][j] / dk
        for i in remaining:
            S[c][i] = S[i][c] = Fraction(0)
    raw_coeff = {(i, j): S[i][j] for i in remaining for j in remaining
                 if i <= j and S[i][j]}
    return pivots, remaining, raw_coeff


class _BoxSearch:
    def __init__(self, A: list[list[int]], target: int, H: int,
                 node_budget: int | None):
        self.A = A
        self.d = len(A)
        self.target = target
        self.H = H
        self.node_budget = node_budget
        self.nodes = 0
        self.exhausted = True
        self.batches: list[np.ndarray] = []
        self.loose: list[tuple[int, ...]] = []
        pivots, raw, raw_coeff = _pivoted_ldl(A)
        self.pivots = pivots
        self.raw = raw
        self.raw_coeff = raw_coeff
        # assignment order: raw coordinates first, then pivots innermost-last
        self.seq = list(raw) + [c for c, _, _ in reversed(pivots)]
        self.order = tuple(self.seq)
        self.level_of = {c: k for k, (c, _, _) in enumerate(pivots)}
        self.x = [0] * self.d
        self.center = [Fraction(0)] * len(pivots)

    def _value(self, pt) -> int:
        acc = 0
        A = self.A
        for i in range(self.d):
            xi = pt[i]
            if xi:
                row = A[i]
                acc += xi * sum(row[j] * pt[j] for j in range(self.d) if pt[j])
        return acc

    def run(self, top_range: tuple[int, int] | None = None) -> np.ndarray:
        self._descend(0, Fraction(self.target), top_range)
        parts = list(self.batches)
        if self.loose:
            parts.append(np.array(self.loose, dtype=np.int64).reshape(len(self.loose), self.d))
        if parts:
            cand = np.concatenate(parts, axis=0)
        else:
            cand = np.zeros((0, self.d), dtype=np.int64)
        return self._verify(cand)

    def _verify(self, cand: np.ndarray) -> np.ndarray:
        if cand.shape[0] == 0:
            return cand
        max_abs = max(max(abs(v) for v in row) for row in self.A)
        bound = self.d * self.d * max_abs * self.H * self.H
        if bound < _INT64_GUARD:
            An = np.array(self.A, dtype=np.int64)
            vals = np.einsum("ni,ij,nj->n", cand, An, cand)
            return cand[vals == self.target]
        keep = [i for i, row in enumerate(cand)
                if self._value([int(v) for v in row]) == self.target]
        return cand[keep]

    # interval of the still-unassigned part of the form
    def _remaining_interval(self, pos: int) -> tuple[Fraction, Fraction]:
        lo = Fraction(0)
        hi = Fraction(0)
        H = self.H
        assigned = set(self.seq[:pos])
        for k, (c, dk, u) in enumerate(self.pivots):
            if c in assigned:
                continue
            m = self.center[k]
            spread = Fraction(H)
            for j, coef in u.items():
                if j not in assigned:
                    spread += abs(coef) * H
            t_lo, t_hi = m - spread, m + spread
            if t_lo <= 0 <= t_hi:
                sq_lo = Fraction(0)
            else:
                sq_lo = min(t_lo * t_lo, t_hi * t_hi)
            sq_hi = max(t_lo * t_lo, t_hi * t_hi)
            if dk > 0:
                lo += dk * sq_lo
                hi += dk * sq_hi
            else:
                lo += dk * sq_hi
                hi += dk * sq_lo
        for (i, j), coef in self.raw_coeff.items():
            if i in assigned and j in assigned:
                continue
            term = coef * (1 if i == j else 2)
            xi = self.x[i] if i in assigned else None
            xj = self.x[j] if j in assigned else None
            if xi is not None:
                bound = abs(term * xi) * H
            elif xj is not None:
                bound = abs(term * xj) * H
            else:
                bound = abs(term) * H * H
            lo -= bound
            hi += bound
        return lo, hi

    def _descend(self, pos: int, residual: Fraction, top_range=None):
        if not self.exhausted:
            return
        self.nodes += 1
        if self.node_budget is not None and self.nodes > self.node_budget:
            self.exhausted = False
            return
        npos = len(self.seq)
        if pos == npos:
            if residual == 0:
                self.loose.append(tuple(self.x))
            return
        lo, hi = self._remaining_interval(pos)
        if residual < lo or residual > hi:
            return
        remaining = npos - pos
        coord = self.seq[pos]
        in_pivot_zone = all(c in self.level_of for c in self.seq[pos:])
        if in_pivot_zone and remaining == 1:
            self._solve_last(coord, residual)
            return
        if in_pivot_zone and remaining in (2, 3):
            if self._solve_tail_vectorized(pos, residual):
                return
        lo_x, hi_x = -self.H, self.H
        if top_range is not None:
            lo_x, hi_x = top_range
        for v in range(lo_x, hi_x + 1):
            self.x[coord] = v
            if coord in self.level_of:
                k = self.level_of[coord]
                t = self.center[k] + v
                new_res = residual - self.pivots[k][1] * t * t
            else:
                new_res = residual
                if self._raw_done(pos + 1):
                    new_res = residual - self._raw_value()
            self._push_center(coord, v)
            self._descend(pos + 1, new_res)
            self._push_center(coord, -v)
            self.x[coord] = 0
            if not self.exhausted:
                return

    def _raw_done(self, pos: int) -> bool:
        return all(c in self.level_of for c in self.seq[pos:])

    def _raw_value(self) -> Fraction:
        acc = Fraction(0)
        for (i, j), coef in self.raw_coeff.items():
            acc += coef * self.x[i] * self.x[j] * (1 if i == j else 2)
        return acc

    def _push_center(self, coord: int, v: int):
        if not v:
            return
        for k, (_, _, u) in enumerate(self.pivots):
            coef = u.get(coord)
            if coef:
                self.center[k] += coef * v

    def _solve_last(self, coord: int, residual: Fraction):
        k = self.level_of[coord]
        dk = self.pivots[k][1]
        c = self.center[k]
        rhs = residual / dk
        if rhs < 0:
            return
        num, den = rhs.numerator, rhs.denominator
        sn, sd = math.isqrt(num), math.isqrt(den)
        if sn * sn != num or sd * sd != den:
            return
        root = Fraction(sn, sd)
        for t in ({root, -root} if root else {root}):
            xv = t - c
            if xv.denominator == 1 and abs(xv) <= self.H:
                self.x[coord] = int(xv)
                self.loose.append(tuple(self.x))
                self.x[coord] = 0

    def _solve_tail_vectorized(self, pos: int, residual: Fraction) -> bool:
        """Solve the last 2 or 3 pivot levels on an integer grid; False means
        the int64 guard failed and the caller must scan instead."""
        coords = self.seq[pos:]
        ks = [self.level_of[c] for c in coords]
        H = self.H
        dens = [1]
        lin = []
        for idx, (c, k) in enumerate(zip(coords, ks)):
            base = self.center[k]
            coefs = {}
            for c2 in coords[:idx]:
                u = self.pivots[k][2].get(c2)
                if u:
                    coefs[c2] = u
            lin.append((base, coefs))
            dens.append(base.denominator)
            dens.extend(v.denominator for v in coefs.values())
        den = 1
        for q in dens:
            den = den * q // math.gcd(den, q)
        lam = 1
        for k in ks:
            q = self.pivots[k][1].denominator
            lam = lam * q // math.gcd(lam, q)
        # sum d_k (tau_k / den)^2 = residual  <=>  sum (lam d_k) tau_k^2 = C
        B = [int(self.pivots[k][1] * lam) for k in ks]
        C = residual * lam * den * den
        if C.denominator != 1:
            return True  # non-integral residual: no integer tail solutions
        C = int(C)
        worst = abs(C)
        for (base, coefs), b in zip(lin, B):
            t_bound = abs(base) + H * (1 + sum(abs(v) for v in coefs.values()))
            worst = max(worst, abs(b) * int(t_bound * den + 1) ** 2)
        if worst * (len(coords) + 1) > _INT64_GUARD:
            return False

        grid1d = np.arange(-H, H + 1, dtype=np.int64)
        if len(coords) == 2:
            grids = [grid1d]
        else:
            v2, v1 = np.meshgrid(grid1d, grid1d, indexing="ij")
            grids = [v2, v1]
        taus = []
        for idx in range(len(coords) - 1):
            base, coefs = lin[idx]
            tau = den * grids[idx] + int(base * den)
            for c2, coef in coefs.items():
                tau = tau + int(coef * den) * grids[coords[:idx].index(c2)]
            taus.append(tau)
        rest = np.full(grids[0].shape, C, dtype=np.int64)
        for tau, b in zip(taus, B):
            rest = rest - b * tau * tau
        self._finish_level0(grids, rest, B[-1], lin[-1], den, coords)
        return True

    def _finish_level0(self, grids, rest, b0, lin0, den, coords):
        """Vectorized solve of b0 * tau0^2 = rest; collects candidate points."""
        self.nodes += int(np.size(rest))
        if self.node_budget is not None and self.nodes > self.node_budget:
            self.exhausted = False
            return
        mask = (rest % b0 == 0)
        quot = np.where(mask, rest // b0, -1)
        mask &= quot >= 0
        if not mask.any():
            return
        roots = np.rint(np.sqrt(np.where(mask, quot, 0).astype(np.float64))).astype(np.int64)
        base0, coefs0 = lin0
        n0 = np.full(grids[0].shape, int(base0 * den), dtype=np.int64)
        for c2, coef in coefs0.items():
            n0 = n0 + int(coef * den) * grids[coords[:-1].index(c2)]
        sols = []
        for delta in (-1, 0, 1):
            cand = roots + delta
            ok = mask & (cand >= 0) & (cand * cand == quot)
            if not ok.any():
                continue
            for sgn in (1, -1):
                tau0 = sgn * cand
                if sgn < 0:
                    okk = ok & (cand > 0)
                else:
                    okk = ok
                num = tau0 - n0
                good = okk & (num % den == 0)
                if not good.any():
                    continue
                x0 = num // den
                good &= (np.abs(x0) <= self.H)
                if not good.any():
                    continue
                idx = np.nonzero(good)
                block = np.empty((idx[0].shape[0], self.d), dtype=np.int64)
                for c in range(self.d):
                    block[:, c] = self.x[c]
                for gi, c in enumerate(coords[:-1]):
                    block[:, c] = grids[gi][idx]
                block[:, coords[-1]] = x0[idx]
                sols.append(block)
        if sols:
            self.batches.append(np.concatenate(sols, axis=0))


def enumerate_box(Q: QuadraticForm, a, H: int, node_budget: int | None = None,
                  jobs: int = 1) -> PointSet:
    """Exhaustive integer solutions of Q(x) = a with |x|_inf <= H.

    Returns a partial set with ``exhaustive=False`` if the node budget is hit.
    ``jobs > 1`` splits the outermost coordinate range across processes.
    """
    if H < 1:
        raise HypothesisViolation("H >= 1")
    A, target = _integer_gram(Q, a)
    if jobs > 1 and Q.dim >= 2:
        chunks = _split_range(-H, H, jobs)
        payload = (A, target, H, node_budget)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_enumerate_chunk, [(payload, ch) for ch in chunks]))
        arrays = [r[0] for r in results]
        nodes = sum(r[1] for r in results)
        exhaustive = all(r[2] for r in results)
        order = results[0][3] if results else ()
        merged = np.concatenate(arrays, axis=0) if arrays else np.zeros((0, Q.dim))
        return PointSet(merged, H, exhaustive, nodes, order)
    search = _BoxSearch(A, target, H, node_budget)
    arr = search.run()
    return PointSet(arr, H, search.exhausted, search.nodes, search.order)


def _split_range(lo: int, hi: int, parts: int):
    total = hi - lo + 1
    step = max(1, total // parts)
    out = []
    start = lo
    while start <= hi:
        end = min(hi, start + step - 1)
        out.append((start, end))
        start = end + 1
    return out


def _enumerate_chunk(args):
    (A, target, H, node_budget), top_range = args
    search = _BoxSearch(A, target, H, node_budget)
    arr = search.run(top_range=top_range)
    return arr, search.nodes, search.exhausted, search.order


def naive_scan(Q: QuadraticForm, a, H: int) -> PointSet:
    """Brute-force oracle: vectorized full scan of the box (small d, H only)."""
    A, target = _integer_gram(Q, a)
    d = len(A)
    rng = np.arange(-H, H + 1, dtype=np.int64)
    grids = np.meshgrid(*([rng] * d), indexing="ij")
    X = np.stack([g.reshape(-1) for g in grids], axis=1)
    An = np.array(A, dtype=np.int64)
    vals = np.einsum("ni,ij,nj->n", X, An, X)
    return PointSet(X[vals == target], H, True, len(X))


# -- automorphs -----------------------------------------------------------------------


def _signed_permutation_automorphs(A: list[list[int]], budget: int) -> list[Automorph]:
    d = len(A)
    out = []
    perm = [-1] * d
    sign = [0] * d
    used = [False] * d
    count = [0]

    def consistent(i: int) -> bool:
        for i2 in range(i):
            lhs = A[i][i2]
            rhs = A[perm[i]][perm[i2]]
            if lhs == 0 and rhs != 0:
                return False
            if lhs != 0:
                if rhs == 0 or abs(lhs) != abs(rhs):
                    return False
                if sign[i] * sign[i2] * rhs != lhs:
                    return False
        return True

    def assign(i: int):
        if count[0] >= budget:
            return
        if i == d:
            count[0] += 1
            rows = [[0] * d for _ in range(d)]
            for k in range(d):
                rows[perm[k]][k] = sign[k]
            out.append(tuple(tuple(r) for r in rows))
            return
        for j in range(d):
            if used[j] or A[j][j] != A[i][i]:
                continue
            used[j] = True
            perm[i] = j
            for s in (1, -1):
                sign[i] = s
                if consistent(i):
                    assign(i + 1)
            used[j] = False
        perm[i] = -1
        sign[i] = 0

    assign(0)
    return [Automorph(m) for m in out]


def _isotropic_vectors(A: list[list[int]], bound: int, cap: int):
    d = len(A)
    out = []
    rng = range(-bound, bound + 1)
    for vec in itertools.product(rng, repeat=d):
        if all(v == 0 for v in vec):
            continue
        g = 0
        for v in vec:
            g = math.gcd(g, v)
        if g != 1:
            continue
        first = next(v for v in vec if v)
        if first < 0:
            continue
        val = sum(A[i][j] * vec[i] * vec[j] for i in range(d) for j in range(d))
        if val == 0:
            out.append(vec)
            if len(out) >= cap:
                break
    return out


def _shear_automorph(A: list[list[int]], v, w) -> tuple | None:
    """Transvection-style unipotent from isotropic v and w with B(v, w) = 0.

    T = I + 2 v (w^T A) - 2 w (v^T A) - 2 (w^T A w) v (v^T A) is integral
    (parameters doubled), preserves the form, and is unipotent.
    """
    d = len(A)
    Av = [sum(A[i][j] * v[j] for j in range(d)) for i in range(d)]
    Aw = [sum(A[i][j] * w[j] for j in range(d)) for i in range(d)]
    if sum(Av[i] * w[i] for i in range(d)) != 0:
        return None
    ww = sum(Aw[i] * w[i] for i in range(d))
    rows = [[0] * d for _ in range(d)]
    for i in range(d):
        for j in range(d):
            e = 2 * v[i] * Aw[j] - 2 * w[i] * Av[j] - 2 * ww * v[i] * Av[j]
            rows[i][j] = (1 if i == j else 0) + e
    return tuple(tuple(r) for r in rows)


def _is_automorph(A: list[list[int]], mat) -> bool:
    d = len(A)
    for i in range(d):
        for j in range(d):
            acc = 0
            for k in range(d):
                if mat[k][i]:
                    acc += mat[k][i] * sum(A[k][t] * mat[t][j] for t in range(d)
                                           if mat[t][j])
            if acc != A[i][j]:
                return False
    return _int_det(mat) in (1, -1)


def _int_det(mat) -> int:
    n = len(mat)
    rows = [[Fraction(x) for x in r] for r in mat]
    det = Fraction(1)
    for c in range(n):
        pivot = next((i for i in range(c, n) if rows[i][c]), None)
        if pivot is None:
            return 0
        if pivot != c:
            rows[c], rows[pivot] = rows[pivot], rows[c]
            det = -det
        det *= rows[c][c]
        inv = 1 / rows[c][c]
        for i in range(c + 1, n):
            if rows[i][c]:
                f = rows[i][c] * inv
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[c])]
    return int(det)


def find_automorphs(Q: QuadraticForm, search_budget: int = 2000) -> list[Automorph]:
    """Best-effort sample of the integral automorph group, exactly verified.

    Not a generating set: signed coordinate symmetries of the gram plus shear
    automorphs along small integral isotropic vectors, deduplicated.
    """
    A, _ = _integer_gram(Q, QuadScalar.zero())
    d = len(A)
    found: dict = {}
    for auto in _signed_permutation_automorphs(A, budget=search_budget):
        if _is_automorph(A, auto.mat):
            found[auto.mat] = auto
    iso = _isotropic_vectors(A, bound=2, cap=24)
    basis = [tuple(1 if i == k else 0 for i in range(d)) for k in range(d)]
    ident = tuple(tuple(1 if i == j else 0 for j in range(d)) for i in range(d))
    tried = 0
    for v in iso:
        for w in basis + iso[:6]:
            if tried >= search_budget:
                break
            tried += 1
            mat = _shear_automorph(A, v, w)
            if mat is None or mat == ident:
                continue
            if _is_automorph(A, mat):
                found.setdefault(mat, Automorph(mat))
    return sorted(found.values(), key=lambda a: a.mat)


def orbit_expand(seed: PointSet, autos: list[Automorph], H_out: int,
                 cap: int = 100000, Q: QuadraticForm | None = None,
                 a=0) -> PointSet:
    """Breadth-first closure of the seed under the automorphs inside a box.

    Every output point is re-verified exactly against Q(x) = a when the form
    is supplied.
    """
    A = target = None
    if Q is not None:
        A, target = _integer_gram(Q, a)

    def value_ok(pt) -> bool:
        if A is None:
            return True
        val = sum(A[i][j] * pt[i] * pt[j] for i in range(len(pt))
                  for j in range(len(pt)))
        return val == target

    seen: set = set()
    frontier = []
    for pt in seed.points:
        if max(abs(c) for c in pt) <= H_out and value_ok(pt):
            seen.add(pt)
            frontier.append(pt)
    frontier.sort()
    while frontier and len(seen) < cap:
        nxt = []
        for pt in frontier:
            for auto in autos:
                img = auto.apply(pt)
                if img in seen or max(abs(c) for c in img) > H_out:
                    continue
                if not value_ok(img):
                    raise HypothesisViolation("automorph left the quadric",
                                              f"point {img}")
                seen.add(img)
                nxt.append(img)
                if len(seen) >= cap:
                    break
            if len(seen) >= cap:
                break
        frontier = sorted(nxt)
    return PointSet.from_tuples(sorted(seen), H_out, False, len(seen))
