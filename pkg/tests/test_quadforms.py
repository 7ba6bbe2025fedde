import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdl.matrices import QMat
from qdl.quadforms import (
    LinearMap,
    QuadraticForm,
    check_conditions,
    kernel_basis,
    restrict,
    signature,
)
from qdl.scalars import QuadScalar
from qdl.symalg import spans_equal


def q2(a, b):
    return QuadScalar(a, b, 2)


def diag_form(*entries):
    return QuadraticForm.diagonal(list(entries))


def test_signature_diag():
    assert signature(diag_form(1, 1, -1)).astuple() == (2, 1)


def test_signature_hyperbolic_plane():
    # Q = 2 x1 x2 has gram [[0,1],[1,0]]
    assert signature(QuadraticForm.from_rows([[0, 1], [1, 0]])).astuple() == (1, 1)


def test_signature_degenerate():
    sig = signature(QuadraticForm.from_rows([[1, 0], [0, 0]]))
    assert sig.astuple() == (1, 0) and sig.rank == 1


def test_signature_float_oracle():
    rng = random.Random(7)
    count = 0
    while count < 200:
        rows = [[0] * 6 for _ in range(6)]
        for i in range(6):
            for j in range(i, 6):
                v = rng.randint(-10, 10)
                rows[i][j] = rows[j][i] = v
        A = np.array(rows, dtype=float)
        eig = np.linalg.eigvalsh(A)
        if min(abs(eig)) < 0.5:
            continue  # keep eigenvalues bounded away from zero
        count += 1
        want = (int((eig > 0).sum()), int((eig < 0).sum()))
        assert signature(QuadraticForm.from_rows(rows)).astuple() == want


small_entries = st.integers(min_value=-6, max_value=6)


@settings(max_examples=60, deadline=None)
@given(st.lists(small_entries, min_size=10, max_size=10),
       st.randoms(use_true_random=False))
def test_signature_congruence_invariant(vals, rnd):
    rows = [[0] * 4 for _ in range(4)]
    k = 0
    for i in range(4):
        for j in range(i, 4):
            rows[i][j] = rows[j][i] = vals[k]
            k += 1
    A = QuadraticForm.from_rows(rows)
    # random invertible rational G: unit triangular with a permutation
    G = QMat.identity(4).tolists()
    for i in range(4):
        for j in range(4):
            if i != j:
                G[i][j] = QuadScalar(rnd.randint(-3, 3))
    for i in range(4):
        G[i][i] = QuadScalar(1)
    Gm = QMat(G)
    if not Gm.det():
        return
    B = QuadraticForm(Gm.T @ A.gram @ Gm)
    assert signature(A).astuple() == signature(B).astuple()


def test_signature_all_small_diagonals():
    for p in range(4):
        for q in range(4 - p):
            if p + q == 0:
                continue
            entries = [1] * p + [-1] * q
            assert signature(diag_form(*entries)).astuple() == (p, q)


def test_kernel_basis_single_coordinate():
    M = LinearMap.from_rows([[1, 0, 0]])
    K = kernel_basis(M)
    want = QMat.from_columns([[0, 1, 0], [0, 0, 1]], nrows=3)
    assert spans_equal(K, want)


def test_kernel_basis_irrational():
    M = LinearMap.from_rows([[1, q2(0, 1), 0]])
    K = kernel_basis(M)
    want = QMat.from_columns([[q2(0, -1), 1, 0], [0, 0, 1]], nrows=3)
    assert (M.rows @ K).is_zero()
    assert spans_equal(K, want)


def test_kernel_basis_two_rows():
    M = LinearMap.from_rows([[1, 0, 0, 0], [0, 1, 0, 0]])
    K = kernel_basis(M)
    want = QMat.from_columns([[0, 0, 1, 0], [0, 0, 0, 1]], nrows=4)
    assert spans_equal(K, want)


def test_restrict_diag():
    Q = diag_form(1, 1, -1)
    B = QMat.from_columns([[0, 1, 0], [0, 0, 1]], nrows=3)
    assert restrict(Q, B).gram == QMat.diagonal([1, -1])


def test_restrict_full_basis_identity():
    Q = QuadraticForm.from_rows([[1, 2], [2, -1]])
    assert restrict(Q, QMat.identity(2)).gram == Q.gram


def test_restrict_flagship():
    Q = diag_form(1, 1, 1, -1, -1)
    M = LinearMap.from_rows([[1, q2(0, 1), 0, 0, 0]])
    R = restrict(Q, kernel_basis(M))
    # substituting x1 = -sqrt2 x2 gives 2 x2^2 + x2^2 = 3 x2^2
    assert R.gram == QMat.diagonal([3, 1, -1, -1])
    assert signature(R).astuple() == (2, 2)


def test_restrict_rejects_dependent_columns():
    Q = diag_form(1, 1)
    with pytest.raises(Exception):
        restrict(Q, QMat.from_columns([[1, 0], [2, 0]], nrows=2))


def test_conditions_flagship():
    Q = diag_form(1, 1, 1, -1, -1)
    M = LinearMap.from_rows([[1, q2(0, 1), 0, 0, 0]])
    rep = check_conditions(Q, M)
    assert rep.dim_ok and rep.rank_ok and rep.indefinite_restricted
    assert rep.irrationality_ok and rep.overall


def test_conditions_rational_map_fails_condition3():
    Q = diag_form(1, 1, 1, -1, -1)
    M = LinearMap.from_rows([[1, 0, 0, 0, 0]])
    rep = check_conditions(Q, M)
    assert not rep.irrationality_ok and not rep.overall
    assert rep.dim_ok and rep.rank_ok and rep.indefinite_restricted


def test_conditions_dimension_boundary():
    # d = 4, s = 2 fails d > 2s at the boundary
    Q = diag_form(1, 1, -1, -1)
    M = LinearMap.from_rows([[1, 0, 0, 0], [0, 1, 0, 0]])
    rep = check_conditions(Q, M)
    assert not rep.dim_ok


def test_restrict_then_signature_basis_independent():
    rng = random.Random(3)
    Q = QuadraticForm.from_rows([[1, 2, 0], [2, -1, 1], [0, 1, 1]])
    B = QMat.from_columns([[1, 0, 1], [0, 1, -1]], nrows=3)
    base = signature(restrict(Q, B)).astuple()
    for _ in range(10):
        # change of subspace basis: B @ C for invertible 2x2 C
        while True:
            C = QMat([[rng.randint(-3, 3) for _ in range(2)] for _ in range(2)])
            if C.det():
                break
        assert signature(restrict(Q, B @ C)).astuple() == base
