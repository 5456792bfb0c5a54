"""Rule-based operators: application, inverses, norm bounds."""

import numpy as np
import pytest

import hyperdyn as hd
from hyperdyn import HalfSide, NormKind, basis, combine
from hyperdyn.operators import (ensure_inverse, restricted_norm,
                                sparse_matrix, windowed_inverse)


@pytest.fixture(scope="module")
def canonical_op():
    return hd.catalog.build("canonical").operator


def test_canonical_weights(canonical_op):
    op = canonical_op
    # weight 2 strictly below the threshold, 1 at the threshold, 1/2 above
    img = op.apply(basis(-3))
    assert img.value_at(-2) == 2.0
    assert op.apply(basis(0)).value_at(1) == 1.0
    assert op.apply(basis(4)).value_at(5) == 0.5


def test_stored_inverse_round_trip(canonical_op):
    hd.verify_inverse(canonical_op, window=24, tol=1e-12)


def test_windowed_inverse_matches_stored(canonical_op):
    rebuilt = windowed_inverse(canonical_op, -32, 32)
    for n in range(-10, 11):
        a = rebuilt.apply(basis(n))
        b = canonical_op.inverse.apply(basis(n))
        assert combine(1.0, a, -1.0, b).norm(NormKind.L2) < 1e-10


def test_windowed_inverse_when_none_is_stored():
    op = hd.catalog.build("example8").operator
    assert op.inverse is None
    inv = ensure_inverse(op, -40, 40)
    for n in range(-8, 9):
        back = inv.apply(op.apply(basis(n), tail_tol=1e-15), tail_tol=1e-15)
        assert combine(1.0, back, -1.0, basis(n)).norm(NormKind.L2) < 1e-9


def test_sparse_matrix_agrees_with_apply(canonical_op):
    lo, hi = -12, 12
    mat = sparse_matrix(canonical_op, lo, hi).toarray()
    for n in range(-8, 9):
        img = canonical_op.apply(basis(n)).to_dense(lo, hi)
        np.testing.assert_allclose(mat[:, n - lo], img, atol=1e-14)


def test_restricted_norm_is_true_bound(canonical_op):
    """The certified half-space bound dominates random unit vectors."""
    rng = np.random.default_rng(5)
    bound = restricted_norm(canonical_op, HalfSide.PLUS, "forward",
                            -24, 24, 0)
    assert bound == 0.5
    for _ in range(25):
        pairs = [(int(n), float(x)) for n, x in
                 zip(rng.integers(1, 24, 6), rng.standard_normal(6))]
        v = hd.from_pairs(pairs)
        if v.norm(NormKind.L2) == 0.0:
            continue
        img = canonical_op.apply(v)
        assert img.norm(NormKind.L2) <= bound * v.norm(NormKind.L2) + 1e-12


def test_perturbation_norm_is_exact(canonical_op):
    p = hd.random_perturbation(3, -5, 5, 0.01, kind=NormKind.L2)
    assert p.measured_norm(NormKind.L2) == pytest.approx(0.01, rel=1e-12)
    s_op = hd.perturb(canonical_op, p)
    # perturbed columns differ, far columns do not
    moved = combine(1.0, s_op.apply(basis(0)), -1.0,
                    canonical_op.apply(basis(0)))
    assert moved.norm(NormKind.L2) > 0.0
    far = combine(1.0, s_op.apply(basis(30)), -1.0,
                  canonical_op.apply(basis(30)))
    assert far.norm(NormKind.L2) == 0.0


def test_operator_norm_canonical(canonical_op):
    assert hd.operator_norm(canonical_op, -24, 24) == pytest.approx(2.0)


def test_no_inverse_error():
    op = hd.catalog.build("summing_basis").operator
    with pytest.raises(hd.HyperdynError):
        ensure_inverse(op, -24, 24)
