"""Periodic points, connecting orbits, and mixing witnesses."""

import math

import pytest

import hyperdyn as hd
from hyperdyn import NormKind, basis, combine

SQRT_8_3 = math.sqrt(8.0 / 3.0)


def test_fixed_point_norm(canonical):
    entry, cert = canonical
    pp = hd.periodic_point(entry.operator, cert, basis(0), 1)
    assert pp.period == 1
    assert pp.point.norm(NormKind.L2) == pytest.approx(SQRT_8_3, abs=1e-8)
    moved = entry.operator.apply(pp.point, tail_tol=1e-16)
    assert combine(1.0, moved, -1.0, pp.point).norm(NormKind.L2) \
        <= pp.residual


def test_period_two_point_is_minimal(canonical):
    entry, cert = canonical
    pp = hd.periodic_point(entry.operator, cert, basis(0), 2)
    assert pp.period == 2
    op = entry.operator
    twice = op.apply(op.apply(pp.point, tail_tol=1e-16), tail_tol=1e-16)
    assert combine(1.0, twice, -1.0, pp.point).norm(NormKind.L2) \
        <= pp.residual
    # after one step the orbit is genuinely elsewhere
    once = op.apply(pp.point, tail_tol=1e-16)
    assert combine(1.0, once, -1.0, pp.point).norm(NormKind.L2) \
        > 100 * pp.residual


def test_non_transition_seed_rejected(canonical):
    entry, cert = canonical
    with pytest.raises(hd.HyperdynError):
        hd.periodic_point(entry.operator, cert, basis(-7), 1)


def test_decompose_recovers_transition_direction(canonical):
    entry, cert = canonical
    pp = hd.periodic_point(entry.operator, cert, basis(0), 2, tol=1e-10)
    v = hd.periodic_decompose(entry.operator, cert, pp.point, 2, tol=1e-8)
    rebuilt = hd.periodic_point(entry.operator, cert, v, 2, tol=1e-10)
    gap = combine(1.0, rebuilt.point, -1.0, pp.point).norm(NormKind.L2)
    assert gap <= 2e-8


def test_bounded_membership(canonical):
    entry, cert = canonical
    pp = hd.periodic_point(entry.operator, cert, basis(0), 1,
                           series_terms=80)
    verdict = hd.bounded_membership(entry.operator, pp.point,
                                    2.0, horizon=20)
    assert verdict.bounded
    assert verdict.max_norm == pytest.approx(SQRT_8_3, abs=1e-6)


def test_connect_lands_on_target_scale(canonical):
    entry, cert = canonical
    v1 = hd.fixed_direction(entry.operator, cert)
    res = hd.connect(entry.operator, cert, v1, v1.scaled(3.0), 25)
    lam = cert.rate
    assert res.correction_norm <= lam ** 25 * 8 * v1.norm(NormKind.L2)
    # the merge defect contracts at the certified rate along the log
    for j, measured, bound in res.merge_log:
        assert measured <= bound * (1.0 + 1e-9)


def test_mixing_witnesses_close_both_ends(canonical):
    entry, cert = canonical
    v1 = hd.periodic_point(entry.operator, cert, basis(0), 1).point
    v2 = hd.periodic_point(entry.operator, cert, basis(0), 2).point
    rows = hd.mixing_experiment(entry.operator, cert, v1, v2, 0.1, [26, 31])
    for row in rows:
        assert row["verified"]
        assert row["residual_at_u"] < 0.1
        assert row["residual_at_v"] < 0.1
