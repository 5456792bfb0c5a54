"""Vectors with geometric tails: norms, arithmetic, round-trips."""

import json
import math

import numpy as np
import pytest

import hyperdyn as hd
from hyperdyn import GeometricTail, LatticeVector, NormKind, basis, combine
from hyperdyn.seqspace import from_pairs, project
from hyperdyn import HalfSide


def test_basis_norms():
    e0 = basis(0)
    assert e0.norm(NormKind.L2) == 1.0
    assert e0.norm(NormKind.L1) == 1.0
    assert e0.norm(NormKind.SUP) == 1.0


def test_left_tail_l1_closed_form():
    # sum 2^{-j-1} over j >= 0 is exactly 1
    v = LatticeVector({}, GeometricTail("left", -1, 0.5, 0.5), None)
    assert v.norm(NormKind.L1) == pytest.approx(1.0, abs=1e-15)


def test_tail_value_at():
    t = GeometricTail("left", -1, 0.5, 3.0)
    assert t.value_at(-1) == 3.0
    assert t.value_at(-3) == 0.75
    assert t.value_at(0) == 0.0


def test_combine_is_pointwise():
    v = from_pairs([(0, 1.0), (2, -3.0)])
    w = from_pairs([(0, 0.5), (5, 1.0)])
    u = combine(2.0, v, 1.0, w)
    assert u.value_at(0) == 2.5
    assert u.value_at(2) == -6.0
    assert u.value_at(5) == 1.0


def test_combine_matching_tails():
    a = LatticeVector({}, GeometricTail("left", -1, 0.5, 1.0), None)
    b = LatticeVector({}, GeometricTail("left", -1, 0.5, 2.0), None)
    u = combine(1.0, a, 1.0, b)
    assert u.value_at(-4) == pytest.approx(3.0 * 0.5 ** 3, rel=1e-15)


def test_project_halfspaces():
    v = from_pairs([(-2, 1.0), (0, 2.0), (1, 3.0)])
    minus = project(v, HalfSide.MINUS)
    plus = project(v, HalfSide.PLUS)
    assert minus.value_at(1) == 0.0
    assert minus.value_at(0) == 2.0
    assert plus.value_at(1) == 3.0
    assert plus.value_at(0) == 0.0
    back = combine(1.0, minus, 1.0, plus)
    for n in (-2, 0, 1):
        assert back.value_at(n) == v.value_at(n)


def test_dense_round_trip():
    v = from_pairs([(-3, 0.25), (4, -1.5)])
    arr = v.to_dense(-5, 5)
    w = LatticeVector.from_dense(arr, -5)
    for n in range(-5, 6):
        assert w.value_at(n) == v.value_at(n)


def test_json_round_trip_with_tail():
    v = LatticeVector({2: 1.5}, GeometricTail("left", -1, 0.5, 1.0), None)
    w = LatticeVector.from_json(json.loads(json.dumps(v.to_json())))
    assert w.value_at(2) == 1.5
    assert w.value_at(-6) == v.value_at(-6)
    assert w.norm(NormKind.L2) == pytest.approx(v.norm(NormKind.L2), rel=1e-15)


def test_l2_norm_matches_dense_sampling():
    rng = np.random.default_rng(11)
    for _ in range(20):
        pairs = [(int(n), float(x)) for n, x in
                 zip(rng.integers(-30, 30, 8), rng.standard_normal(8))]
        v = from_pairs(pairs)
        dense = v.to_dense(-40, 40)
        assert v.norm(NormKind.L2) == pytest.approx(
            float(np.linalg.norm(dense)), rel=1e-12)
        assert v.norm(NormKind.SUP) == pytest.approx(
            float(np.abs(dense).max()), rel=1e-12)
