"""Splitting recovery under windowed perturbations."""

import numpy as np
import pytest

import hyperdyn as hd
from hyperdyn import NormKind
from hyperdyn.errors import ConeViolated, Precondition


def test_epsilon0_closed_form(canonical):
    _, cert = canonical
    # alpha = (1 - 1/2)/4, budget = alpha (2 - 1/2) / (1 + alpha)^2
    alpha = 0.125
    expected = alpha * 1.5 / (1.0 + alpha) ** 2
    assert hd.epsilon0(cert) == pytest.approx(expected, rel=1e-12)


def test_zero_perturbation_is_fixed_point(canonical):
    entry, cert = canonical
    rep = hd.robust_splitting(entry.operator, cert)
    assert rep.iterations <= 2
    assert not rep.splitting.minus_tilt and not rep.splitting.plus_tilt
    assert rep.certificate.rate == pytest.approx(cert.rate, abs=1e-9)


def test_recovery_matches_independent_tilt(canonical):
    entry, cert = canonical
    eps0 = hd.epsilon0(cert)
    for seed in (0, 1):
        p = hd.random_perturbation(seed, -6, 6, eps0 / 2.0,
                                   kind=NormKind.L2)
        s_op = hd.perturb(entry.operator, p)
        rep = hd.robust_splitting(s_op, cert)
        cols = [n for n in rep.splitting.minus_tilt if -12 <= n <= 0]
        oracle = hd.minus_tilt_oracle(s_op, 0, cols, -80, 40)
        assert hd.tilt_against_oracle(rep, oracle, -80, 40) < 1e-9
        assert rep.certificate.rate < 0.6
        assert hd.shifted_persists(s_op, rep)


def test_contraction_log_ratios(canonical):
    entry, cert = canonical
    p = hd.random_perturbation(4, -6, 6, hd.epsilon0(cert) / 2.0,
                               kind=NormKind.L2)
    rep = hd.robust_splitting(hd.perturb(entry.operator, p), cert)
    incs = [row[1] for row in rep.contraction_log]
    for a, b in zip(incs, incs[1:-1]):
        assert b <= 0.6 * a + 1e-14


def test_oversized_perturbation_rejected(canonical):
    entry, cert = canonical
    p = hd.random_perturbation(0, -4, 4, 0.6, kind=NormKind.L2)
    with pytest.raises((ConeViolated, hd.HyperdynError)):
        hd.robust_splitting(hd.perturb(entry.operator, p), cert)


def test_large_b_budget_guard(canonical):
    entry, cert = canonical
    with pytest.raises(Precondition):
        hd.large_b_experiment(entry.operator, entry.operator, cert,
                              {"samples": 1, "vectors": [], "horizon": 1},
                              big_n=4.0, eps=0.001, delta=0.1)
