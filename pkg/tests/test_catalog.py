"""The example catalog: every entry behaves as advertised."""

import pytest

import hyperdyn as hd
from hyperdyn import NormKind, basis, combine, from_pairs


def test_names_stable():
    assert "canonical" in hd.catalog.names()
    assert "example7" in hd.catalog.names()
    assert len(hd.catalog.names()) == 10


@pytest.mark.parametrize("name", hd.catalog.names())
def test_entry_certifies_and_classifies(name):
    entry = hd.catalog.build(name)
    if entry.expected is None:
        with pytest.raises(hd.HyperdynError):
            hd.certify(entry.operator, entry.splitting, *entry.window)
        return
    cert = hd.certify(entry.operator, entry.splitting, *entry.window)
    assert cert.rate < 1.0
    got = hd.classify(entry.operator, entry.splitting, *entry.window,
                      cert=cert)
    assert got == entry.expected


def test_example7_eigenrelations():
    """The drift directions e_{-1} + e_n/n and e_0 + e_n/n are carried onto
    each other with factor 1/2 by the backward and forward maps."""
    op = hd.catalog.build("example7").operator
    for n in range(-10, -3):  # backward family, n <= -3
        vn = combine(1.0, basis(-1), 1.0 / n, basis(n))
        target = combine(1.0, basis(-1), 1.0 / (n - 1), basis(n - 1))
        img = op.inverse.apply(vn, tail_tol=1e-16)
        gap = combine(1.0, img, -0.5, target).norm(NormKind.L2)
        assert gap < 1e-12
    for n in range(2, 11):  # forward family, n >= 2
        vn = combine(1.0, basis(0), 1.0 / n, basis(n))
        target = combine(1.0, basis(0), 1.0 / (n + 1), basis(n + 1))
        img = op.apply(vn, tail_tol=1e-16)
        gap = combine(1.0, img, -0.5, target).norm(NormKind.L2)
        assert gap < 1e-12


def test_example8_quotient_growth():
    """Modulo the minus half-space the center direction doubles each step."""
    op = hd.catalog.build("example8").operator
    v = basis(0)
    for k in range(1, 11):
        v = op.apply(v, tail_tol=1e-16)
        assert v.value_at(0) == pytest.approx(2.0 ** k, rel=1e-9)


def test_direct_sum_inherits_shift():
    entry = hd.catalog.build("canonical_plus_diagonal")
    assert entry.expected == hd.SHIFTED_HYPERBOLIC


def test_unknown_entry_raises():
    with pytest.raises(hd.HyperdynError):
        hd.catalog.build("nope")
