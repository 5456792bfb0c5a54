"""Ready-made operators: weighted shifts, the transport model, the two
exceptional-core examples, composed and interleaved constructions.

Each entry carries the operator, its natural splitting, the expected
classification, and a suggested certification window.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BadPotential, BadRates, NormConstraint, Precondition
from .operators import (LatticeOperator, WeightRule, constant_rule,
                        dense_matrix, drift_rule, operator_norm)
from .seqspace import (GeometricTail, HalfSide, LatticeVector, NormKind,
                       basis, combine, project)
from .splitting import HYPERBOLIC, SHIFTED_HYPERBOLIC, Splitting


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    operator: LatticeOperator
    splitting: Splitting
    expected: str | None
    window: tuple = (-48, 48)
    notes: str = ""


# -- classical weighted shifts ------------------------------------------------


def classical_shift(lam: float = 0.5, sigma: float = 2.0, a0: float = 1.0,
                    weights: dict | None = None,
                    norm_kind: NormKind = NormKind.L2) -> CatalogEntry:
    """Bilateral weighted shift: weight ``sigma`` on n <= -1, ``a0`` at zero,
    ``lam`` on n >= 1.  Optional per-index overrides must stay inside the
    open bands (1/lam, sigma] below zero and [1/sigma, lam) above."""
    if not (0.0 < lam < 1.0 < sigma):
        raise BadRates("need 0 < lam < 1 < sigma", lam=lam, sigma=sigma)
    if a0 == 0.0:
        raise BadRates("zero center weight is not invertible")
    weights = dict(weights or {})
    for n, a in weights.items():
        if n < 0 and not (1.0 / lam < a <= sigma):
            raise BadRates("weight outside the expansion band", index=n, weight=a)
        if n > 0 and not (1.0 / sigma <= a < lam):
            raise BadRates("weight outside the contraction band", index=n, weight=a)
    def w_at(n):
        if n in weights:
            return weights[n]
        return sigma if n < 0 else (a0 if n == 0 else lam)
    core = {0: basis(1, a0)}
    for n in weights:
        core[n] = basis(n + 1, w_at(n))
    inv_core = {1: basis(0, 1.0 / a0)}
    for n in weights:
        inv_core[n + 1] = basis(n, 1.0 / w_at(n))
    inv = LatticeOperator(
        (constant_rule(1.0 / sigma, hi=0, step=-1),
         constant_rule(1.0 / lam, lo=2, step=-1)),
        inv_core, norm_kind, None)
    op = LatticeOperator(
        (constant_rule(sigma, hi=-1), constant_rule(lam, lo=1)),
        core, norm_kind, inv)
    return CatalogEntry("classical_shift", op, Splitting("coordinate", 0),
                        SHIFTED_HYPERBOLIC,
                        notes=f"lam={lam} sigma={sigma} a0={a0}")


def isometric_shift(norm_kind: NormKind = NormKind.L2) -> CatalogEntry:
    """Unweighted bilateral shift: bounded orbits everywhere, certification
    fails with NOT_CONTRACTING (its rates sit exactly at one)."""
    inv = LatticeOperator((constant_rule(1.0, step=-1),), {}, norm_kind, None)
    op = LatticeOperator((constant_rule(1.0, step=1),), {}, norm_kind, inv)
    return CatalogEntry("isometric_shift", op, Splitting("coordinate", 0),
                        None, notes="NOT_CONTRACTING exhibit")


def hyperbolic_diagonal(minus_rate: float = 2.0, plus_rate: float = 0.5,
                        norm_kind: NormKind = NormKind.L2) -> CatalogEntry:
    if not (abs(plus_rate) < 1.0 < abs(minus_rate)):
        raise BadRates("need |plus_rate| < 1 < |minus_rate|",
                       minus_rate=minus_rate, plus_rate=plus_rate)
    inv = LatticeOperator(
        (constant_rule(1.0 / minus_rate, hi=0, step=0),
         constant_rule(1.0 / plus_rate, lo=1, step=0)), {}, norm_kind, None)
    op = LatticeOperator(
        (constant_rule(minus_rate, hi=0, step=0),
         constant_rule(plus_rate, lo=1, step=0)), {}, norm_kind, inv)
    return CatalogEntry("hyperbolic_diagonal", op, Splitting("coordinate", 0),
                        HYPERBOLIC)


def transport_discrete(v_neg: float, v_pos: float,
                       norm_kind: NormKind = NormKind.L2) -> CatalogEntry:
    """Discrete transport with a two-level potential: weight 1 + V(n-1) where
    V = v_neg below zero and v_pos at and above zero."""
    if not v_neg > 0.0:
        raise BadPotential("need V > 0 below zero", v_neg=v_neg)
    if not (-2.0 < v_pos < 0.0) or v_pos == -1.0:
        raise BadPotential("need -2 < V < 0 (and V != -1) above zero",
                           v_pos=v_pos)
    a_minus, a_plus = 1.0 + v_neg, 1.0 + v_pos
    inv = LatticeOperator(
        (constant_rule(1.0 / a_minus, hi=1, step=-1),
         constant_rule(1.0 / a_plus, lo=2, step=-1)), {}, norm_kind, None)
    op = LatticeOperator(
        (constant_rule(a_minus, hi=0), constant_rule(a_plus, lo=1)),
        {}, norm_kind, inv)
    return CatalogEntry("transport_discrete", op, Splitting("coordinate", 0),
                        SHIFTED_HYPERBOLIC,
                        notes=f"V=({v_neg},{v_pos})")


# -- the exceptional-core examples -------------------------------------------


def example7(norm_kind: NormKind = NormKind.L2) -> CatalogEntry:
    """Shifted operator with rational-drift tails and the invariant plane
    spanned by e_{-1}, e_0 (both one-step contracted in their directions)."""
    core = {
        -3: LatticeVector({-2: 6.0, -1: -6.0}),
        -2: basis(1),
        -1: basis(-1, 2.0),
        0: basis(0, 0.5),
        1: LatticeVector({0: 0.5, 2: 0.25}),
    }
    inv_core = {
        -2: LatticeVector({-1: 0.5, -3: 1.0 / 6.0}),
        -1: basis(-1, 0.5),
        0: basis(0, 2.0),
        1: basis(-2, 1.0),
        2: LatticeVector({1: 4.0, 0: -4.0}),
    }
    inv = LatticeOperator(
        (drift_rule(0.5, hi=-3, step=-1, num_off=0, den_off=-1),
         drift_rule(2.0, lo=3, step=-1, num_off=0, den_off=-1)),
        inv_core, norm_kind, None)
    op = LatticeOperator(
        (drift_rule(2.0, hi=-4, step=1, num_off=0, den_off=1),
         drift_rule(0.5, lo=2, step=1, num_off=0, den_off=1)),
        core, norm_kind, inv)
    return CatalogEntry("example7", op, Splitting("coordinate", -1),
                        SHIFTED_HYPERBOLIC,
                        notes="transition e_-2; invariant plane <e_-1, e_0>")


def example8(norm_kind: NormKind = NormKind.L2) -> CatalogEntry:
    """Shifted operator whose center column feeds a geometric tail; shipped
    forward-only (inverse reconstructed on a window when needed)."""
    w = GeometricTail("left", -1, 0.5, 0.5)
    core = {
        -1: basis(1, 7.0),
        0: LatticeVector({0: 2.0}, w, None),
    }
    op = LatticeOperator(
        (constant_rule(7.0, hi=-2), constant_rule(1.0 / 7.0, lo=1)),
        core, norm_kind, None)
    return CatalogEntry("example8", op, Splitting("coordinate", 0),
                        SHIFTED_HYPERBOLIC,
                        notes="forward-only; quotient direction e_0 doubles")


# -- composition -------------------------------------------------------------


def _compose_rules(ra: WeightRule, rb: WeightRule) -> WeightRule | None:
    """Rule for A o B on the region where B uses rb and A uses ra."""
    lo = rb.lo
    hi = rb.hi
    if ra.lo is not None:
        cand = ra.lo - rb.step
        lo = cand if lo is None else max(lo, cand)
    if ra.hi is not None:
        cand = ra.hi - rb.step
        hi = cand if hi is None else min(hi, cand)
    if lo is not None and hi is not None and lo > hi:
        return None
    parity = rb.parity
    if ra.parity is not None:
        pa = (ra.parity - rb.step) % 2
        if parity is None:
            parity = pa
        elif parity != pa:
            return None
    step = ra.step + rb.step
    if ra.kind == "constant" and rb.kind == "constant":
        return WeightRule("constant", ra.value * rb.value, lo=lo, hi=hi,
                          step=step, parity=parity)
    if ra.kind == "constant":
        return WeightRule("rational", ra.value * rb.value, lo=lo, hi=hi,
                          step=step, num_off=rb.num_off, den_off=rb.den_off,
                          parity=parity)
    if rb.kind == "constant":
        return WeightRule("rational", ra.value * rb.value, lo=lo, hi=hi,
                          step=step, num_off=ra.num_off + rb.step,
                          den_off=ra.den_off + rb.step, parity=parity)
    raise Precondition("cannot compose two rational rules symbolically")


def compose(a: LatticeOperator, b: LatticeOperator,
            compose_inverse: bool = True) -> LatticeOperator:
    """The operator A o B (apply B first)."""
    core_idx = set(b.core)
    for n in range(-b.check_window, b.check_window + 1):
        if n in b.core:
            continue
        if n + b.rule_at(n).step in a.core:
            core_idx.add(n)
    for j in a.core:
        # rule columns of B landing on A's core, beyond the probe window
        for r in b.rules:
            n = j - r.step
            if r.contains(n) and n not in b.core:
                core_idx.add(n)
    core = {n: a.apply(b.column(n), tail_tol=1e-15) for n in core_idx}
    rules = []
    for rb in b.rules:
        for ra in a.rules:
            r = _compose_rules(ra, rb)
            if r is not None:
                rules.append(r)
    inv = None
    if compose_inverse and a.inverse is not None and b.inverse is not None:
        inv = compose(b.inverse, a.inverse, compose_inverse=False)
    return LatticeOperator(tuple(rules), core, b.norm_kind, inv)


def us_construction(h_entry: CatalogEntry | None = None,
                    u: LatticeOperator | None = None,
                    window: tuple = (-32, 32)) -> CatalogEntry:
    """Compose a norm-one operator U with a hyperbolic operator H.  U must
    keep the stable side inside itself and pull the unstable side into
    itself backward; expansion/contraction of H must clear the band so the
    composition stays certified."""
    if h_entry is None:
        h_entry = hyperbolic_diagonal()
    h = h_entry.operator
    if u is None:
        u_inv = LatticeOperator((constant_rule(1.0, step=-1),), {},
                                h.norm_kind, None)
        u = LatticeOperator((constant_rule(1.0, step=1),), {}, h.norm_kind,
                            u_inv)
    lo, hi = window
    u_norm = operator_norm(u, lo, hi)
    if u_norm > 1.0 + 1e-12:
        raise NormConstraint("U must have norm at most one", norm=u_norm)
    t = h_entry.splitting.threshold
    lam_s = max(project(u.apply(basis(n)), HalfSide.MINUS, t).norm(h.norm_kind)
                for n in range(t + 1, hi + 1))
    if lam_s > 1e-12:
        raise NormConstraint("U must keep E+ inside E+", leak=lam_s)
    if u.inverse is not None:
        leak = max(project(u.inverse.apply(basis(n)), HalfSide.PLUS,
                           t).norm(h.norm_kind)
                   for n in range(lo, t + 1))
        if leak > 1e-12:
            raise NormConstraint("U backward must keep E- inside E-",
                                 leak=leak)
    op = compose(u, h)
    moved = any(
        not project(op.apply(basis(n)), HalfSide.PLUS, t).is_zero()
        for n in range(lo, t + 1))
    expected = SHIFTED_HYPERBOLIC if moved else HYPERBOLIC
    return CatalogEntry("us_construction", op, h_entry.splitting, expected,
                        notes="U o H")


# -- interleaved / summing-basis constructions --------------------------------


def interleaved_support(alpha: float = 0.25, beta: float = 4.0,
                        norm_kind: NormKind = NormKind.L2) -> CatalogEntry:
    """Two chains meeting through one transition step (the expanding chain
    sits on n <= -1, the contracting one on n >= 0, joined by e_{-1} -> 2e_0)."""
    if not (0.0 < alpha < 0.5):
        raise BadRates("need 0 < alpha < 1/2", alpha=alpha)
    if not (beta > 2.0):
        raise BadRates("need beta > 2", beta=beta)
    inv = LatticeOperator(
        (constant_rule(1.0 / beta, hi=-1, step=-1),
         constant_rule(1.0 / alpha, lo=1, step=-1)),
        {0: basis(-1, 0.5)}, norm_kind, None)
    op = LatticeOperator(
        (constant_rule(beta, hi=-2), constant_rule(alpha, lo=0)),
        {-1: basis(0, 2.0)}, norm_kind, inv)
    return CatalogEntry("interleaved_support", op, Splitting("coordinate", -1),
                        SHIFTED_HYPERBOLIC,
                        notes=f"alpha={alpha} beta={beta}")


def summing_basis_shift() -> CatalogEntry:
    """Forward shift expressed in the summing basis, under the sup norm:
    (x_1, x_2, ...) -> (x_1, x_1, x_2, ...) on the right half-line, identity
    elsewhere.  A bounded non-hyperbolic component, not certified."""
    op = LatticeOperator(
        (constant_rule(1.0, hi=0, step=0), constant_rule(1.0, lo=2, step=1)),
        {1: LatticeVector({1: 1.0, 2: 1.0})}, NormKind.SUP, None)
    return CatalogEntry("summing_basis_shift", op, Splitting("coordinate", 0),
                        None, notes="building block; norm one, not certified")


# -- direct sums --------------------------------------------------------------


def _remap_rule(r: WeightRule, parity: int) -> WeightRule:
    lo = None if r.lo is None else 2 * r.lo + parity
    hi = None if r.hi is None else 2 * r.hi + parity
    if r.kind == "constant":
        return WeightRule("constant", r.value, lo=lo, hi=hi, step=2 * r.step,
                          parity=parity)
    return WeightRule("rational", r.value, lo=lo, hi=hi, step=2 * r.step,
                      num_off=2 * r.num_off - parity,
                      den_off=2 * r.den_off - parity, parity=parity)


def _remap_operator(op: LatticeOperator, parity: int) -> LatticeOperator:
    if op is None:
        return None
    rules = [_remap_rule(r, parity) for r in op.rules]
    if parity == 0:
        rules.append(constant_rule(0.0, step=0, parity=1))
    else:
        rules.append(constant_rule(0.0, step=0, parity=0))
    core = {}
    for j, col in op.core.items():
        from .seqspace import truncate as _trunc
        colt, _ = _trunc(col, 1e-14)
        core[2 * j + parity] = LatticeVector(
            {2 * n + parity: x for n, x in colt.entries.items()})
    return LatticeOperator(tuple(rules), core, op.norm_kind, None)


def direct_sum(e1: CatalogEntry, e2: CatalogEntry) -> CatalogEntry:
    """Interleave two operators on even/odd indices.  Both splittings must be
    coordinate cuts at the same threshold."""
    s1, s2 = e1.splitting, e2.splitting
    if s1.kind != "coordinate" or s2.kind != "coordinate" or \
            s1.threshold != s2.threshold:
        raise Precondition("direct sum needs matching coordinate splittings")
    if e1.operator.norm_kind != e2.operator.norm_kind:
        raise Precondition("direct sum needs a common norm")
    t = s1.threshold
    a = _remap_operator(e1.operator, 0)
    b = _remap_operator(e2.operator, 1)
    rules = tuple(r for r in a.rules if r.value != 0.0) + \
        tuple(r for r in b.rules if r.value != 0.0)
    core = {**a.core, **b.core}
    inv = None
    if e1.operator.inverse is not None and e2.operator.inverse is not None:
        ia = _remap_operator(e1.operator.inverse, 0)
        ib = _remap_operator(e2.operator.inverse, 1)
        inv = LatticeOperator(
            tuple(r for r in ia.rules if r.value != 0.0)
            + tuple(r for r in ib.rules if r.value != 0.0),
            {**ia.core, **ib.core}, e1.operator.norm_kind, None)
    op = LatticeOperator(rules, core, e1.operator.norm_kind, inv)
    if SHIFTED_HYPERBOLIC in (e1.expected, e2.expected):
        expected = SHIFTED_HYPERBOLIC
    elif e1.expected == e2.expected == HYPERBOLIC:
        expected = HYPERBOLIC
    else:
        expected = None
    return CatalogEntry(f"direct_sum({e1.name},{e2.name})", op,
                        Splitting("coordinate", 2 * t + 1), expected)


# -- registry -----------------------------------------------------------------


BUILDERS = {
    "canonical": lambda: classical_shift(0.5, 2.0, 1.0),
    "isometric": isometric_shift,
    "hyperbolic_diagonal": hyperbolic_diagonal,
    "transport": lambda: transport_discrete(1.0, -0.5),
    "example7": example7,
    "example8": example8,
    "us": us_construction,
    "interleaved": interleaved_support,
    "summing_basis": summing_basis_shift,
    "canonical_plus_diagonal": lambda: direct_sum(
        classical_shift(0.5, 2.0, 1.0), hyperbolic_diagonal()),
}


def names() -> list[str]:
    return sorted(BUILDERS)


def build(name: str) -> CatalogEntry:
    if name not in BUILDERS:
        raise Precondition("unknown catalog entry", name=name)
    return BUILDERS[name]()
