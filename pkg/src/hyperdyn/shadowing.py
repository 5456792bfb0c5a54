"""Pseudo-orbits and shadowing.

Two solvers produce the shadow point of a finite pseudo-orbit: a truncated
series over the defects (evaluated backward, Horner style) and a backward
intersection recursion.  Both come with the explicit Lipschitz constant
K = C (|P+| + |P-|) / (1 - rate) from the certificate, so the distance
guarantee eps <= K * delta is checkable, not asymptotic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import periodic_point
from .errors import NotShifted, Precondition
from .operators import LatticeOperator, ensure_inverse, sparse_matrix
from .seqspace import (HalfSide, LatticeVector, NormKind, basis, combine,
                       from_pairs, truncate)
from .splitting import Certificate, transition_subspace


@dataclass(frozen=True)
class NoiseRule:
    """How defects are injected along a pseudo-orbit.

    kinds: "zero", "single" (one defect of size delta at step ``at``,
    direction e_0 unless given), "uniform" (independent defect of norm delta
    at every step, supported on ``window``), "drift" (defect delta * unit
    vector along the next iterate -- pushes radially outward).
    """
    kind: str = "uniform"
    delta: float = 1e-4
    at: int = 0
    direction: LatticeVector | None = None
    window: tuple = (-6, 6)

    def __post_init__(self):
        if self.kind not in ("zero", "single", "uniform", "drift"):
            raise ValueError(self.kind)
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")


@dataclass(frozen=True)
class PseudoOrbit:
    """Finite list of points indexed n_lo, n_lo+1, ...; ``delta`` is the
    measured maximum defect |x_{n+1} - T x_n|."""
    points: tuple
    n_lo: int = 0
    delta: float = 0.0

    def __len__(self):
        return len(self.points)

    @property
    def n_hi(self) -> int:
        return self.n_lo + len(self.points) - 1

    def to_json(self):
        return {"n_lo": self.n_lo, "delta": self.delta,
                "points": [p.to_json() for p in self.points]}

    @staticmethod
    def from_json(obj) -> "PseudoOrbit":
        return PseudoOrbit(tuple(LatticeVector.from_json(p)
                                 for p in obj["points"]),
                           int(obj.get("n_lo", 0)), float(obj.get("delta", 0.0)))


def measure_delta(op: LatticeOperator, points, kind: NormKind) -> float:
    worst = 0.0
    for a, b in zip(points, points[1:]):
        z = combine(1.0, b, -1.0, op.apply(a, tail_tol=1e-15))
        worst = max(worst, z.norm(kind))
    return worst


def make_pseudo_orbit(op: LatticeOperator, x0: LatticeVector, length: int,
                      noise: NoiseRule, rng=None) -> PseudoOrbit:
    """Iterate forward from x0 for ``length`` points, injecting defects
    according to the noise rule; the returned delta is measured, not
    declared."""
    if length < 2:
        raise Precondition("need at least two points", length=length)
    rng = np.random.default_rng(rng) if not isinstance(
        rng, np.random.Generator) else rng
    kind = op.norm_kind
    pts = [x0]
    for step in range(length - 1):
        nxt = op.apply(pts[-1], tail_tol=1e-15)
        z = None
        if noise.kind == "single" and step == noise.at:
            z = noise.direction if noise.direction is not None else basis(0)
            z = z.scaled(noise.delta / z.norm(kind))
        elif noise.kind == "uniform":
            wlo, whi = noise.window
            coeffs = rng.standard_normal(whi - wlo + 1)
            z = from_pairs((wlo + i, c) for i, c in enumerate(coeffs))
            z = z.scaled(noise.delta / z.norm(kind))
        elif noise.kind == "drift":
            nn = nxt.norm(kind)
            if nn > 0:
                z = nxt.scaled(noise.delta / nn)
        if z is not None:
            nxt = combine(1.0, nxt, 1.0, z)
        pts.append(nxt)
    return PseudoOrbit(tuple(pts), 0, measure_delta(op, pts, kind))


@dataclass(frozen=True)
class ShadowResult:
    point: LatticeVector          # shadow point at index n_lo
    eps: float                    # measured sup_n |w_n - x_n|
    bound: float                  # certified K * delta
    lipschitz: float
    method: str
    window: tuple
    depth: int = 0                # defect terms a geometric cutoff would keep

    def to_json(self):
        return {"point": self.point.to_json(), "eps": self.eps,
                "bound": self.bound, "lipschitz": self.lipschitz,
                "method": self.method, "window": list(self.window),
                "depth": self.depth}


def _dense_norm(arr: np.ndarray, kind: NormKind) -> float:
    if kind == NormKind.L1:
        return float(np.abs(arr).sum())
    if kind == NormKind.SUP:
        return float(np.abs(arr).max()) if arr.size else 0.0
    return float(np.linalg.norm(arr))


def _orbit_window(op, cert, po, tol):
    lo, hi = 0, 0
    for p in po.points:
        pt, _ = truncate(p, 1e-15)
        if pt.entries:
            lo = min(lo, min(pt.entries))
            hi = max(hi, max(pt.entries))
    wlo, whi = cert.splitting.tilt_window() if cert.splitting.kind == "graph" \
        else (0, 0)
    reach = max(op.reach(), 1)
    # minus-side defect terms travel backward once per orbit step
    pad_left = (len(po.points) + 2) * reach + 8
    pad_right = 2 * reach + 8
    return min(lo, wlo) - pad_left, max(hi, whi) + pad_right


def _nominal_depth(cert, po, tol):
    """Number of defect terms a geometric-tail cutoff at ``tol`` would keep.
    The solvers sum every defect on the segment regardless (dropped minus
    terms would re-expand forward), so this is diagnostic only."""
    lam = cert.rate
    if po.delta <= 0.0:
        return 1
    val = tol * (1.0 - lam) / po.delta
    if val >= 1.0:
        return 1
    return max(1, math.ceil(math.log(val) / math.log(lam)))


def _measure(a_mat, xd, w0, kind):
    worst = 0.0
    w = w0
    for x in xd:
        worst = max(worst, _dense_norm(w - x, kind))
        w = a_mat @ w
    return worst


def shadow_series(op: LatticeOperator, cert: Certificate, po: PseudoOrbit,
                  tol: float = 1e-9) -> ShadowResult:
    """Shadow point from the defect series: only the backward (minus) half
    survives at the first index because earlier defects vanish, and it is
    evaluated over all defects, innermost first."""
    kind = cert.norm_kind
    lo, hi = _orbit_window(op, cert, po, tol)
    a_mat = sparse_matrix(op, lo, hi)
    inv_mat = sparse_matrix(ensure_inverse(op, lo, hi), lo, hi)
    pm = cert.splitting.projector_matrix(HalfSide.MINUS, lo, hi)
    xd = [p.to_dense(lo, hi) for p in po.points]
    zs = [xd[i + 1] - a_mat @ xd[i] for i in range(len(xd) - 1)]
    s = np.zeros(hi - lo + 1)
    for j in reversed(range(len(zs))):
        s = inv_mat @ (pm @ zs[j] + s)
    w0 = xd[0] + s
    eps = _measure(a_mat, xd, w0, kind)
    return ShadowResult(LatticeVector.from_dense(w0, lo, chop=1e-300),
                        eps, cert.lipschitz * po.delta, cert.lipschitz,
                        "series", (lo, hi), _nominal_depth(cert, po, tol))


def _side_apply(cert, side, lo, hi):
    """Fast projector application: a boolean mask for coordinate splittings,
    the dense matrix otherwise."""
    s = cert.splitting
    if s.kind == "coordinate" or (not s.minus_tilt and not s.plus_tilt):
        mask = np.array([(n <= s.threshold) == (side == HalfSide.MINUS)
                         for n in range(lo, hi + 1)], dtype=float)
        return lambda v: mask * v
    mat = s.projector_matrix(side, lo, hi)
    return lambda v: mat @ v


def shadow_intersection(op: LatticeOperator, cert: Certificate,
                        po: PseudoOrbit, tol: float = 1e-9) -> ShadowResult:
    """Shadow point by affine-slice intersection.  A forward pass tracks the
    plus-slice through the image of each corrected predecessor (E+ is
    forward invariant, so this stays in E+ and contracts); the backward pass
    then intersects each plus-slice with the minus-slice pulled back from
    the successor's anchor.  The far anchor is the last pseudo-point itself,
    and its error contracts at the certified rate on the way back, landing
    on the same exact orbit the series produces."""
    kind = cert.norm_kind
    lo, hi = _orbit_window(op, cert, po, tol)
    a_mat = sparse_matrix(op, lo, hi)
    inv_mat = sparse_matrix(ensure_inverse(op, lo, hi), lo, hi)
    pm = _side_apply(cert, HalfSide.MINUS, lo, hi)
    pp = _side_apply(cert, HalfSide.PLUS, lo, hi)
    xd = [p.to_dense(lo, hi) for p in po.points]
    # forward pass: plus part of the deviation, driven by the plus defects
    yplus = np.zeros(hi - lo + 1)
    corrected = [xd[0]]
    for m in range(len(xd) - 1):
        z = xd[m + 1] - a_mat @ xd[m]
        yplus = a_mat @ yplus + pp(z)
        corrected.append(xd[m + 1] - yplus)
    # backward pass: anchor at the far end, intersect slices on the way back
    a = corrected[-1]
    for m in reversed(range(len(xd) - 1)):
        a = pp(corrected[m]) + pm(inv_mat @ a)
    eps = _measure(a_mat, xd, a, kind)
    return ShadowResult(LatticeVector.from_dense(a, lo, chop=1e-300),
                        eps, cert.lipschitz * po.delta, cert.lipschitz,
                        "intersection", (lo, hi),
                        _nominal_depth(cert, po, tol))


def fixed_direction(op: LatticeOperator, cert: Certificate,
                    tol: float = 1e-12,
                    series_terms: int | None = None) -> LatticeVector:
    """The canonical fixed point built from the first transition direction;
    raises NOT_SHIFTED when the transition subspace is trivial.  Pass
    ``series_terms`` when the point will be iterated far: each application
    eats one term off the truncated tail."""
    wlo, whi = cert.window
    trans = transition_subspace(op, cert.splitting, wlo, whi)
    if not trans.vectors:
        raise NotShifted("transition subspace is trivial on the window",
                         window=list(cert.window))
    return periodic_point(op, cert, trans.vectors[0], 1, tol=tol,
                          series_terms=series_terms).point


def second_shadow(op: LatticeOperator, cert: Certificate, po: PseudoOrbit,
                  base: ShadowResult, eta: float):
    """A genuinely different orbit shadowing the same pseudo-orbit: shift
    the base shadow by eta times the fixed direction.  Returns the shifted
    result and the exact separation of the two orbits."""
    v1 = fixed_direction(op, cert)
    kind = cert.norm_kind
    sep = eta * v1.norm(kind)
    shifted = combine(1.0, base.point, eta, v1)
    return ShadowResult(shifted, base.eps + sep, base.bound + sep,
                        base.lipschitz, base.method + "+shift",
                        base.window, base.depth), sep


def constant_norm_orbit(op: LatticeOperator, cert: Certificate,
                        horizon: int = 48):
    """Unit vector whose full orbit keeps constant norm (the normalized
    fixed direction); returns it with the worst norm deviation seen over
    the validation horizon."""
    lam = cert.rate
    terms = horizon + max(8, math.ceil(math.log(1e-12) / math.log(lam)))
    v1 = fixed_direction(op, cert, series_terms=terms)
    kind = cert.norm_kind
    v1 = v1.scaled(1.0 / v1.norm(kind))
    dev = 0.0
    fwd = v1
    inv = op.inverse if op.inverse is not None else ensure_inverse(
        op, -4 * horizon, 4 * horizon)
    back = v1
    for _ in range(horizon):
        fwd = op.apply(fwd, tail_tol=1e-15)
        back = inv.apply(back, tail_tol=1e-15)
        dev = max(dev, abs(fwd.norm(kind) - 1.0), abs(back.norm(kind) - 1.0))
    return v1, dev


@dataclass(frozen=True)
class UnboundedReport:
    shadow: ShadowResult
    rows: tuple          # (n, pseudo-orbit norm, shadow-orbit norm)
    growth_ratio: float  # max shadow-orbit norm / initial shadow norm

    def to_json(self):
        return {"shadow": self.shadow.to_json(),
                "rows": [list(r) for r in self.rows],
                "growth_ratio": self.growth_ratio}


def unbounded_point(op: LatticeOperator, cert: Certificate, delta: float,
                    steps: int, tol: float = 1e-9) -> UnboundedReport:
    """Escape-to-infinity experiment: start at the normalized fixed
    direction, push radially outward by delta each step, and shadow the
    resulting pseudo-orbit.  The log tracks pseudo-orbit and shadow-orbit
    norms side by side."""
    kind = cert.norm_kind
    v1, _ = constant_norm_orbit(op, cert, horizon=steps)
    po = make_pseudo_orbit(op, v1, steps + 1, NoiseRule("drift", delta))
    res = shadow_series(op, cert, po, tol)
    lo, hi = res.window
    a_mat = sparse_matrix(op, lo, hi)
    w = res.point.to_dense(lo, hi)
    base = max(_dense_norm(w, kind), 1e-300)
    rows = []
    peak = 0.0
    for n, x in enumerate(po.points):
        wn = _dense_norm(w, kind)
        peak = max(peak, wn)
        rows.append((n, x.norm(kind), wn))
        w = a_mat @ w
    return UnboundedReport(res, tuple(rows), peak / base)


@dataclass(frozen=True)
class ExpansivityVerdict:
    kind: str                   # UNIFORMLY_EXPANSIVE / NOT_EXPANSIVE / INCONCLUSIVE
    n: int | None = None
    bound: float = 0.0
    witness: LatticeVector | None = None

    def to_json(self):
        return {"kind": self.kind, "n": self.n, "bound": self.bound,
                "witness": None if self.witness is None
                else self.witness.to_json()}


def uniform_expansivity_probe(op: LatticeOperator,
                              cert: Certificate | None = None,
                              c: float = 2.0, n_max: int = 6,
                              lo: int = -24, hi: int = 24,
                              pad: int = 16) -> ExpansivityVerdict:
    """Either certify max(|T^n x|, |T^-n x|) >= c |x| for every x supported
    on [lo, hi] (smallest such n is reported), or exhibit a witness whose
    whole orbit stays below c.  The witness route needs a certificate with a
    nontrivial transition subspace; the certified route needs the L2 norm
    (smallest singular value of the stacked powers)."""
    if cert is not None:
        try:
            w, dev = constant_norm_orbit(op, cert, horizon=4 * n_max)
            if 1.0 + dev < c:
                return ExpansivityVerdict("NOT_EXPANSIVE", None, 1.0 + dev, w)
        except NotShifted:
            pass
    if op.norm_kind != NormKind.L2:
        return ExpansivityVerdict("INCONCLUSIVE")
    plo, phi = lo - pad * n_max, hi + pad * n_max
    full = sparse_matrix(op, plo, phi)
    inv = sparse_matrix(ensure_inverse(op, plo, phi), plo, phi)
    keep = slice(lo - plo, hi - plo + 1)
    fwd = full
    bwd = inv
    for n in range(1, n_max + 1):
        stacked = np.vstack([fwd.toarray()[:, keep], bwd.toarray()[:, keep]])
        sigma = np.linalg.svd(stacked, compute_uv=False)[-1]
        bound = float(sigma / math.sqrt(2.0))
        if bound >= c:
            return ExpansivityVerdict("UNIFORMLY_EXPANSIVE", n, bound)
        fwd = full @ fwd
        bwd = inv @ bwd
    return ExpansivityVerdict("INCONCLUSIVE")
