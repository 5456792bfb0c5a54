"""Orbit-level constructions: periodic points from transition directions,
connecting orbits, bounded-set membership, and topological-mixing witnesses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (NoInverse, NotPeriodic, NotTransition, Precondition,
                     SystemSingular)
from .operators import (LatticeOperator, ensure_inverse, sparse_matrix)
from .seqspace import (HalfSide, LatticeVector, NormKind, ZERO, combine,
                       truncate)
from .splitting import Certificate


@dataclass(frozen=True)
class PeriodicPoint:
    point: LatticeVector
    period: int
    residual: float      # certified bound on |T^period p - p|
    terms: int           # series terms per direction

    def to_json(self):
        return {"point": self.point.to_json(), "period": self.period,
                "residual": self.residual, "terms": self.terms}


def _is_minus(cert: Certificate, v: LatticeVector, tol: float) -> bool:
    leak = cert.splitting.project(v, HalfSide.PLUS).norm(cert.norm_kind)
    return leak <= tol * max(1.0, v.norm(cert.norm_kind))


def _is_plus(cert: Certificate, v: LatticeVector, tol: float) -> bool:
    leak = cert.splitting.project(v, HalfSide.MINUS).norm(cert.norm_kind)
    return leak <= tol * max(1.0, v.norm(cert.norm_kind))


def periodic_point(op: LatticeOperator, cert: Certificate, v: LatticeVector,
                   k: int = 1, tol: float = 1e-9,
                   series_terms: int | None = None) -> PeriodicPoint:
    """Periodic point as the two-sided series of k-step iterates of a
    transition direction ``v`` (either v in E- with T v in E+, or v in E+
    with T^{-k} v in E-).  The truncation depth comes from the certificate
    rates, and the minimal period is decided by the factor-10 rule: defects
    at non-periods must exceed ten times the certified residual."""
    kind = cert.norm_kind
    nv = v.norm(kind)
    if nv == 0.0:
        raise NotTransition("zero vector")
    check_tol = 1e-8
    ok = False
    if _is_minus(cert, v, check_tol):
        tv = op.apply(v, tail_tol=1e-15)
        ok = _is_plus(cert, tv, check_tol)
    if not ok and _is_plus(cert, v, check_tol):
        back = v
        inv = ensure_inverse(op, -64, 64) if op.inverse is None else op.inverse
        for _ in range(k):
            back = inv.apply(back, tail_tol=1e-15)
        ok = _is_minus(cert, back, check_tol)
    if not ok:
        raise NotTransition("seed is not a transition direction for period k",
                            k=k)
    lam = cert.rate
    if series_terms is not None:
        terms = series_terms
    else:
        terms = max(1, math.ceil(
            math.log(tol * (1.0 - lam**k) / (2.0 * cert.const * max(nv, 1e-300)))
            / (k * math.log(lam))))
    inv = op.inverse if op.inverse is not None else ensure_inverse(
        op, -8 * (terms * k + 8), 8 * (terms * k + 8))
    p = v
    fwd = v
    back = v
    for _ in range(terms):
        for _ in range(k):
            fwd = op.apply(fwd, tail_tol=1e-16)
            back = inv.apply(back, tail_tol=1e-16)
        p = combine(1.0, p, 1.0, fwd)
        p = combine(1.0, p, 1.0, back)
    residual = (2.0 * cert.const * lam ** (k * terms) * nv
                / (1.0 - lam**k))
    # minimal period by the separation rule
    period = k
    img = p
    for j in range(1, k + 1):
        img = op.apply(img, tail_tol=1e-16)
        defect = combine(1.0, img, -1.0, p).norm(kind)
        if j < k:
            if defect < 10.0 * max(residual, 1e-300):
                period = j
                break
        else:
            if defect > max(10.0 * residual, 1e-12 * nv):
                raise NotPeriodic("series did not close up at period k",
                                  defect=defect, bound=residual)
    return PeriodicPoint(p, period, residual, terms)


def periodic_decompose(op: LatticeOperator, cert: Certificate,
                       x: LatticeVector, k: int,
                       tol: float = 1e-9) -> LatticeVector:
    """Transition direction v = P+ x - T^k(P+ x) of a k-periodic point; the
    series of k-step iterates of v reassembles x (telescoping)."""
    xp = cert.splitting.project(x, HalfSide.PLUS)
    img = xp
    for _ in range(k):
        img = op.apply(img, tail_tol=1e-15)
    v = combine(1.0, xp, -1.0, img)
    kind = cert.norm_kind
    # drop truncation residue at the far end of the window: below-tol
    # entries on the plus side get amplified without bound when the
    # direction is iterated backward
    v = v.chop(tol * max(v.norm(kind), 1e-300))
    if not _is_plus(cert, v, 1e-8):
        raise NotPeriodic("decomposition left the plus half-space")
    # sanity: x must be close to k-periodic for the telescoping to make sense
    xk = x
    for _ in range(k):
        xk = op.apply(xk, tail_tol=1e-15)
    defect = combine(1.0, xk, -1.0, x).norm(kind)
    if defect > max(10.0 * tol, 1e-6) * max(1.0, x.norm(kind)):
        raise NotPeriodic("input is not k-periodic within tolerance",
                          defect=defect, k=k)
    return v


@dataclass(frozen=True)
class BoundedVerdict:
    bounded: bool
    max_norm: float
    horizon: int
    forward_only: bool

    def to_json(self):
        return {"bounded": self.bounded, "max_norm": self.max_norm,
                "horizon": self.horizon, "forward_only": self.forward_only}


def bounded_membership(op: LatticeOperator, x: LatticeVector, bound: float,
                       horizon: int) -> BoundedVerdict:
    """Does the orbit stay inside the ball of radius ``bound`` out to the
    horizon?  Window-relative: only the inspected iterates are claimed."""
    kind = op.norm_kind
    worst = x.norm(kind)
    fwd = x
    for _ in range(horizon):
        fwd = op.apply(fwd, tail_tol=1e-15)
        worst = max(worst, fwd.norm(kind))
        if worst > bound:
            return BoundedVerdict(False, worst, horizon, op.inverse is None)
    forward_only = op.inverse is None
    if not forward_only:
        back = x
        for _ in range(horizon):
            back = op.inverse.apply(back, tail_tol=1e-15)
            worst = max(worst, back.norm(kind))
            if worst > bound:
                return BoundedVerdict(False, worst, horizon, forward_only)
    return BoundedVerdict(True, worst, horizon, forward_only)


def _dense_norm(arr: np.ndarray, kind: NormKind) -> float:
    if kind == NormKind.L1:
        return float(np.abs(arr).sum())
    if kind == NormKind.SUP:
        return float(np.abs(arr).max()) if arr.size else 0.0
    return float(np.linalg.norm(arr))


def _spow(mat, k: int):
    if k == 0:
        import scipy.sparse as sp
        return sp.identity(mat.shape[0], format="csr")
    return mat ** k


def _auto_window(vectors, lo: int, hi: int, pad: int) -> tuple[int, int]:
    for v in vectors:
        vt, _ = truncate(v, 1e-15)
        if vt.entries:
            lo = min(lo, min(vt.entries))
            hi = max(hi, max(vt.entries))
    return lo - pad, hi + pad


@dataclass(frozen=True)
class ConnectResult:
    point: LatticeVector
    correction_norm: float
    merge_defect: float          # |T^N p - y| in the plus direction
    merge_log: tuple             # (j, measured, certified bound)
    window: tuple

    def to_json(self):
        return {"point": self.point.to_json(),
                "correction_norm": self.correction_norm,
                "merge_defect": self.merge_defect,
                "merge_log": [list(r) for r in self.merge_log],
                "window": list(self.window)}


def connect(op: LatticeOperator, cert: Certificate, x: LatticeVector,
            y: LatticeVector, big_n: int, window: tuple | None = None,
            tol: float = 1e-8) -> ConnectResult:
    """Correct x inside E- so that after ``big_n`` steps the orbit lands on
    y's minus component; the plus mismatch then contracts forward at the
    certified rate.  Backward contraction makes the correction of size
    rate**big_n."""
    t = cert.splitting.threshold
    kind = cert.norm_kind
    reach = op.reach()
    if window is None:
        lo, hi = _auto_window([x, y], -8, 8, big_n * max(reach, 1) + 12)
    else:
        lo, hi = window
    a_mat = sparse_matrix(op, lo, hi)
    power = _spow(a_mat, big_n)
    size = hi - lo + 1
    minus_mask = np.array([n <= t for n in range(lo, hi + 1)])
    xd = x.to_dense(lo, hi)
    yd = y.to_dense(lo, hi)
    target = np.where(minus_mask, yd - power @ xd, 0.0)
    cols = power.toarray()[:, minus_mask]
    cols[~minus_mask] = 0.0
    sol, *_ = np.linalg.lstsq(cols, target, rcond=None)
    resid = np.linalg.norm(cols @ sol - target)
    scale = max(1.0, np.linalg.norm(target))
    if resid > tol * scale:
        raise SystemSingular("minus-block system did not solve on the window",
                             residual=float(resid), big_n=big_n)
    a = np.zeros(size)
    a[minus_mask] = sol
    pd = xd + a
    # merge quality: T^N p - y is in E+ and contracts forward
    wn = power @ pd
    bplus = wn - yd
    bnorm = _dense_norm(bplus, kind)
    log = []
    wj, yj = wn.copy(), yd.copy()
    lam = cert.rate
    for j in range(min(big_n, 24) + 1):
        measured = _dense_norm(wj - yj, kind)
        log.append((j, measured, cert.const * lam**j * bnorm))
        wj = a_mat @ wj
        yj = a_mat @ yj
    return ConnectResult(
        LatticeVector.from_dense(pd, lo, chop=1e-300),
        _dense_norm(a, kind), bnorm, tuple(log), (lo, hi))


def mixing_experiment(op: LatticeOperator, cert: Certificate,
                      u: LatticeVector, v: LatticeVector, r: float,
                      n_values, window: tuple | None = None):
    """For each n, a witness w with |w - u| < r and |T^n w - v| < r, built by
    intersecting the forward image of the minus-ball at u (k steps) with the
    backward image of the plus-ball at v (m steps), k + m = n.  Expansion on
    each side makes both residuals of size rate**(n/2)."""
    if op.inverse is None and window is None:
        raise NoInverse("mixing needs the inverse (or an explicit window)")
    t = cert.splitting.threshold
    kind = cert.norm_kind
    n_values = list(n_values)
    reach = max(op.reach(), 1)
    if window is None:
        lo, hi = _auto_window([u, v], -8, 8, max(n_values) * reach + 16)
    else:
        lo, hi = window
    a_mat = sparse_matrix(op, lo, hi)
    inv = ensure_inverse(op, lo, hi)
    ainv = sparse_matrix(inv, lo, hi)
    size = hi - lo + 1
    minus_mask = np.array([n <= t for n in range(lo, hi + 1)])
    ud = u.to_dense(lo, hi)
    vd = v.to_dense(lo, hi)
    rows = []
    for n in n_values:
        k = (n + 1) // 2
        m = n - k
        fwd = _spow(a_mat, k).toarray()
        bwd = _spow(ainv, m).toarray()
        uk = fwd @ ud
        vm = bwd @ vd
        block = np.hstack([fwd[:, minus_mask], -bwd[:, ~minus_mask]])
        rhs = vm - uk
        sol, *_ = np.linalg.lstsq(block, rhs, rcond=None)
        nm = int(minus_mask.sum())
        a = np.zeros(size)
        a[minus_mask] = sol[:nm]
        b = np.zeros(size)
        b[~minus_mask] = sol[nm:]
        ra = _dense_norm(a, kind)
        rb = _dense_norm(b, kind)
        sys_resid = float(np.linalg.norm(block @ sol - rhs))
        rows.append({
            "n": n, "k": k, "m": m,
            "residual_at_u": ra, "residual_at_v": rb,
            "system_residual": sys_resid,
            "verified": bool(ra < r and rb < r and
                             sys_resid < 1e-7 * max(1.0, np.linalg.norm(rhs))),
            "witness": LatticeVector.from_dense(ud + a, lo, chop=1e-300),
        })
    return rows
