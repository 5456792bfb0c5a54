"""Splittings of the lattice space and hyperbolicity certification.

A splitting is either a coordinate cut (E- spanned by indices <= threshold,
E+ by the rest) or a graph over the coordinate cut: each half-space basis
vector may carry a finitely-supported tilt into the other half-space.

A certificate records one-step contraction bounds with the constant kept
explicit (no renorming): forward on E+, backward on E-.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (HilbertOnly, NotContracting, NotSemiInvariant,
                     Precondition, WindowInconclusive)
from .operators import (LatticeOperator, ensure_inverse, restricted_norm)
from .seqspace import (HalfSide, LatticeVector, NormKind, ZERO, basis,
                       combine, project, truncate)

HYPERBOLIC = "HYPERBOLIC"
SHIFTED_HYPERBOLIC = "SHIFTED_HYPERBOLIC"


@dataclass(frozen=True)
class Splitting:
    """``kind`` is "coordinate" or "graph".  Tilt columns are indexed by the
    base coordinate and live entirely in the opposite half-space; away from
    the tilt window the splitting coincides with the coordinate one."""

    kind: str = "coordinate"
    threshold: int = 0
    minus_tilt: dict = field(default_factory=dict)
    plus_tilt: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("coordinate", "graph"):
            raise ValueError(self.kind)
        for n, g in self.minus_tilt.items():
            if n > self.threshold:
                raise ValueError("minus tilt key on plus side")
            if not project(g, HalfSide.MINUS, self.threshold).is_zero():
                raise ValueError("minus tilt must live in E+")
        for m, h in self.plus_tilt.items():
            if m <= self.threshold:
                raise ValueError("plus tilt key on minus side")
            if not project(h, HalfSide.PLUS, self.threshold).is_zero():
                raise ValueError("plus tilt must live in E-")

    def tilt_window(self) -> tuple[int, int]:
        idx = [self.threshold]
        for src in (self.minus_tilt, self.plus_tilt):
            for n, g in src.items():
                idx.append(n)
                lo, hi = g.support_bounds()
                if lo is not None:
                    idx.append(lo)
                if hi is not None:
                    idx.append(hi)
        return min(idx), max(idx)

    def basis_vector(self, n: int) -> LatticeVector:
        """e_n plus its tilt: a basis vector of E- (n <= threshold) or E+."""
        tilt = (self.minus_tilt if n <= self.threshold else self.plus_tilt).get(n)
        if tilt is None or self.kind == "coordinate":
            return basis(n)
        return combine(1.0, basis(n), 1.0, tilt)

    # -- projection -------------------------------------------------------

    def project(self, v: LatticeVector, side: HalfSide) -> LatticeVector:
        if self.kind == "coordinate" or (not self.minus_tilt and not self.plus_tilt):
            return project(v, side, self.threshold)
        t = self.threshold
        wlo, whi = self.tilt_window()
        # everything outside the tilt window splits coordinate-wise
        vt, _ = truncate(v, 1e-16)
        inside = {n: x for n, x in vt.entries.items() if wlo <= n <= whi}
        outside = LatticeVector({n: x for n, x in vt.entries.items()
                                 if not (wlo <= n <= whi)})
        minus_idx = [n for n in range(wlo, t + 1)]
        plus_idx = [n for n in range(t + 1, whi + 1)]
        nm, np_ = len(minus_idx), len(plus_idx)
        size = nm + np_
        mat = np.eye(size)
        # column j of the system = coordinates of the j-th graph basis vector
        for j, n in enumerate(minus_idx):
            g = self.minus_tilt.get(n)
            if g is not None:
                for m, x in g.entries.items():
                    if t < m <= whi:
                        mat[nm + plus_idx.index(m), j] = x
        for j, m in enumerate(plus_idx):
            h = self.plus_tilt.get(m)
            if h is not None:
                for n, x in h.entries.items():
                    if wlo <= n <= t:
                        mat[minus_idx.index(n), nm + j] = x
        rhs = np.zeros(size)
        for n, x in inside.items():
            pos = minus_idx.index(n) if n <= t else nm + plus_idx.index(n)
            rhs[pos] = x
        coeffs = np.linalg.solve(mat, rhs)
        pieces = ZERO
        if side == HalfSide.MINUS:
            for j, n in enumerate(minus_idx):
                if coeffs[j] != 0.0:
                    pieces = combine(1.0, pieces, coeffs[j], self.basis_vector(n))
            return combine(1.0, pieces, 1.0,
                           project(outside, HalfSide.MINUS, t))
        for j, m in enumerate(plus_idx):
            if coeffs[nm + j] != 0.0:
                pieces = combine(1.0, pieces, coeffs[nm + j], self.basis_vector(m))
        return combine(1.0, pieces, 1.0, project(outside, HalfSide.PLUS, t))

    def projector_matrix(self, side: HalfSide, lo: int, hi: int) -> np.ndarray:
        """Dense projector onto the ``side`` factor, in coordinates on
        [lo, hi].  Coordinate splittings give a 0/1 diagonal."""
        size = hi - lo + 1
        if self.kind == "coordinate" or (not self.minus_tilt and not self.plus_tilt):
            diag = np.zeros(size)
            for i, n in enumerate(range(lo, hi + 1)):
                if (n <= self.threshold) == (side == HalfSide.MINUS):
                    diag[i] = 1.0
            return np.diag(diag)
        mat = np.empty((size, size))
        for i, n in enumerate(range(lo, hi + 1)):
            mat[:, i] = self.project(basis(n), side).to_dense(lo, hi)
        return mat

    def side_indices(self, side: HalfSide, lo: int, hi: int) -> list[int]:
        if side == HalfSide.MINUS:
            return list(range(lo, min(hi, self.threshold) + 1))
        return list(range(max(lo, self.threshold + 1), hi + 1))

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "threshold": self.threshold,
            "minus_tilt": {str(n): g.to_json()
                           for n, g in sorted(self.minus_tilt.items())},
            "plus_tilt": {str(n): g.to_json()
                          for n, g in sorted(self.plus_tilt.items())},
        }

    @staticmethod
    def from_json(obj: dict) -> "Splitting":
        return Splitting(
            obj.get("kind", "coordinate"), int(obj.get("threshold", 0)),
            {int(n): LatticeVector.from_json(g)
             for n, g in obj.get("minus_tilt", {}).items()},
            {int(n): LatticeVector.from_json(g)
             for n, g in obj.get("plus_tilt", {}).items()},
        )


@dataclass(frozen=True)
class Certificate:
    """One-step contraction certificate for a splitting on a window."""

    lambda_plus: float
    lambda_minus: float
    const: float
    window: tuple
    residual_plus: float
    residual_minus: float
    proj_norm_minus: float
    proj_norm_plus: float
    norm_kind: NormKind
    splitting: Splitting

    @property
    def rate(self) -> float:
        return max(self.lambda_plus, self.lambda_minus)

    @property
    def lipschitz(self) -> float:
        """Shadowing constant K = C (|P+| + |P-|) / (1 - rate)."""
        return (self.const * (self.proj_norm_plus + self.proj_norm_minus)
                / (1.0 - self.rate))

    def to_json(self) -> dict:
        return {
            "lambda_plus": self.lambda_plus,
            "lambda_minus": self.lambda_minus,
            "const": self.const,
            "window": list(self.window),
            "residual_plus": self.residual_plus,
            "residual_minus": self.residual_minus,
            "proj_norm_minus": self.proj_norm_minus,
            "proj_norm_plus": self.proj_norm_plus,
            "norm": self.norm_kind.value,
            "lipschitz": self.lipschitz,
            "splitting": self.splitting.to_json(),
        }


RESIDUAL_TOL = 1e-9


def _graph_side_bound(op, s, side, direction, lo, hi, margin):
    """L2 bound for op restricted to a graph half-space, on the window."""
    target = op if direction == "forward" else ensure_inverse(op, lo - 8, hi + 8)
    idx = s.side_indices(side, lo + margin, hi - margin)
    if not idx:
        return 0.0, 0.0
    reach = target.reach()
    row_lo, row_hi = lo - reach - 1, hi + reach + 1
    cols = np.column_stack([
        s.basis_vector(n).to_dense(row_lo, row_hi) for n in idx])
    imgs = np.column_stack([
        target.apply(s.basis_vector(n), tail_tol=1e-15).to_dense(row_lo, row_hi)
        for n in idx])
    q, r = np.linalg.qr(cols)
    lam = float(np.linalg.norm(imgs @ np.linalg.inv(r), 2))
    # residual of semi-invariance: leakage into the other half-space
    other = HalfSide.PLUS if side == HalfSide.MINUS else HalfSide.MINUS
    resid = 0.0
    for n in idx:
        img = target.apply(s.basis_vector(n), tail_tol=1e-15)
        leak = s.project(img, other).norm(op.norm_kind)
        resid = max(resid, leak / max(1.0, img.norm(op.norm_kind)))
    return lam, resid


def _projector_norm(s: Splitting, side: HalfSide, kind: NormKind,
                    lo: int, hi: int) -> float:
    if s.kind == "coordinate" or (not s.minus_tilt and not s.plus_tilt):
        return 1.0
    if kind != NormKind.L2:
        raise HilbertOnly("graph projector norms implemented for l2 only")
    idx = list(range(lo, hi + 1))
    cols = np.column_stack([
        s.project(basis(n), side).to_dense(lo - 1, hi + 1) for n in idx])
    return max(1.0, float(np.linalg.norm(cols, 2)))


def certify(op: LatticeOperator, s: Splitting, lo: int, hi: int,
            margin: int | None = None) -> Certificate:
    """Certify generalized hyperbolicity of ``op`` for the splitting ``s`` on
    the window ``[lo, hi]``: forward semi-invariance and contraction on E+,
    backward on E-.  The constant is one (the bounds are one-step)."""
    kind = op.norm_kind
    if s.kind == "graph" and (s.minus_tilt or s.plus_tilt):
        if kind != NormKind.L2:
            raise HilbertOnly("graph certification implemented for l2 only")
        if margin is None:
            wlo, whi = s.tilt_window()
            margin = max(2 * op.reach() + 2,
                         min(abs(lo - wlo), abs(hi - whi)) // 3)
        lam_p, res_p = _graph_side_bound(op, s, HalfSide.PLUS, "forward",
                                         lo, hi, margin)
        lam_m, res_m = _graph_side_bound(op, s, HalfSide.MINUS, "backward",
                                         lo, hi, margin)
        # beyond the tilt window the splitting is coordinate; fold in the
        # analytic rule bounds there
        lam_p = max(lam_p, restricted_norm(op, HalfSide.PLUS, "forward",
                                           hi + 1, hi + 2, s.threshold))
        lam_m = max(lam_m, restricted_norm(op, HalfSide.MINUS, "backward",
                                           lo - 2, lo - 1, s.threshold))
    else:
        t = s.threshold
        inv = ensure_inverse(op, lo - 8, hi + 8)
        res_p = 0.0
        for n in s.side_indices(HalfSide.PLUS, lo, hi):
            img = op.apply(basis(n), tail_tol=1e-15)
            leak = project(img, HalfSide.MINUS, t).norm(kind)
            res_p = max(res_p, leak / max(1.0, img.norm(kind)))
        res_m = 0.0
        for n in s.side_indices(HalfSide.MINUS, lo, hi):
            img = inv.apply(basis(n), tail_tol=1e-15)
            leak = project(img, HalfSide.PLUS, t).norm(kind)
            res_m = max(res_m, leak / max(1.0, img.norm(kind)))
        lam_p = restricted_norm(op, HalfSide.PLUS, "forward", lo, hi, t)
        lam_m = restricted_norm(op, HalfSide.MINUS, "backward", lo, hi, t)
    if res_p > RESIDUAL_TOL or res_m > RESIDUAL_TOL:
        raise NotSemiInvariant("splitting is not semi-invariant on the window",
                               residual_plus=res_p, residual_minus=res_m)
    if lam_p >= 1.0 or lam_m >= 1.0:
        raise NotContracting("restricted bounds are not below one",
                             lambda_plus=lam_p, lambda_minus=lam_m)
    return Certificate(
        lambda_plus=lam_p, lambda_minus=lam_m, const=1.0, window=(lo, hi),
        residual_plus=res_p, residual_minus=res_m,
        proj_norm_minus=_projector_norm(s, HalfSide.MINUS, kind, lo, hi),
        proj_norm_plus=_projector_norm(s, HalfSide.PLUS, kind, lo, hi),
        norm_kind=kind, splitting=s)


# -- transition subspace ------------------------------------------------------


def _kernel_basis(mat: np.ndarray, pivot_tol: float) -> list[np.ndarray]:
    """Null-space basis by Gaussian elimination with partial pivoting."""
    a = mat.copy().astype(float)
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        piv = r + int(np.argmax(np.abs(a[r:, c])))
        if abs(a[piv, c]) <= pivot_tol:
            continue
        a[[r, piv]] = a[[piv, r]]
        a[r] = a[r] / a[r, c]
        for i in range(rows):
            if i != r and a[i, c] != 0.0:
                a[i] -= a[i, c] * a[r]
        pivots.append(c)
        r += 1
    free = [c for c in range(cols) if c not in pivots]
    out = []
    for f in free:
        x = np.zeros(cols)
        x[f] = 1.0
        for i, c in enumerate(pivots):
            x[c] = -a[i, f]
        out.append(x)
    return out


@dataclass(frozen=True)
class TransitionBasis:
    vectors: tuple

    def __len__(self):
        return len(self.vectors)

    def to_json(self) -> dict:
        return {"vectors": [v.to_json() for v in self.vectors]}


def transition_subspace(op: LatticeOperator, s: Splitting, lo: int, hi: int,
                        pivot_tol: float = 1e-10) -> TransitionBasis:
    """Kernel of (project onto E-) o T restricted to E-, on the window: the
    directions of E- that T carries entirely into E+."""
    t = s.threshold
    idx = s.side_indices(HalfSide.MINUS, lo, hi)
    if not idx:
        return TransitionBasis(())
    reach = op.reach()
    row_lo = lo - reach - 1
    images = [s.project(op.apply(s.basis_vector(n), tail_tol=1e-15),
                        HalfSide.MINUS) for n in idx]
    mat = np.column_stack([im.to_dense(row_lo, t) for im in images])
    # scale rows/cols sensibly: pivot tolerance is relative to largest entry
    scale = max(np.abs(mat).max(), 1.0)
    kers = _kernel_basis(mat, pivot_tol * scale)
    vectors = []
    for x in kers:
        x = x / np.abs(x).max()
        # orient: make the largest coefficient positive
        if x[int(np.argmax(np.abs(x)))] < 0:
            x = -x
        v = ZERO
        for coef, n in zip(x, idx):
            if coef != 0.0:
                v = combine(1.0, v, float(coef), s.basis_vector(n))
        v = v.chop(1e-13)
        vectors.append(v)
    return TransitionBasis(tuple(vectors))


def classify(op: LatticeOperator, s: Splitting, lo: int, hi: int,
             cert: Certificate | None = None) -> str:
    """HYPERBOLIC when E- is forward-invariant too; SHIFTED_HYPERBOLIC when a
    transition direction exists; inconclusive windows raise."""
    basis_e0 = transition_subspace(op, s, lo, hi)
    if len(basis_e0) > 0:
        return SHIFTED_HYPERBOLIC
    kind = op.norm_kind
    worst = 0.0
    for n in s.side_indices(HalfSide.MINUS, lo, hi):
        img = op.apply(s.basis_vector(n), tail_tol=1e-15)
        leak = s.project(img, HalfSide.PLUS).norm(kind)
        worst = max(worst, leak / max(1.0, img.norm(kind)))
    if worst <= RESIDUAL_TOL:
        return HYPERBOLIC
    raise WindowInconclusive(
        "E- leaks forward but no transition direction found on the window",
        leak=worst, window=(lo, hi))


def shifted_subspace_span(op: LatticeOperator, seeds, depth: int,
                          rank_tol: float = 1e-10):
    """Orbit vectors T^j v, |j| <= depth, for each seed; verified independent."""
    out = []
    for v in seeds:
        fwd = v
        back = v
        chunk = {0: v}
        for j in range(1, depth + 1):
            fwd = op.apply(fwd, tail_tol=1e-15)
            back = (op.inverse.apply(back, tail_tol=1e-15)
                    if op.inverse is not None else None)
            chunk[j] = fwd
            if back is not None:
                chunk[-j] = back
        out.extend(v for _, v in sorted(chunk.items()))
    los, his = [], []
    for v in out:
        vt, _ = truncate(v, 1e-15)
        if vt.entries:
            los.append(min(vt.entries))
            his.append(max(vt.entries))
    lo, hi = min(los) - 1, max(his) + 1
    mat = np.column_stack([v.to_dense(lo, hi) for v in out])
    rank = np.linalg.matrix_rank(mat, tol=rank_tol)
    if rank < len(out):
        raise Precondition("orbit vectors are not independent on the window",
                           rank=rank, count=len(out))
    return out


def hyperbolic_component_witness(op: LatticeOperator, span, probe,
                                 horizon: int):
    """Growth of the probe's distance to the span under forward iteration.

    Returns rows (k, sigma_component, quotient_component, ratio) where the
    quotient component is the least-squares residual off the span.
    """
    vt = [truncate(v, 1e-15)[0] for v in span]
    los = [min(v.entries) for v in vt if v.entries]
    his = [max(v.entries) for v in vt if v.entries]
    x = probe
    rows = []
    reach = op.reach()
    for k in range(horizon + 1):
        xt, _ = truncate(x, 1e-15)
        lo = min(los + ([min(xt.entries)] if xt.entries else [])) - 1
        hi = max(his + ([max(xt.entries)] if xt.entries else [])) + 1
        mat = np.column_stack([v.to_dense(lo, hi) for v in span])
        rhs = x.to_dense(lo, hi)
        coef, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
        proj = mat @ coef
        resid = float(np.linalg.norm(rhs - proj))
        sig = float(np.linalg.norm(proj))
        rows.append({"k": k, "sigma_component": sig,
                     "quotient_component": resid,
                     "ratio": resid / sig if sig > 0 else float("inf")})
        if k < horizon:
            x = op.apply(x, tail_tol=1e-15)
    return rows


def strong_shifted_partition(projector_bases, c: float,
                             norm_kind: NormKind = NormKind.L2):
    """Group orthogonal projectors (given by orthonormal range bases) so that
    groups have diameter < c and distinct groups are separated by >= c."""
    if norm_kind != NormKind.L2:
        raise HilbertOnly("projector partition requires the l2 norm")
    los, his = [], []
    for vecs in projector_bases:
        for v in vecs:
            vt, _ = truncate(v, 1e-15)
            if vt.entries:
                los.append(min(vt.entries))
                his.append(max(vt.entries))
    lo, hi = min(los) - 1, max(his) + 1
    mats = []
    for vecs in projector_bases:
        b = np.column_stack([v.to_dense(lo, hi) for v in vecs])
        q, _ = np.linalg.qr(b)
        mats.append(q @ q.T)
    n = len(mats)
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = float(np.linalg.norm(mats[i] - mats[j], 2))
    groups: list[list[int]] = []
    for i in range(n):
        placed = False
        for g in groups:
            if min(dist[i, j] for j in g) < c:
                g.append(i)
                placed = True
                break
        if not placed:
            groups.append([i])
    for gi, g in enumerate(groups):
        for other in groups[gi + 1:]:
            for i in g:
                for j in other:
                    if dist[i, j] < c:
                        raise Precondition(
                            "projector family is not separated at scale c",
                            c=c, pair=(i, j), distance=dist[i, j])
        for i in g:
            for j in g:
                if i < j and dist[i, j] >= c:
                    raise Precondition(
                        "group diameter reaches the separation scale",
                        c=c, pair=(i, j), distance=dist[i, j])
    return groups
