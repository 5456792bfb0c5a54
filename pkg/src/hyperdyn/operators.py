"""Lattice operators: weight rules on half-lines plus finite core columns.

An operator acts on basis vectors.  Away from a finite exceptional core it is
a weighted shift ``e_n -> w(n) e_{n+step}`` given by parametric rules
(constant weight, or a rational drift ``c*(n+p)/(n+q)``); on the core it has
arbitrary explicit columns (which may carry geometric tails).  The inverse,
when present, is stored in the same representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (NoInverse, NormMismatch, TailRuleMismatch)
from .seqspace import (GeometricTail, HalfSide, LatticeVector, NormKind, ZERO,
                       basis, combine, truncate)

_INF = float("inf")


@dataclass(frozen=True)
class WeightRule:
    """``e_n -> weight(n) * e_{n+step}`` on the region ``lo <= n <= hi``
    (``None`` bound = unbounded), optionally restricted to one parity class.

    ``kind`` is "constant" (weight = ``value``) or "rational"
    (weight = ``value * (n + num_off) / (n + den_off)``).
    """

    kind: str
    value: float
    lo: int | None = None
    hi: int | None = None
    step: int = 1
    num_off: int = 0
    den_off: int = 1
    parity: int | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "rational"):
            raise ValueError(f"unknown rule kind {self.kind!r}")
        if self.kind == "rational":
            pole = -self.den_off
            if self._in_region(pole):
                raise ValueError("rational rule region contains the pole")
            # the weight must keep a fixed nonzero sign over the region
            for n in self._sample_indices():
                if self.weight(n) == 0.0 or not math.isfinite(self.weight(n)):
                    raise ValueError(f"rational weight degenerate at n={n}")

    def _in_region(self, n: int) -> bool:
        if self.lo is not None and n < self.lo:
            return False
        if self.hi is not None and n > self.hi:
            return False
        return True

    def contains(self, n: int) -> bool:
        if not self._in_region(n):
            return False
        return self.parity is None or n % 2 == self.parity

    def weight(self, n: int) -> float:
        if self.kind == "constant":
            return self.value
        return self.value * (n + self.num_off) / (n + self.den_off)

    def _sample_indices(self, sub_lo: int | None = None,
                        sub_hi: int | None = None) -> list[int]:
        lo = self.lo if sub_lo is None else (sub_lo if self.lo is None
                                             else max(self.lo, sub_lo))
        hi = self.hi if sub_hi is None else (sub_hi if self.hi is None
                                             else min(self.hi, sub_hi))
        pts: list[int] = []
        if lo is not None and hi is not None:
            if lo > hi:
                return []
            pts = list(range(lo, min(hi, lo + 63) + 1))
            pts += list(range(max(lo, hi - 63), hi + 1))
        elif lo is not None:
            pts = list(range(lo, lo + 64))
        elif hi is not None:
            pts = list(range(hi - 63, hi + 1))
        else:
            pts = list(range(-32, 32))
        return sorted({n for n in pts
                       if self.parity is None or n % 2 == self.parity})

    def sup_abs(self, sub_lo: int | None = None, sub_hi: int | None = None) -> float:
        """Certified sup of |weight| over (a sub-range of) the region.

        For a rational rule the weight is monotone on each side of the pole,
        so the sup is attained at a finite endpoint or at the limit |value|;
        endpoint samples plus the limit cover both cases.
        """
        pts = self._sample_indices(sub_lo, sub_hi)
        if not pts:
            return 0.0
        best = max(abs(self.weight(n)) for n in pts)
        lo = self.lo if sub_lo is None else max(self.lo or sub_lo, sub_lo)
        hi = self.hi if sub_hi is None else min(self.hi if self.hi is not None
                                                else sub_hi, sub_hi)
        unbounded = (lo is None) or (hi is None)
        if self.kind == "rational" and unbounded:
            best = max(best, abs(self.value))
        return best

    def to_json(self) -> dict:
        obj = {"kind": self.kind, "value": self.value, "step": self.step}
        if self.lo is not None:
            obj["from"] = self.lo
        if self.hi is not None:
            obj["upto"] = self.hi
        if self.kind == "rational":
            obj["num_offset"] = self.num_off
            obj["den_offset"] = self.den_off
        if self.parity is not None:
            obj["parity"] = self.parity
        return obj

    @staticmethod
    def from_json(obj: dict) -> "WeightRule":
        kind = obj.get("kind", "constant")
        if kind == "rational_drift":
            kind, num, den = "rational", 0, 1
        else:
            num = int(obj.get("num_offset", 0))
            den = int(obj.get("den_offset", 1))
        return WeightRule(
            kind, float(obj["value"]),
            lo=obj.get("from"), hi=obj.get("upto"),
            step=int(obj.get("step", 1)), num_off=num, den_off=den,
            parity=obj.get("parity"),
        )


def constant_rule(value: float, lo=None, hi=None, step=1, parity=None) -> WeightRule:
    return WeightRule("constant", value, lo=lo, hi=hi, step=step, parity=parity)


def drift_rule(value: float, lo=None, hi=None, step=1,
               num_off=0, den_off=1) -> WeightRule:
    return WeightRule("rational", value, lo=lo, hi=hi, step=step,
                      num_off=num_off, den_off=den_off)


@dataclass(frozen=True)
class LatticeOperator:
    """Rules + core columns; core overrides the rules where both apply."""

    rules: tuple
    core: dict = field(default_factory=dict)
    norm_kind: NormKind = NormKind.L2
    inverse: "LatticeOperator | None" = None
    check_window: int = 48

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "core", dict(self.core))
        self._validate_coverage()

    def _validate_coverage(self):
        lo, hi = -self.check_window, self.check_window
        if self.core:
            lo = min(lo, min(self.core) - 8)
            hi = max(hi, max(self.core) + 8)
        for r in self.rules:
            if r.lo is not None:
                lo = min(lo, r.lo - 8)
                hi = max(hi, r.lo + 8)
            if r.hi is not None:
                lo = min(lo, r.hi - 8)
                hi = max(hi, r.hi + 8)
        for n in range(lo, hi + 1):
            if n in self.core:
                continue
            hits = [r for r in self.rules if r.contains(n)]
            if len(hits) != 1:
                raise ValueError(
                    f"index {n} covered by {len(hits)} rules (need exactly 1 "
                    "outside the core)")
        has_left = any(r.lo is None for r in self.rules)
        has_right = any(r.hi is None for r in self.rules)
        if not (has_left and has_right):
            raise ValueError("rules must cover both infinite directions")

    # -- columns ----------------------------------------------------------

    def rule_at(self, n: int) -> WeightRule:
        for r in self.rules:
            if r.contains(n):
                return r
        raise ValueError(f"no rule covers index {n}")

    def is_core(self, n: int) -> bool:
        return n in self.core

    def column(self, n: int) -> LatticeVector:
        if n in self.core:
            return self.core[n]
        r = self.rule_at(n)
        return basis(n + r.step, r.weight(n))

    def reach(self) -> int:
        """Max displacement of finite support under one application."""
        m = max((abs(r.step) for r in self.rules), default=1)
        for j, col in self.core.items():
            for k in col.entries:
                m = max(m, abs(k - j))
            for t in (col.left_tail, col.right_tail):
                if t is not None:
                    m = max(m, abs(t.start - j))
        return m

    # -- application ------------------------------------------------------

    def apply(self, v: LatticeVector, tail_tol: float | None = None) -> LatticeVector:
        ent: dict[int, float] = {}
        tail_pieces: list[tuple[float, LatticeVector]] = []

        def feed_entry(n: int, x: float):
            if n in self.core:
                col = self.core[n]
                for m, y in col.entries.items():
                    ent[m] = ent.get(m, 0.0) + x * y
                if col.left_tail is not None or col.right_tail is not None:
                    tail_pieces.append(
                        (x, LatticeVector({}, col.left_tail, col.right_tail)))
            else:
                r = self.rule_at(n)
                m = n + r.step
                ent[m] = ent.get(m, 0.0) + x * r.weight(n)

        for n, x in v.entries.items():
            feed_entry(n, x)

        for t in (v.left_tail, v.right_tail):
            if t is None:
                continue
            rule = self._tail_rule(t)
            if rule is not None:
                nt = GeometricTail(t.side, t.start + rule.step, t.ratio,
                                   t.coeff * rule.value)
                tail_pieces.append((1.0, LatticeVector(
                    {}, nt if t.side == "left" else None,
                    nt if t.side == "right" else None)))
            else:
                if tail_tol is None:
                    raise TailRuleMismatch(
                        "tail region not covered by a single constant rule",
                        side=t.side, start=t.start)
                piece, _ = truncate(LatticeVector({}, t if t.side == "left" else None,
                                                  t if t.side == "right" else None),
                                    tail_tol)
                for n, x in piece.entries.items():
                    feed_entry(n, x)

        out = LatticeVector(ent)
        for coef, piece in tail_pieces:
            out = combine(1.0, out, coef, piece)
        return out

    def _tail_rule(self, t: GeometricTail) -> WeightRule | None:
        """The single constant whole-parity rule covering the tail's infinite
        support, if there is one (otherwise the tail must be materialized)."""
        if t.side == "left":
            lo_needed, hi_needed = None, t.start
        else:
            lo_needed, hi_needed = t.start, None
        for r in self.rules:
            if r.kind != "constant" or r.parity is not None:
                continue
            if t.side == "left" and r.lo is None and (r.hi is None or r.hi >= hi_needed):
                pass
            elif t.side == "right" and r.hi is None and (r.lo is None or r.lo <= lo_needed):
                pass
            else:
                continue
            # core must not intrude into the tail region
            if t.side == "left" and self.core and min(self.core) <= t.start:
                return None
            if t.side == "right" and self.core and max(self.core) >= t.start:
                return None
            return r
        return None

    def apply_inverse(self, v: LatticeVector, tail_tol: float | None = None) -> LatticeVector:
        if self.inverse is None:
            raise NoInverse("operator has no stored inverse")
        return self.inverse.apply(v, tail_tol=tail_tol)

    def power_apply(self, v: LatticeVector, k: int,
                    tail_tol: float | None = None) -> LatticeVector:
        out = v
        if k >= 0:
            for _ in range(k):
                out = self.apply(out, tail_tol=tail_tol)
        else:
            if self.inverse is None:
                raise NoInverse("negative power requires the inverse")
            for _ in range(-k):
                out = self.inverse.apply(out, tail_tol=tail_tol)
        return out

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        obj = {
            "norm": self.norm_kind.value,
            "rules": [r.to_json() for r in self.rules],
            "core_columns": {str(n): col.to_json()
                             for n, col in sorted(self.core.items())},
            "inverse": self.inverse.to_json() if self.inverse else None,
        }
        # legacy two-rule shape, when it applies
        if (len(self.rules) == 2 and all(r.parity is None for r in self.rules)):
            left = next((r for r in self.rules if r.lo is None), None)
            right = next((r for r in self.rules if r.hi is None), None)
            if left is not None and right is not None and left is not right:
                obj["left_rule"] = left.to_json()
                obj["right_rule"] = right.to_json()
        return obj

    @staticmethod
    def from_json(obj: dict, _inv_check: bool = True) -> "LatticeOperator":
        if "rules" in obj:
            rules = [WeightRule.from_json(r) for r in obj["rules"]]
        else:
            rules = []
            if obj.get("left_rule"):
                rules.append(WeightRule.from_json(obj["left_rule"]))
            if obj.get("right_rule"):
                rules.append(WeightRule.from_json(obj["right_rule"]))
        core = {int(n): LatticeVector.from_json(c)
                for n, c in obj.get("core_columns", {}).items()}
        inv = obj.get("inverse")
        op = LatticeOperator(
            tuple(rules), core, NormKind(obj.get("norm", "l2")),
            LatticeOperator.from_json(inv, _inv_check=False) if inv else None)
        if op.inverse is not None and _inv_check:
            verify_inverse(op)
        return op


def verify_inverse(op: LatticeOperator, window: int = 24, tol: float = 1e-9):
    """Check T^{-1}(T(e_n)) = e_n on a probe window."""
    for n in range(-window, window + 1):
        img = op.inverse.apply(op.apply(basis(n), tail_tol=1e-15), tail_tol=1e-15)
        diff = combine(1.0, img, -1.0, basis(n))
        if diff.norm(op.norm_kind) > tol:
            raise NormMismatch("stored inverse fails round-trip",
                               index=n, residual=diff.norm(op.norm_kind))


# -- perturbations -----------------------------------------------------------


@dataclass(frozen=True)
class WindowedPerturbation:
    """Finitely many extra columns ``P(e_j)`` with a declared norm bound."""

    columns: dict
    bound: float | None = None

    def window(self) -> tuple[int, int]:
        return min(self.columns), max(self.columns)

    def measured_norm(self, kind: NormKind) -> float:
        cols = {j: c for j, c in self.columns.items() if not c.is_zero()}
        if not cols:
            return 0.0
        if kind == NormKind.L1:
            return max(c.norm(kind) for c in cols.values())
        rows: set[int] = set()
        dense_cols = {}
        for j, c in cols.items():
            ct, _ = truncate(c, 1e-15)
            dense_cols[j] = ct.entries
            rows.update(ct.entries)
        row_list = sorted(rows)
        mat = np.zeros((len(row_list), len(cols)))
        ridx = {m: i for i, m in enumerate(row_list)}
        for k, (j, ent) in enumerate(sorted(dense_cols.items())):
            for m, x in ent.items():
                mat[ridx[m], k] = x
        if kind == NormKind.SUP:
            return float(np.abs(mat).sum(axis=1).max())
        return float(np.linalg.norm(mat, 2))

    def to_json(self) -> dict:
        return {"columns": {str(j): c.to_json()
                            for j, c in sorted(self.columns.items())},
                "bound": self.bound}

    @staticmethod
    def from_json(obj: dict) -> "WindowedPerturbation":
        return WindowedPerturbation(
            {int(j): LatticeVector.from_json(c)
             for j, c in obj["columns"].items()},
            obj.get("bound"))


def perturb(op: LatticeOperator, pert: WindowedPerturbation,
            tol: float = 1e-12) -> LatticeOperator:
    """T + P.  The perturbed columns become core columns; the stored inverse
    is dropped (it can be rebuilt on a window with :func:`windowed_inverse`)."""
    if pert.bound is not None:
        measured = pert.measured_norm(op.norm_kind)
        if measured > pert.bound + 1e-12:
            raise NormMismatch("perturbation exceeds its declared bound",
                               measured=measured, bound=pert.bound)
    core = dict(op.core)
    for j, p in pert.columns.items():
        core[j] = combine(1.0, op.column(j), 1.0, p, tol)
    return LatticeOperator(op.rules, core, op.norm_kind, None)


# -- windowed dense/sparse views ---------------------------------------------


def dense_matrix(op: LatticeOperator, col_lo: int, col_hi: int,
                 row_lo: int, row_hi: int, tail_tol: float = 1e-15) -> np.ndarray:
    rows = row_hi - row_lo + 1
    cols = col_hi - col_lo + 1
    out = np.zeros((rows, cols))
    for k, n in enumerate(range(col_lo, col_hi + 1)):
        col, _ = truncate(op.column(n), tail_tol)
        for m, x in col.entries.items():
            if row_lo <= m <= row_hi:
                out[m - row_lo, k] = x
    return out


def sparse_matrix(op: LatticeOperator, lo: int, hi: int,
                  tail_tol: float = 1e-15) -> sp.csr_matrix:
    """Square windowed matrix on ``[lo, hi]``; mass outside the window is
    dropped, so windows must be sized by the caller."""
    data, ridx, cidx = [], [], []
    for n in range(lo, hi + 1):
        col, _ = truncate(op.column(n), tail_tol)
        for m, x in col.entries.items():
            if lo <= m <= hi:
                data.append(x)
                ridx.append(m - lo)
                cidx.append(n - lo)
    size = hi - lo + 1
    return sp.csr_matrix((data, (ridx, cidx)), shape=(size, size))


def windowed_inverse(op: LatticeOperator, lo: int, hi: int,
                     pad: int = 24, chop: float = 1e-14) -> LatticeOperator:
    """Reconstruct T^{-1} on a window by inverting the rules analytically and
    solving the windowed linear system for the rows the rules cannot reach.

    Valid for vectors supported well inside ``[lo, hi]``; columns near the
    window edge inherit the usual truncation error.
    """
    inv_rules = []
    for r in op.rules:
        new_lo = None if r.lo is None else r.lo + r.step
        new_hi = None if r.hi is None else r.hi + r.step
        par = None if r.parity is None else (r.parity + r.step) % 2
        if r.kind == "constant":
            inv_rules.append(WeightRule("constant", 1.0 / r.value,
                                        lo=new_lo, hi=new_hi, step=-r.step,
                                        parity=par))
        else:
            inv_rules.append(WeightRule(
                "rational", 1.0 / r.value, lo=new_lo, hi=new_hi, step=-r.step,
                num_off=r.den_off - r.step, den_off=r.num_off - r.step,
                parity=par))
    # the rules leave a finite central gap (core images and the space between
    # rule regions); reconstruct it regardless of the requested window so the
    # returned operator is total
    anchors = [0]
    for r in op.rules:
        anchors += [b for b in (r.lo, r.hi) if b is not None]
    anchors += list(op.core)
    reach = op.reach()
    scan_lo = min(lo, min(anchors)) - pad
    scan_hi = max(hi, max(anchors)) + pad
    covered_rows: set[int] = set()
    for r in op.rules:
        for n in range(scan_lo, scan_hi + 1):
            if r.contains(n) and n not in op.core:
                covered_rows.add(n + r.step)
    margin = reach + 2
    numeric_rows = [m for m in range(scan_lo + margin, scan_hi - margin + 1)
                    if m not in covered_rows]
    core: dict[int, LatticeVector] = {}
    if numeric_rows:
        # least squares: the square windowed matrix of a shift-like operator
        # is singular (edge columns leave the window), but each interior
        # inverse column is still the unique consistent solution
        mat = sparse_matrix(op, scan_lo, scan_hi).toarray()
        size = scan_hi - scan_lo + 1
        rhs = np.zeros((size, len(numeric_rows)))
        for j, m in enumerate(numeric_rows):
            rhs[m - scan_lo, j] = 1.0
        xs, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
        resids = np.linalg.norm(mat @ xs - rhs, axis=0)
        for j, m in enumerate(numeric_rows):
            if resids[j] > 1e-8:
                raise NoInverse("no windowed preimage for basis direction",
                                index=m, residual=float(resids[j]))
            core[m] = LatticeVector.from_dense(xs[:, j], scan_lo, chop=chop)
    return LatticeOperator(tuple(inv_rules), core, op.norm_kind, None,
                           check_window=max(abs(scan_lo), abs(scan_hi)))


def ensure_inverse(op: LatticeOperator, lo: int, hi: int) -> LatticeOperator:
    if op.inverse is not None:
        return op.inverse
    cached = getattr(op, "_inverse_cache", None)
    if cached is not None and cached[0] <= lo and cached[1] >= hi:
        return cached[2]
    if cached is not None:
        lo, hi = min(lo, cached[0]), max(hi, cached[1])
    inv = windowed_inverse(op, lo, hi)
    object.__setattr__(op, "_inverse_cache", (lo, hi, inv))
    return inv


# -- certified norm bounds ----------------------------------------------------


def _side_range(side: HalfSide | None, threshold: int,
                lo: int, hi: int) -> list[int]:
    if side is None:
        return list(range(lo, hi + 1))
    if side == HalfSide.MINUS:
        return list(range(lo, min(hi, threshold) + 1))
    return list(range(max(lo, threshold + 1), hi + 1))


def _far_sup(op: LatticeOperator, side: HalfSide | None, threshold: int,
             lo: int, hi: int) -> float:
    """Sup of |rule weight| over the part of the side region outside the
    window (columns there are single-entry, so this is their exact norm)."""
    best = 0.0
    segments = []
    if side in (None, HalfSide.MINUS):
        seg_hi = lo - 1 if side is None else min(lo - 1, threshold)
        segments.append((None, seg_hi))
    if side in (None, HalfSide.PLUS):
        seg_lo = hi + 1 if side is None else max(hi + 1, threshold + 1)
        segments.append((seg_lo, None))
    if side == HalfSide.MINUS and threshold > hi:
        segments.append((hi + 1, threshold))
    if side == HalfSide.PLUS and threshold + 1 < lo:
        segments.append((threshold + 1, lo - 1))
    for r in op.rules:
        for seg_lo, seg_hi in segments:
            s_lo = r.lo if seg_lo is None else (seg_lo if r.lo is None
                                                else max(r.lo, seg_lo))
            s_hi = r.hi if seg_hi is None else (seg_hi if r.hi is None
                                                else min(r.hi, seg_hi))
            if s_lo is not None and s_hi is not None and s_lo > s_hi:
                continue
            best = max(best, r.sup_abs(s_lo, s_hi))
    return best


def restricted_norm(op: LatticeOperator, side: HalfSide | None,
                    direction: str, lo: int, hi: int,
                    threshold: int = 0) -> float:
    """Certified upper bound for the operator restricted to the coordinate
    half-space E^side, applied forward or backward, measured in the
    operator's norm.  Window-relative: unit vectors supported in the window
    obey the bound exactly; far columns are covered by the analytic rule sup.
    """
    if direction not in ("forward", "backward"):
        raise ValueError(direction)
    target = op
    if direction == "backward":
        target = ensure_inverse(op, lo - 8, hi + 8)
    kind = op.norm_kind
    reach = target.reach()
    cols = _side_range(side, threshold, lo, hi)
    far = _far_sup(target, side, threshold, lo, hi)
    if not cols:
        return far
    if kind == NormKind.L1:
        best = max(target.column(n).norm(kind) for n in cols)
        return max(best, far)
    row_lo, row_hi = lo - reach - 1, hi + reach + 1
    mat = dense_matrix(target, cols[0], cols[-1], row_lo, row_hi)
    if side is not None:
        keep = np.array([n in set(cols) for n in range(cols[0], cols[-1] + 1)])
        mat = mat[:, keep]
    if kind == NormKind.SUP:
        best = float(np.abs(mat).sum(axis=1).max()) if mat.size else 0.0
        return max(best, far)
    best = float(np.linalg.norm(mat, 2)) if mat.size else 0.0
    return max(best, far)


def operator_norm(op: LatticeOperator, lo: int, hi: int) -> float:
    return restricted_norm(op, None, "forward", lo, hi)


def spectral_radius_estimate(op: LatticeOperator, side: HalfSide | None,
                             direction: str, n_max: int, lo: int, hi: int,
                             threshold: int = 0):
    """min over n <= n_max of (certified bound on the n-th power)^{1/n},
    returning (estimate, per_power_bounds)."""
    target = op
    if direction == "backward":
        target = ensure_inverse(op, lo - 8, hi + 8)
    kind = op.norm_kind
    cols = _side_range(side, threshold, lo, hi)
    far1 = _far_sup(target, side, threshold, lo, hi)
    images = {n: basis(n) for n in cols}
    bounds = []
    best = _INF
    for k in range(1, n_max + 1):
        images = {n: target.apply(v, tail_tol=1e-16) for n, v in images.items()}
        col_best = max((v.norm(kind) for v in images.values()), default=0.0)
        bound = max(col_best, far1**k)
        bounds.append(bound)
        best = min(best, bound ** (1.0 / k))
    return best, bounds
