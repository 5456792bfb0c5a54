"""Vectors over the integer lattice with optional geometric tails.

A ``LatticeVector`` stores a finite sparse dictionary of entries plus,
optionally, a left and/or right geometric tail.  A left tail with
``start=s``, ``ratio=r``, ``coeff=c`` represents the coefficients
``c * r**j`` at indices ``s - j`` for ``j >= 0``; a right tail is the mirror
image at ``s + j``.  Tails let the classical examples (fixed points, basin
vectors, inverse columns) be stored exactly, with closed-form norms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from .errors import NormMismatch


class NormKind(str, Enum):
    L1 = "l1"
    L2 = "l2"
    SUP = "sup"


class HalfSide(str, Enum):
    """Which component of a splitting an index belongs to."""

    MINUS = "minus"
    PLUS = "plus"


@dataclass(frozen=True)
class GeometricTail:
    """Geometric coefficients on a half-line.

    ``side`` is "left" (support ``n <= start``) or "right" (``n >= start``).
    Invariant: ``abs(ratio) < 1`` so all three norms are finite.
    """

    side: str
    start: int
    ratio: float
    coeff: float

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError(f"bad tail side {self.side!r}")
        if not abs(self.ratio) < 1.0:
            raise ValueError(f"tail ratio must satisfy |ratio| < 1, got {self.ratio}")

    def value_at(self, n: int) -> float:
        j = (self.start - n) if self.side == "left" else (n - self.start)
        if j < 0:
            return 0.0
        return self.coeff * self.ratio**j

    def norm(self, kind: NormKind) -> float:
        c, r = abs(self.coeff), abs(self.ratio)
        if kind == NormKind.L1:
            return c / (1.0 - r)
        if kind == NormKind.L2:
            return c / math.sqrt(1.0 - self.ratio**2)
        return c

    def shifted(self, k: int) -> "GeometricTail":
        return GeometricTail(self.side, self.start + k, self.ratio, self.coeff)

    def scaled(self, a: float) -> "GeometricTail":
        return GeometricTail(self.side, self.start, self.ratio, a * self.coeff)

    def head_terms(self, m: int) -> dict[int, float]:
        """The first ``m`` coefficients as explicit entries."""
        step = -1 if self.side == "left" else 1
        return {
            self.start + step * j: self.coeff * self.ratio**j for j in range(m)
        }

    def dropped(self, m: int) -> "GeometricTail":
        """The tail remaining after removing the first ``m`` terms."""
        step = -1 if self.side == "left" else 1
        return GeometricTail(
            self.side, self.start + step * m, self.ratio, self.coeff * self.ratio**m
        )

    def to_json(self) -> dict:
        return {
            "side": self.side,
            "start": self.start,
            "ratio": self.ratio,
            "coeff": self.coeff,
        }

    @staticmethod
    def from_json(obj: dict, side: str | None = None) -> "GeometricTail":
        return GeometricTail(
            obj.get("side", side),
            int(obj["start"]),
            float(obj["ratio"]),
            float(obj["coeff"]),
        )


def _normalize(entries: Mapping[int, float], left: GeometricTail | None,
               right: GeometricTail | None):
    """Drop exact zeros and resolve overlaps between entries and tails.

    Entries that fall inside a tail's support are folded together: the tail
    is materialized down to the deepest colliding entry (exact, finitely
    many terms) and re-anchored past it.
    """
    ent = {int(n): float(x) for n, x in entries.items() if x != 0.0}
    if left is not None and left.coeff == 0.0:
        left = None
    if right is not None and right.coeff == 0.0:
        right = None
    if left is not None and ent:
        low = min(ent)
        if low <= left.start:
            m = left.start - low + 1
            for n, x in left.head_terms(m).items():
                ent[n] = ent.get(n, 0.0) + x
            left = left.dropped(m)
    if right is not None and ent:
        high = max(ent)
        if high >= right.start:
            m = high - right.start + 1
            for n, x in right.head_terms(m).items():
                ent[n] = ent.get(n, 0.0) + x
            right = right.dropped(m)
    ent = {n: x for n, x in ent.items() if x != 0.0}
    return ent, left, right


@dataclass(frozen=True)
class LatticeVector:
    """Finitely many explicit entries plus optional geometric tails.

    Treat instances as immutable; all operations return new vectors.
    """

    entries: dict
    left_tail: GeometricTail | None = None
    right_tail: GeometricTail | None = None

    def __post_init__(self):
        ent, lt, rt = _normalize(self.entries, self.left_tail, self.right_tail)
        object.__setattr__(self, "entries", ent)
        object.__setattr__(self, "left_tail", lt)
        object.__setattr__(self, "right_tail", rt)

    # -- queries ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.entries and self.left_tail is None and self.right_tail is None

    def value_at(self, n: int) -> float:
        x = self.entries.get(n, 0.0)
        if self.left_tail is not None:
            x += self.left_tail.value_at(n)
        if self.right_tail is not None:
            x += self.right_tail.value_at(n)
        return x

    def support_bounds(self) -> tuple[int | None, int | None]:
        """(lo, hi) of the support; ``None`` on a side with an infinite tail."""
        lo: int | None = min(self.entries) if self.entries else None
        hi: int | None = max(self.entries) if self.entries else None
        if self.left_tail is not None:
            lo = None
            hi = max(hi, self.left_tail.start) if hi is not None else self.left_tail.start
        if self.right_tail is not None:
            hi = None
            lo = min(lo, self.right_tail.start) if lo is not None else self.right_tail.start
        return lo, hi

    def norm(self, kind: NormKind) -> float:
        vals = list(self.entries.values())
        if kind == NormKind.L1:
            total = sum(abs(x) for x in vals)
            for t in (self.left_tail, self.right_tail):
                if t is not None:
                    total += t.norm(kind)
            return total
        if kind == NormKind.L2:
            total = sum(x * x for x in vals)
            for t in (self.left_tail, self.right_tail):
                if t is not None:
                    total += t.norm(kind) ** 2
            return math.sqrt(total)
        best = max((abs(x) for x in vals), default=0.0)
        for t in (self.left_tail, self.right_tail):
            if t is not None:
                best = max(best, t.norm(kind))
        return best

    # -- construction helpers -------------------------------------------

    def scaled(self, a: float) -> "LatticeVector":
        if a == 0.0:
            return ZERO
        return LatticeVector(
            {n: a * x for n, x in self.entries.items()},
            self.left_tail.scaled(a) if self.left_tail else None,
            self.right_tail.scaled(a) if self.right_tail else None,
        )

    def shifted(self, k: int) -> "LatticeVector":
        return LatticeVector(
            {n + k: x for n, x in self.entries.items()},
            self.left_tail.shifted(k) if self.left_tail else None,
            self.right_tail.shifted(k) if self.right_tail else None,
        )

    def chop(self, tol: float) -> "LatticeVector":
        """Drop explicit entries smaller than ``tol`` in absolute value."""
        return LatticeVector(
            {n: x for n, x in self.entries.items() if abs(x) >= tol},
            self.left_tail,
            self.right_tail,
        )

    # -- dense views ------------------------------------------------------

    def to_dense(self, lo: int, hi: int) -> np.ndarray:
        """Coefficients on ``[lo, hi]`` inclusive (mass outside is ignored)."""
        out = np.zeros(hi - lo + 1)
        for n, x in self.entries.items():
            if lo <= n <= hi:
                out[n - lo] += x
        for t in (self.left_tail, self.right_tail):
            if t is None:
                continue
            step = -1 if t.side == "left" else 1
            n, v = t.start, t.coeff
            while lo <= n <= hi or (step == -1 and n > hi) or (step == 1 and n < lo):
                if lo <= n <= hi:
                    out[n - lo] += v
                n += step
                v *= t.ratio
                if abs(v) < 1e-300:
                    break
        return out

    @staticmethod
    def from_dense(arr: np.ndarray, lo: int, chop: float = 0.0) -> "LatticeVector":
        return LatticeVector(
            {lo + i: float(x) for i, x in enumerate(arr) if abs(x) > chop}
        )

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "entries": sorted([[n, x] for n, x in self.entries.items()]),
            "left_tail": self.left_tail.to_json() if self.left_tail else None,
            "right_tail": self.right_tail.to_json() if self.right_tail else None,
        }

    @staticmethod
    def from_json(obj: dict) -> "LatticeVector":
        lt = obj.get("left_tail")
        rt = obj.get("right_tail")
        return LatticeVector(
            {int(n): float(x) for n, x in obj.get("entries", [])},
            GeometricTail.from_json(lt, "left") if lt else None,
            GeometricTail.from_json(rt, "right") if rt else None,
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


ZERO = LatticeVector({})


def basis(n: int, value: float = 1.0) -> LatticeVector:
    return LatticeVector({n: value})


def from_pairs(pairs: Iterable[tuple[int, float]]) -> LatticeVector:
    ent: dict[int, float] = {}
    for n, x in pairs:
        ent[n] = ent.get(n, 0.0) + x
    return LatticeVector(ent)


# -- linear combination ----------------------------------------------------


def _merge_tails(side: str, tails: list[GeometricTail], tol: float):
    """Merge same-side tails.  Equal ratios merge exactly (re-anchoring to
    the common reach); different ratios materialize the faster-decaying tail
    into entries down to ``tol``, returning the tracked truncation bound."""
    extra: dict[int, float] = {}
    err = 0.0
    tails = [t for t in tails if t.coeff != 0.0]
    while len(tails) > 1:
        a = tails.pop()
        merged = False
        for i, b in enumerate(tails):
            if a.ratio == b.ratio:
                if side == "left":
                    s = min(a.start, b.start)
                else:
                    s = max(a.start, b.start)
                done: dict[int, float] = {}
                coeff = 0.0
                for t in (a, b):
                    m = abs(t.start - s)
                    for n, x in t.head_terms(m).items():
                        done[n] = done.get(n, 0.0) + x
                    coeff += t.coeff * t.ratio**m
                for n, x in done.items():
                    extra[n] = extra.get(n, 0.0) + x
                tails[i] = GeometricTail(side, s, a.ratio, coeff)
                merged = True
                break
        if not merged:
            # materialize the fastest-decaying remaining tail
            victim = min([a] + tails, key=lambda t: abs(t.ratio))
            if victim is a:
                t = a
            else:
                tails.remove(victim)
                tails.append(a)
                t = victim
            c, r = abs(t.coeff), abs(t.ratio)
            m = 1
            if c > 0 and r > 0:
                # remaining sup-mass after m terms: c * r**m
                m = max(1, math.ceil(math.log(max(tol / max(c, 1e-300), 1e-300))
                                     / math.log(r)))
            for n, x in t.head_terms(m).items():
                extra[n] = extra.get(n, 0.0) + x
            err += abs(t.coeff) * abs(t.ratio) ** m / (1.0 - abs(t.ratio))
    return (tails[0] if tails else None), extra, err


def combine_tracked(a: float, v: LatticeVector, b: float, w: LatticeVector,
                    tol: float = 1e-12):
    """``a*v + b*w`` with the truncation error bound (L1) of any tail
    materialization that was forced by mismatched ratios."""
    ent: dict[int, float] = {}
    for coef, vec in ((a, v), (b, w)):
        if coef == 0.0:
            continue
        for n, x in vec.entries.items():
            ent[n] = ent.get(n, 0.0) + coef * x
    lefts = [t.scaled(c) for c, vec in ((a, v), (b, w))
             if c != 0.0 and (t := vec.left_tail) is not None]
    rights = [t.scaled(c) for c, vec in ((a, v), (b, w))
              if c != 0.0 and (t := vec.right_tail) is not None]
    lt, extra_l, err_l = _merge_tails("left", lefts, tol)
    rt, extra_r, err_r = _merge_tails("right", rights, tol)
    for extra in (extra_l, extra_r):
        for n, x in extra.items():
            ent[n] = ent.get(n, 0.0) + x
    return LatticeVector(ent, lt, rt), err_l + err_r


def combine(a: float, v: LatticeVector, b: float, w: LatticeVector,
            tol: float = 1e-12) -> LatticeVector:
    return combine_tracked(a, v, b, w, tol)[0]


def accumulate(pieces: list[tuple[float, LatticeVector]],
               tol: float = 1e-12) -> LatticeVector:
    """Sum of ``coef * vec`` terms (pairwise via :func:`combine`)."""
    out = ZERO
    for coef, vec in pieces:
        out = combine(1.0, out, coef, vec, tol)
    return out


# -- coordinate projection and truncation -----------------------------------


def project(v: LatticeVector, side: HalfSide, threshold: int = 0) -> LatticeVector:
    """Coordinate projection: MINUS keeps indices ``<= threshold``, PLUS keeps
    ``> threshold``.  Exact on tails (a restricted geometric tail is either a
    geometric tail again or finitely many entries)."""
    keep_minus = side == HalfSide.MINUS
    ent = {
        n: x
        for n, x in v.entries.items()
        if (n <= threshold) == keep_minus
    }
    lt = rt = None
    t = v.left_tail
    if t is not None:
        if keep_minus:
            if t.start <= threshold:
                lt = t
            else:
                m = t.start - threshold
                lt = t.dropped(m)
        else:
            if t.start > threshold:
                for n, x in t.head_terms(t.start - threshold).items():
                    ent[n] = ent.get(n, 0.0) + x
    t = v.right_tail
    if t is not None:
        if not keep_minus:
            if t.start > threshold:
                rt = t
            else:
                m = threshold - t.start + 1
                rt = t.dropped(m)
        else:
            if t.start <= threshold:
                for n, x in t.head_terms(threshold - t.start + 1).items():
                    ent[n] = ent.get(n, 0.0) + x
    return LatticeVector(ent, lt, rt)


def truncate(v: LatticeVector, tol: float, kind: NormKind = NormKind.SUP):
    """Replace tails by finitely many entries, keeping the dropped mass under
    ``tol`` in the given norm.  Returns ``(vector, error_bound)``."""
    ent = dict(v.entries)
    err = 0.0
    for t in (v.left_tail, v.right_tail):
        if t is None:
            continue
        c, r = abs(t.coeff), abs(t.ratio)
        if c == 0.0:
            continue
        if r == 0.0:
            m = 1
        else:
            m = 0
            while t.dropped(m).norm(kind) > tol:
                m += 1
                if m > 100000:
                    raise NormMismatch("tail will not truncate", ratio=t.ratio)
        for n, x in t.head_terms(m).items():
            ent[n] = ent.get(n, 0.0) + x
        err += t.dropped(m).norm(kind)
    return LatticeVector(ent), err
