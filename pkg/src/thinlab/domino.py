"""Pair-spin (domino) reformulation of the first-layer constraint model.

Sites are paired along the first axis into dominoes with values in
{0,1,2,3}; the value's high bit is the left site, the low bit the right
site.  A domino's conditional distribution depends on a finite dependence
set of neighboring dominoes only through which center values stay free of
isolated occupied sites -- the admissibility class.  This module computes
classes, kernel vectors, total-variation sensitivity curves, Dobrushin
matrices/constants (closed form and exhaustive), and uniqueness
thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

Offset = tuple[int, ...]

REALIZED_CODES = (8, 9, 10, 11, 12, 13, 15)
FORBIDDEN_CODE = 14  # the pattern (-,+,+,+)


def _unit(d: int, axis: int, sign: int) -> Offset:
    v = [0] * d
    v[axis] = sign
    return tuple(v)


@dataclass(frozen=True)
class DependencePartition:
    """The five geometric groups making up the dependence set."""

    v1: frozenset[Offset]
    v2: frozenset[Offset]
    v3: frozenset[Offset]
    v4: frozenset[Offset]
    v5: frozenset[Offset]

    @property
    def all_offsets(self) -> frozenset[Offset]:
        return self.v1 | self.v2 | self.v3 | self.v4 | self.v5


def dependence_partition(d: int) -> DependencePartition:
    if d < 2:
        raise ValueError("dimension must be at least 2")
    v1 = {_unit(d, i, s) for i in range(1, d) for s in (-1, 1)}
    v2 = {_unit(d, 0, s) for s in (-1, 1)}
    v3 = {
        tuple(a + b for a, b in zip(_unit(d, 0, s0), _unit(d, i, s)))
        for i in range(1, d)
        for s0 in (-1, 1)
        for s in (-1, 1)
    }
    v4 = {_unit(d, i, 2 * s) for i in range(1, d) for s in (-1, 1)}
    v5 = {
        tuple(
            a + b
            for a, b in zip(_unit(d, i, si), _unit(d, j, sj))
        )
        for i in range(1, d)
        for j in range(i + 1, d)
        for si in (-1, 1)
        for sj in (-1, 1)
    }
    return DependencePartition(
        frozenset(v1), frozenset(v2), frozenset(v3), frozenset(v4), frozenset(v5)
    )


def dependence_set(d: int) -> tuple[Offset, ...]:
    """The dominoes whose values can influence the center conditional."""
    return tuple(sorted(dependence_partition(d).all_offsets))


def curve_for_offset(j: Offset, d: int) -> str:
    """Which sensitivity curve a one-domino perturbation at j attains."""
    part = dependence_partition(d)
    if j in part.v5:
        return "rho"
    if j in part.v1:
        return "q"
    if j in part.v2:
        return "u"
    if j in part.v3 or j in part.v4:
        return "v"
    raise ValueError(f"offset {j} not in the dependence set")


@dataclass(frozen=True)
class AdmissibilityClass:
    """Which center values carry positive conditional probability."""

    flags: tuple[bool, bool, bool, bool]

    @property
    def code(self) -> int:
        return sum(1 << a for a in range(4) if self.flags[a])

    @classmethod
    def from_code(cls, code: int) -> "AdmissibilityClass":
        return cls(tuple(bool((code >> a) & 1) for a in range(4)))

    def __str__(self) -> str:
        return "(" + ",".join("+" if f else "-" for f in self.flags) + ")"


@dataclass(frozen=True)
class DominoBoundary:
    """Values on the dependence set, with optional off-lattice marks.

    Off-lattice dominoes (removed from the unfixed area) read as vacant
    and are never isolation subjects themselves.
    """

    values: Mapping[Offset, int]
    d: int
    removed: frozenset[Offset] = frozenset()

    def __post_init__(self):
        need = set(dependence_set(self.d))
        have = set(self.values) | set(self.removed)
        if have != need:
            raise ValueError("boundary must cover the dependence set exactly")
        if not self.removed <= need:
            raise ValueError("off-lattice marks must lie in the dependence set")


def domino_sites(v: Offset) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """The left and right lattice site covered by domino v."""
    left = (2 * v[0],) + v[1:]
    right = (2 * v[0] + 1,) + v[1:]
    return left, right


def site_domino(site: Sequence[int]) -> tuple[Offset, int]:
    """The domino containing a site and the site's position (0=left)."""
    v0 = site[0] // 2
    return (v0,) + tuple(site[1:]), site[0] - 2 * v0


def _site_bit(value: int, pos: int) -> int:
    return (value >> 1) & 1 if pos == 0 else value & 1


def _checkable_sites(d: int) -> list[tuple[Offset, tuple[int, ...]]]:
    """Boundary sites whose full neighborhood lies inside the patch.

    These are the two sites of each first-group domino and the near site
    of each axis domino; their isolation status is a total function of
    the center value and the boundary.
    """
    part = dependence_partition(d)
    out = []
    for off in sorted(part.v1):
        left, right = domino_sites(off)
        out.append((off, left))
        out.append((off, right))
    for off in sorted(part.v2):
        left, right = domino_sites(off)
        out.append((off, right if off[0] < 0 else left))
    return out


def admissibility_class(b: DominoBoundary, d: int | None = None) -> AdmissibilityClass:
    d = d or b.d
    center = (0,) * d
    from .lattice import neighbors

    def occ(site: Sequence[int], center_value: int) -> int:
        dom, pos = site_domino(site)
        if dom == center:
            return _site_bit(center_value, pos)
        if dom in b.removed:
            return 0
        if dom in b.values:
            return _site_bit(b.values[dom], pos)
        raise ValueError(f"site {tuple(site)} outside the dependence patch")

    subjects = [domino_sites(center)[0], domino_sites(center)[1]]
    subjects += [s for off, s in _checkable_sites(d) if off not in b.removed]

    flags = []
    for a in range(4):
        bad = False
        for s in subjects:
            if occ(s, a) and all(occ(n, a) == 0 for n in neighbors(tuple(s))):
                bad = True
                break
        flags.append(not bad)
    return AdmissibilityClass(tuple(flags))


def kernel_vector(p, c: AdmissibilityClass):
    """Bernoulli pair weights masked by the class flags, renormalized.

    Works for float and Fraction densities alike.
    """
    weights = [(1 - p) * (1 - p), p * (1 - p), p * (1 - p), p * p]
    masked = [w if f else 0 * w for w, f in zip(weights, c.flags)]
    total = sum(masked)
    if total == 0:
        raise ValueError("class admits no value")
    return tuple(w / total for w in masked)


def tv_distance(u: Sequence, w: Sequence):
    return sum(abs(a - b) for a, b in zip(u, w)) / 2


def closed_form_curves(p):
    """The four labeled sensitivity curves (rho, q, u, v)."""
    rho = 1 - p * p
    q = 2 * p * (1 - p)
    u = (1 - p) / (1 - p * (1 - p))
    v = 1 - p
    return rho, q, u, v


def rho_max(p) -> float:
    """Max total-variation distance over all realized class pairs."""
    kernels = [kernel_vector(p, AdmissibilityClass.from_code(c)) for c in REALIZED_CODES]
    best = 0
    for i in range(len(kernels)):
        for j in range(i + 1, len(kernels)):
            best = max(best, tv_distance(kernels[i], kernels[j]))
    return best


def pairwise_tv_curves(p_grid: Sequence[float]):
    """All 21 class-pair TV curves, grouped into distinct symbolic curves.

    Returns (pairs, values) where pairs is a list of
    (pair_id, code_a, code_b, curve_label) and values maps pair_id to the
    evaluated curve on the grid.  Curve identity is decided exactly with
    rational arithmetic at probe points in the high-density regime
    p > 1/2 (some pair curves are piecewise rational and only coincide
    there; this is the regime where the 21 pairs collapse to 8 curves),
    then matched against the four closed forms.
    """
    probes = [Fraction(5, 7), Fraction(7, 9), Fraction(9, 11), Fraction(21, 23)]
    named = {}
    for label, pick in (("rho", 0), ("q", 1), ("u", 2), ("v", 3)):
        named[tuple(closed_form_curves(f)[pick] for f in probes)] = label

    signatures = {}
    pairs = []
    extra = 0
    codes = REALIZED_CODES
    pair_id = 0
    for i in range(len(codes)):
        for j in range(i + 1, len(codes)):
            ca = AdmissibilityClass.from_code(codes[i])
            cb = AdmissibilityClass.from_code(codes[j])
            sig = tuple(
                tv_distance(kernel_vector(f, ca), kernel_vector(f, cb))
                for f in probes
            )
            if sig not in signatures:
                if sig in named:
                    signatures[sig] = named[sig]
                else:
                    extra += 1
                    signatures[sig] = f"c{extra}"
            pairs.append((pair_id, codes[i], codes[j], signatures[sig]))
            pair_id += 1

    values = {}
    for pid, a, b, _ in pairs:
        ca = AdmissibilityClass.from_code(a)
        cb = AdmissibilityClass.from_code(b)
        values[pid] = [
            tv_distance(kernel_vector(float(p), ca), kernel_vector(float(p), cb))
            for p in p_grid
        ]
    return pairs, values


# --- exhaustive d=2 scan ----------------------------------------------


@lru_cache(maxsize=32)
def class_codes_2d(removed: frozenset[Offset] = frozenset()) -> np.ndarray:
    """Admissibility class codes for all 4^10 boundaries in dimension 2.

    Index i encodes the boundary with digit (i >> 2k) & 3 at the k-th
    offset of dependence_set(2).  Vectorized over the whole index space.
    """
    from .lattice import neighbors

    d = 2
    order = dependence_set(d)
    n = len(order)
    idx = np.arange(4**n, dtype=np.uint32)
    digits = {
        off: ((idx >> np.uint32(2 * k)) & np.uint32(3)).astype(np.uint8)
        for k, off in enumerate(order)
    }
    center = (0,) * d
    offsets = set(order)

    def occ(site, center_value):
        dom, pos = site_domino(site)
        if dom == center:
            return np.uint8(_site_bit(center_value, pos))
        if dom in removed:
            return np.uint8(0)
        if dom in offsets:
            val = digits[dom]
            return ((val >> 1) & 1) if pos == 0 else (val & 1)
        raise ValueError(f"site {site} outside the dependence patch")

    subjects = [domino_sites(center)[0], domino_sites(center)[1]]
    subjects += [s for off, s in _checkable_sites(d) if off not in removed]

    code = np.zeros(4**n, dtype=np.uint8)
    for a in range(4):
        bad = np.zeros(4**n, dtype=bool)
        for s in subjects:
            iso = occ(s, a).astype(bool)
            if not np.any(iso):
                continue
            for nb in neighbors(s):
                iso = iso & (occ(nb, a) == 0)
                if not np.any(iso):
                    break
            bad |= iso
        code |= (~bad).astype(np.uint8) << a
    return code


def class_census_2d(removed: frozenset[Offset] = frozenset()) -> dict[int, int]:
    """Exhaustive count of realized classes over all 4^10 boundaries."""
    codes, counts = np.unique(class_codes_2d(removed), return_counts=True)
    return {int(c): int(k) for c, k in zip(codes, counts)}


def _tv_table(p: float, codes_present: Iterable[int]) -> np.ndarray:
    table = np.full((16, 16), np.nan)
    kernels = {
        c: np.asarray(kernel_vector(p, AdmissibilityClass.from_code(c)))
        for c in codes_present
    }
    for a, ka in kernels.items():
        for b, kb in kernels.items():
            table[a, b] = 0.5 * float(np.abs(ka - kb).sum())
    return table


def dobrushin_entry_bruteforce(
    p: float, j: Offset, d: int = 2, removed: frozenset[Offset] = frozenset()
) -> float:
    """Max TV sensitivity of the center kernel to a change at offset j.

    Enumerates all boundary pairs differing only at j over the full 4^10
    scan (dimension 2 only).
    """
    if d != 2:
        raise ValueError("exhaustive scan supported for d=2 only")
    order = dependence_set(d)
    if j not in order:
        raise ValueError(f"offset {j} not in the dependence set")
    if j in removed:
        return 0.0
    codes = class_codes_2d(removed)
    n = len(order)
    k = order.index(j)
    arr = codes.reshape((4,) * n)
    # axis for digit k (least significant digit varies fastest -> last axis)
    arr = np.moveaxis(arr, n - 1 - k, -1).reshape(-1, 4)
    table = _tv_table(p, REALIZED_CODES)
    best = 0.0
    for a in range(4):
        for b in range(a + 1, 4):
            best = max(best, float(np.max(table[arr[:, a], arr[:, b]])))
    return best


def dobrushin_constant_bruteforce(
    p: float, d: int = 2, removed: frozenset[Offset] = frozenset()
) -> float:
    return sum(
        dobrushin_entry_bruteforce(p, j, d, removed) for j in dependence_set(d)
    )


def dobrushin_constant_closed(p: float, d: int) -> float:
    """Closed form of the Dobrushin constant of the domino kernel."""
    rho, q, u, v = closed_form_curves(p)
    return (
        rho * 2 * (d - 1) * (d - 2)
        + 2 * (d - 1) * q
        + 2 * u
        + 6 * (d - 1) * v
    )


# --- thresholds --------------------------------------------------------


def threshold_dobrushin(d: int, tol: float = 1e-9) -> float:
    """Largest density in (0,1) where the Dobrushin constant crosses 1."""
    if d < 2:
        raise ValueError("dimension must be at least 2")
    hi = 1.0 - 1e-12
    lo = None
    step = 1e-3
    x = hi
    while x > 0:
        if dobrushin_constant_closed(x, d) >= 1.0:
            lo = x
            break
        hi = x
        x -= step
    if lo is None:
        raise ValueError("no root of c(p,d)=1 in (0,1)")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if dobrushin_constant_closed(mid, d) >= 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def threshold_disagreement(d: int, site_percolation_pc: float | None = None) -> float:
    """Disagreement-percolation uniqueness threshold.

    Default uses the degree bound pc >= 1/(deg-1) of the dependence
    graph; an externally supplied site-percolation threshold sharpens it
    via 1 - p^2 < pc.
    """
    if d < 2:
        raise ValueError("dimension must be at least 2")
    if site_percolation_pc is not None:
        if not 0 < site_percolation_pc < 1:
            raise ValueError("percolation threshold must lie in (0,1)")
        return float(np.sqrt(1.0 - site_percolation_pc))
    n = 2 * d * d + 2 * d - 2
    return float(np.sqrt((n - 2) / (n - 1)))


def threshold_simple(d: int) -> float:
    """Density beyond which |V_0(d)| * rho(p) < 1 (crude uniform bound)."""
    if d < 2:
        raise ValueError("dimension must be at least 2")
    n = 2 * d * d + 2 * d - 2
    return float(np.sqrt((n - 1) / n))
