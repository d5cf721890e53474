"""Exact finite-volume enumeration for the thinned Bernoulli field.

Everything is computed counts-first: one sweep over the (bitmask-encoded)
configuration space produces an integer occupancy-count vector, which can
then be evaluated as a polynomial in the density p on arbitrary grids.
Constraint indicators compile to plain 64-bit mask comparisons, so a chunk
of configurations is screened with a handful of vectorized operations.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .lattice import (
    Config,
    Region,
    Site,
    UnfixedArea,
    UnresolvedNeighborError,
    extension,
    neighbors,
    outer_boundary,
    thick_boundary,
)

ENUMERATION_CAP = 28
_CHUNK = 1 << 20


class WindowTooLargeError(ValueError):
    """The free-site count exceeds the exact-enumeration cap."""


class InfeasibleError(ValueError):
    """The conditioning event carries no probability mass."""


def default_workers() -> int:
    env = os.environ.get("THINLAB_WORKERS")
    if env:
        return max(1, int(env))
    return 1


@dataclass(frozen=True)
class OccupancyCountVector:
    """Integer counts N_k of admissible configurations with k occupied sites.

    Evaluates to the partition function Z(p) = sum_k N_k p^k (1-p)^(M-k).
    """

    M: int
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.counts) != self.M + 1:
            raise ValueError("counts must have length M+1")

    @property
    def total(self) -> int:
        return sum(self.counts)

    def evaluate(self, p: float) -> float:
        return float(self.evaluate_grid(np.asarray([p], dtype=float))[0])

    def evaluate_grid(self, ps: np.ndarray) -> np.ndarray:
        ps = np.asarray(ps, dtype=float)
        ks = np.arange(self.M + 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            # p^k (1-p)^(M-k) assembled columnwise keeps the endpoints exact
            weights = np.power.outer(ps, ks) * np.power.outer(1.0 - ps, self.M - ks)
        return weights @ np.asarray(self.counts, dtype=float)


# --- clause compilation ------------------------------------------------
#
# A clause is a tuple acting on a chunk of bitmasks m:
#   ("false",)                      -> never satisfied
#   ("any", mask)                   -> m & mask != 0
#   ("none", mask)                  -> m & mask == 0
#   ("occ_implies_any", c, mask)    -> (m & c == 0) | (m & mask != 0)
#   ("isolated", c, mask)           -> m & (c | mask) == c
#   ("not_isolated", c, mask)       -> m & (c | mask) != c


def _eval_clauses(clauses: Sequence[tuple], m: np.ndarray) -> np.ndarray:
    ok = np.ones(m.shape, dtype=bool)
    for cl in clauses:
        kind = cl[0]
        if kind == "false":
            return np.zeros(m.shape, dtype=bool)
        if kind == "any":
            ok &= (m & np.uint64(cl[1])) != 0
        elif kind == "none":
            ok &= (m & np.uint64(cl[1])) == 0
        elif kind == "occ_implies_any":
            ok &= ((m & np.uint64(cl[1])) == 0) | ((m & np.uint64(cl[2])) != 0)
        elif kind == "isolated":
            both = np.uint64(cl[1] | cl[2])
            ok &= (m & both) == np.uint64(cl[1])
        elif kind == "not_isolated":
            both = np.uint64(cl[1] | cl[2])
            ok &= (m & both) != np.uint64(cl[1])
        else:  # pragma: no cover
            raise AssertionError(f"unknown clause {kind}")
    return ok


def _site_environment(
    site: Site,
    free_index: Mapping[Site, int],
    context: Mapping[Site, int],
):
    """Split a site's neighborhood into a variable mask and a constant part."""
    var_mask = 0
    const_occ = False
    for n in neighbors(site):
        if n in free_index:
            var_mask |= 1 << free_index[n]
        elif n in context:
            const_occ = const_occ or bool(context[n])
        else:
            raise UnresolvedNeighborError(f"unresolved neighbor {n}")
    return var_mask, const_occ


def feasibility_clauses(
    free_index: Mapping[Site, int],
    constraint: Iterable[Site],
    context: Mapping[Site, int],
) -> list[tuple]:
    """Clauses for: every occupied constraint site has an occupied neighbor."""
    clauses: list[tuple] = []
    for c in sorted(constraint):
        var_mask, const_occ = _site_environment(c, free_index, context)
        if c in free_index:
            if const_occ:
                continue
            if var_mask == 0:
                clauses.append(("none", 1 << free_index[c]))
            else:
                clauses.append(("occ_implies_any", 1 << free_index[c], var_mask))
        else:
            if c not in context:
                raise UnresolvedNeighborError(f"unresolved constraint site {c}")
            if context[c] == 0 or const_occ:
                continue
            if var_mask == 0:
                clauses.append(("false",))
            else:
                clauses.append(("any", var_mask))
    return clauses


def thinning_match_clauses(
    free_index: Mapping[Site, int],
    targets: Mapping[Site, int],
    context: Mapping[Site, int],
) -> list[tuple]:
    """Clauses for: the thinned image equals the target on the target set."""
    clauses: list[tuple] = []
    for site in sorted(targets):
        tgt = targets[site]
        var_mask, const_occ = _site_environment(site, free_index, context)
        if site in free_index:
            c = 1 << free_index[site]
            if const_occ:
                if tgt:
                    clauses.append(("false",))
                continue
            if tgt:
                clauses.append(("isolated", c, var_mask))
            else:
                clauses.append(("not_isolated", c, var_mask))
        else:
            if site not in context:
                raise UnresolvedNeighborError(f"unresolved target site {site}")
            if context[site] == 0 or const_occ:
                if tgt:
                    clauses.append(("false",))
                continue
            # constant occupied site, isolation decided by the variables
            if tgt:
                clauses.append(("none", var_mask))
            elif var_mask == 0:
                clauses.append(("false",))
            else:
                clauses.append(("any", var_mask))
    return clauses


def counts_from_clauses(
    n_free: int,
    clauses: Sequence[tuple],
    *,
    cap: int = ENUMERATION_CAP,
    workers: int | None = None,
) -> OccupancyCountVector:
    """Sweep the 2^n_free configuration space and bin by occupation number.

    The index space is cut into disjoint chunks merged by vector addition,
    so the result is identical for any worker count.
    """
    if n_free > cap:
        raise WindowTooLargeError(
            f"window too large: {n_free} free sites exceeds cap {cap}"
        )
    workers = workers or default_workers()
    total = 1 << n_free

    def one_chunk(start: int) -> np.ndarray:
        stop = min(start + _CHUNK, total)
        m = np.arange(start, stop, dtype=np.uint64)
        ok = _eval_clauses(clauses, m)
        pops = np.bitwise_count(m[ok]).astype(np.int64)
        return np.bincount(pops, minlength=n_free + 1)

    starts = range(0, total, _CHUNK)
    counts = np.zeros(n_free + 1, dtype=np.int64)
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(one_chunk, starts):
                counts += part
    else:
        for start in starts:
            counts += one_chunk(start)
    return OccupancyCountVector(n_free, tuple(int(c) for c in counts))


# --- public operations -------------------------------------------------


def count_feasible(
    free: Iterable[Site],
    constraint: Iterable[Site],
    boundary: Mapping[Site, int] | None = None,
    *,
    cap: int = ENUMERATION_CAP,
    workers: int | None = None,
) -> OccupancyCountVector:
    """Count occupancy assignments on `free` that are T-feasible on `constraint`.

    N_k is the number of assignments with k occupied sites such that every
    occupied constraint site has at least one occupied neighbor (read from
    the boundary where outside the free set).
    """
    free_sites = tuple(sorted(set(free)))
    free_index = {s: i for i, s in enumerate(free_sites)}
    clauses = feasibility_clauses(free_index, constraint, boundary or {})
    return counts_from_clauses(len(free_sites), clauses, cap=cap, workers=workers)


def partition_function(
    p: float,
    free: Iterable[Site],
    constraint: Iterable[Site],
    boundary: Mapping[Site, int] | None = None,
    **kwargs,
) -> float:
    """The constrained Bernoulli mass sum_w mu_p(w) 1{feasible}."""
    return count_feasible(free, constraint, boundary, **kwargs).evaluate(p)


def first_layer_kernel(
    p: float,
    delta: Region,
    area: UnfixedArea,
    config: Config,
    ext: Mapping[Site, int] | None = None,
    **kwargs,
) -> float:
    """The first-layer constraint kernel evaluated at one configuration.

    The window variables are Delta intersected with the unfixed area; sites
    outside the area are vacant by construction and never rescue a
    feasibility constraint.
    """
    ext = ext or {}
    free_sites = tuple(sorted(s for s in delta.sites if s in area))
    boundary: dict[Site, int] = {}
    for n in outer_boundary(free_sites):
        if n not in area:
            boundary[n] = 0
        elif n in ext:
            boundary[n] = ext[n]
        else:
            raise UnresolvedNeighborError(f"unresolved neighbor {n}")
    counts = count_feasible(free_sites, free_sites, boundary, **kwargs)
    den = counts.evaluate(p)
    if den <= 0.0:
        raise InfeasibleError("no feasible configuration")
    cfg = Config.from_mapping(
        Region.from_sites(free_sites), {s: config[s] for s in free_sites}
    )
    if not _feasible_single(cfg, boundary):
        return 0.0
    k = bin(cfg.bits).count("1")
    num = p**k * (1.0 - p) ** (len(free_sites) - k)
    return num / den


def _feasible_single(cfg: Config, boundary: Mapping[Site, int]) -> bool:
    from .lattice import is_T_feasible

    return is_T_feasible(cfg, cfg.region.sites, boundary)


def local_function_F_counts(
    target: Config, boundary_values: Mapping[Site, int]
) -> OccupancyCountVector:
    """Occupancy counts over the interior for the local preimage weight F.

    F[target](boundary) = sum over interior configurations of the Bernoulli
    weight times the indicator that thinning the window reproduces the
    target.  For a singleton window the interior is empty and F reduces to
    an indicator of the boundary values.
    """
    lam = target.region
    inner = tuple(sorted(lam.interior()))
    need = thick_boundary(lam.site_set)
    missing = [s for s in need if s not in boundary_values]
    if missing:
        raise UnresolvedNeighborError(f"unresolved boundary sites {missing}")
    free_index = {s: i for i, s in enumerate(inner)}
    targets = {s: target[s] for s in lam.sites}
    clauses = thinning_match_clauses(free_index, targets, boundary_values)
    return counts_from_clauses(len(inner), clauses)


def local_function_F(
    p: float, target: Config, boundary_values: Mapping[Site, int]
) -> float:
    return local_function_F_counts(target, boundary_values).evaluate(p)


@dataclass(frozen=True)
class ConditionalQuery:
    """A finite-volume conditional probability query.

    `thinned` is the transformed configuration on the window Delta (its
    restriction to Lambda is the queried local event, the rest is the
    conditioning annulus); `ext` is the raw, untransformed exterior
    configuration on the outer boundary of Delta.
    """

    lam: Region
    delta: Region
    thinned: Config
    ext: Mapping[Site, int]
    p: float

    def __post_init__(self):
        if not self.lam.site_set <= self.delta.site_set:
            raise ValueError("Lambda must be contained in Delta")
        if self.thinned.region.site_set != self.delta.site_set:
            raise ValueError("thinned configuration must live on Delta")


def conditional_counts(
    q: ConditionalQuery, *, workers: int | None = None, cap: int = ENUMERATION_CAP
) -> tuple[OccupancyCountVector, OccupancyCountVector]:
    """Numerator and denominator occupancy counts of the exact conditional.

    Numerator: configurations on Delta whose thinned image matches the full
    target.  Denominator: configurations on Delta minus the interior of
    Lambda whose image matches the target off Lambda.
    """
    delta_sites = tuple(sorted(q.delta.sites))
    lam_interior = q.lam.interior()
    num_index = {s: i for i, s in enumerate(delta_sites)}
    num_targets = {s: q.thinned[s] for s in delta_sites}
    num_clauses = thinning_match_clauses(num_index, num_targets, q.ext)
    num = counts_from_clauses(len(delta_sites), num_clauses, workers=workers, cap=cap)

    den_sites = tuple(s for s in delta_sites if s not in lam_interior)
    den_index = {s: i for i, s in enumerate(den_sites)}
    den_targets = {
        s: q.thinned[s] for s in delta_sites if s not in q.lam.site_set
    }
    den_clauses = thinning_match_clauses(den_index, den_targets, q.ext)
    den = counts_from_clauses(len(den_sites), den_clauses, workers=workers, cap=cap)
    if den.total == 0:
        raise InfeasibleError("illegitimate boundary: no preimage exists")
    return num, den


def conditional_probability(
    q: ConditionalQuery, *, workers: int | None = None, cap: int = ENUMERATION_CAP
) -> float:
    num, den = conditional_counts(q, workers=workers, cap=cap)
    den_val = den.evaluate(q.p)
    if den_val <= 0.0:
        raise InfeasibleError("zero denominator at this density")
    return num.evaluate(q.p) / den_val


def conditional_probability_via_kernel(
    q: ConditionalQuery, *, cap: int = ENUMERATION_CAP
) -> float:
    """The same conditional computed through the first-layer reduction.

    The annulus target fixes a forced part of the window; the remaining
    free part carries the non-isolation constraint and integrates the local
    function F over the thick boundary of Lambda.  Cancellation in the
    fixed part makes this agree exactly with the direct route.
    """
    lam_sites = q.lam.site_set
    lam_interior = q.lam.interior()
    annulus = [s for s in q.delta.sites if s not in lam_sites]
    occ = [s for s in annulus if q.thinned[s]]
    forced = extension(occ)
    forced_values = {s: (1 if s in set(occ) else 0) for s in forced}

    free_sites = tuple(
        sorted(s for s in q.delta.sites if s not in lam_interior and s not in forced)
    )
    if len(free_sites) > cap:
        raise WindowTooLargeError("window too large")
    free_index = {s: i for i, s in enumerate(free_sites)}

    context: dict[Site, int] = dict(q.ext)
    context.update(forced_values)

    constraint = [s for s in annulus if s not in forced]
    clauses = feasibility_clauses(free_index, constraint, context)

    # tabulate F over the variable part of the thick boundary of Lambda
    lam_boundary = tuple(sorted(thick_boundary(lam_sites)))
    var_boundary = [s for s in lam_boundary if s in free_index]
    fixed_boundary = {}
    for s in lam_boundary:
        if s in free_index:
            continue
        if s in context:
            fixed_boundary[s] = context[s]
        else:
            raise UnresolvedNeighborError(f"unresolved boundary site {s}")
    target_lam = Config.from_mapping(
        q.lam, {s: q.thinned[s] for s in q.lam.sites}
    )
    f_table = np.empty(1 << len(var_boundary))
    for sub in range(1 << len(var_boundary)):
        values = dict(fixed_boundary)
        for i, s in enumerate(var_boundary):
            values[s] = (sub >> i) & 1
        f_table[sub] = local_function_F(q.p, target_lam, values)

    n = len(free_sites)
    m = np.arange(1 << n, dtype=np.uint64)
    ok = _eval_clauses(clauses, m)
    pops = np.bitwise_count(m).astype(np.int64)
    mu = q.p**pops * (1.0 - q.p) ** (n - pops)
    sub_idx = np.zeros(1 << n, dtype=np.int64)
    for i, s in enumerate(var_boundary):
        bit = free_index[s]
        sub_idx |= (((m >> np.uint64(bit)) & np.uint64(1)).astype(np.int64)) << i
    num = float(np.sum(mu * ok * f_table[sub_idx]))
    den = float(np.sum(mu * ok))
    if den <= 0.0:
        raise InfeasibleError("no feasible configuration")
    return num / den


def _checkerboard_value(site: Site) -> int:
    return 1 if sum(site) % 2 == 1 else 0


def sweep_query(k: int, d: int = 2, pattern: str = "zero") -> tuple[Region, Region, Config]:
    """The window, singleton center and thinned target of a box experiment."""
    delta = Region.box(d, k)
    origin = (0,) * d
    lam = Region.from_sites([origin])
    if pattern == "zero":
        values = {s: 0 for s in delta.sites}
        values[origin] = 1
    elif pattern == "alt":
        values = {s: _checkerboard_value(s) for s in delta.sites}
    else:
        raise ValueError(f"unknown pattern {pattern!r}")
    thinned = Config.from_mapping(delta, values)
    return delta, lam, thinned


def sweep_boundaries(delta: Region, d: int, pattern: str) -> dict[str, dict[Site, int]]:
    ext_sites = outer_boundary(delta.sites)
    if pattern == "alt":
        # the occupied extreme is illegitimate for the checkerboard; compare
        # the vacant exterior with the checkerboard continuation instead
        return {
            "vacant": {s: 0 for s in ext_sites},
            "occupied": {s: _checkerboard_value(s) for s in ext_sites},
        }
    return {
        "vacant": {s: 0 for s in ext_sites},
        "occupied": {s: 1 for s in ext_sites},
    }


def boundary_sweep(
    k: int,
    p_grid: Sequence[float],
    d: int = 2,
    pattern: str = "zero",
    *,
    workers: int | None = None,
    cap: int = ENUMERATION_CAP,
) -> list[tuple[float, float, float, float]]:
    """Exact box-conditional curves for the two extreme exterior conditions.

    Counts are enumerated once per boundary condition and then evaluated on
    the whole p grid.  Rows are (p, value_vacant, value_occupied,
    difference) in ascending p.
    """
    if k < 2:
        raise ValueError("box size must be at least 2")
    delta, lam, thinned = sweep_query(k, d, pattern)
    boundaries = sweep_boundaries(delta, d, pattern)
    ps = np.asarray(sorted(p_grid), dtype=float)
    values = {}
    for name, ext in boundaries.items():
        query = ConditionalQuery(lam=lam, delta=delta, thinned=thinned, ext=ext, p=0.5)
        num, den = conditional_counts(query, workers=workers, cap=cap)
        num_vals = num.evaluate_grid(ps)
        den_vals = den.evaluate_grid(ps)
        with np.errstate(invalid="ignore", divide="ignore"):
            vals = np.where(den_vals > 0, num_vals / np.where(den_vals > 0, den_vals, 1.0), np.nan)
        values[name] = vals
    rows = []
    for i, p in enumerate(ps):
        v0 = float(values["vacant"][i])
        v1 = float(values["occupied"][i])
        rows.append((float(p), v0, v1, v0 - v1))
    return rows
