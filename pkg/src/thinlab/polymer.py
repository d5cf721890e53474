"""Polymer expansion of the constrained annulus partition function.

The non-isolation constraint is expanded as a product of (1 - 1{J_i})
indicators; subsets of the annulus decompose into connected polymers
(connectivity: within distance 4 in the unfixed-area metric) whose signed
weights factorize over disjoint dependence windows.  Everything is kept
as exact integer occupancy polynomials so the central partition identity
is an integer test, and truncated convergence conditions and cluster
sums are evaluated at desk scale.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exact import WindowTooLargeError, count_feasible
from .lattice import (
    Region,
    Site,
    UnfixedArea,
    UnresolvedNeighborError,
    neighbors,
    outer_boundary,
    s_ball,
    thick_boundary,
)

CONNECT_RADIUS = 4
DEPENDENCE_RADIUS = 2
ELIMINATION_WIDTH_CAP = 22


@dataclass(frozen=True)
class OccupancyPolynomial:
    """A signed integer coefficient vector over M Bernoulli variables.

    Evaluates to sum_k c_k p^k (1-p)^(M-k).
    """

    M: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if len(self.coeffs) != self.M + 1:
            raise ValueError("coefficient vector must have length M+1")

    def evaluate(self, p: float) -> float:
        total = 0.0
        for k, c in enumerate(self.coeffs):
            if c:
                total += c * p**k * (1.0 - p) ** (self.M - k)
        return total

    def convolve(self, other: "OccupancyPolynomial") -> "OccupancyPolynomial":
        out = [0] * (self.M + other.M + 1)
        for a, ca in enumerate(self.coeffs):
            if not ca:
                continue
            for b, cb in enumerate(other.coeffs):
                out[a + b] += ca * cb
        return OccupancyPolynomial(self.M + other.M, tuple(out))

    def pad(self, extra: int) -> "OccupancyPolynomial":
        """Extend by `extra` unconstrained variables (binomial convolution)."""
        if extra < 0:
            raise ValueError("cannot pad by a negative count")
        if extra == 0:
            return self
        out = [0] * (self.M + extra + 1)
        for k, c in enumerate(self.coeffs):
            if not c:
                continue
            for j in range(extra + 1):
                out[k + j] += c * math.comb(extra, j)
        return OccupancyPolynomial(self.M + extra, tuple(out))

    @classmethod
    def one(cls) -> "OccupancyPolynomial":
        return cls(0, (1,))


@dataclass(frozen=True)
class AnnulusContext:
    """Geometry and boundary data of the constrained annulus model.

    `free` are the summation variables, `constraint` the sites where the
    no-isolated-occupied-site condition is enforced (free sites plus
    context-valued sites adjacent to the hole), `context` all resolvable
    non-free values, `area` the unfixed-area sites carrying the path
    metric, and `jsites` the sites eligible as isolated witnesses.
    """

    free: tuple[Site, ...]
    constraint: tuple[Site, ...]
    context: Mapping[Site, int]
    area: frozenset[Site]
    jsites: frozenset[Site]
    dim: int
    hole_boundary: tuple[Site, ...] = ()

    @classmethod
    def from_regions(
        cls,
        delta: Region,
        lam: Region | None,
        ext: Mapping[Site, int],
        hole_values: Mapping[Site, int] | None = None,
        area: Iterable[Site] | None = None,
    ) -> "AnnulusContext":
        """Annulus of delta around the extension of lam.

        `ext` supplies the outer boundary of delta; `hole_values` the raw
        values on the thick boundary of lam (inner boundary of the hole
        plus its outer ring inside delta).  With lam=None the context is
        a plain window with no hole.
        """
        delta_sites = delta.site_set
        if lam is None:
            lam_sites: frozenset[Site] = frozenset()
            lam_bar: frozenset[Site] = frozenset()
            hole = frozenset()
        else:
            lam_sites = lam.site_set
            if not lam_sites <= delta_sites:
                raise ValueError("hole must be contained in the window")
            lam_bar = lam_sites | outer_boundary(lam_sites)
            hole = thick_boundary(lam_sites)
        # the path metric lives on the whole unfixed area, hole included
        area_set = frozenset(area) if area is not None else (
            delta_sites | frozenset(ext) | hole
        )
        free = tuple(sorted((delta_sites - lam_bar) & area_set))
        context: dict[Site, int] = dict(ext)
        if hole_values:
            context.update(hole_values)
        elif lam is not None:
            raise ValueError("hole boundary values required when lam is given")
        constraint = tuple(sorted(set(free) | (lam_bar - lam_sites)))
        jsites = frozenset(free) | (lam_bar - lam_sites)
        return cls(
            free=free,
            constraint=constraint,
            context=context,
            area=area_set,
            jsites=jsites,
            dim=delta.dim,
            hole_boundary=tuple(sorted(lam_bar - lam_sites)),
        )

    def value(self, site: Site, assignment: Mapping[Site, int]) -> int:
        if site in assignment:
            return assignment[site]
        if site in self.context:
            return self.context[site]
        raise UnresolvedNeighborError(f"unresolved neighbor {site}")


def isolation_event_indicator(
    i: Site, assignment: Mapping[Site, int], ctx: AnnulusContext
) -> bool:
    """Whether some eligible neighbor of i is an isolated occupied site."""
    for j in neighbors(i):
        if j not in ctx.jsites:
            continue
        if ctx.value(j, assignment) != 1:
            continue
        if all(ctx.value(k, assignment) == 0 for k in neighbors(j)):
            return True
    return False


def _area_for(ctx: AnnulusContext) -> UnfixedArea:
    return UnfixedArea(sites=ctx.area, dim=ctx.dim)


class PolymerModel:
    """Polymer enumeration and exact weights for one annulus context."""

    def __init__(self, ctx: AnnulusContext, width_cap: int = ELIMINATION_WIDTH_CAP):
        self.ctx = ctx
        self.width_cap = width_cap
        self._area = _area_for(ctx)
        self._free = frozenset(ctx.free)
        self._adj4: dict[Site, frozenset[Site]] = {}
        self._dep2: dict[Site, frozenset[Site]] = {}
        self._weight_cache: dict = {}

    # -- geometry ------------------------------------------------------

    def ball4(self, site: Site) -> frozenset[Site]:
        if site not in self._adj4:
            self._adj4[site] = s_ball(site, CONNECT_RADIUS, self._area)
        return self._adj4[site]

    def ball2(self, site: Site) -> frozenset[Site]:
        if site not in self._dep2:
            self._dep2[site] = s_ball(site, DEPENDENCE_RADIUS, self._area)
        return self._dep2[site]

    def dependence_set(self, W: Iterable[Site]) -> frozenset[Site]:
        out: set[Site] = set()
        for w in W:
            out |= self.ball2(w)
        return frozenset(out)

    def components(self, sites: Iterable[Site]) -> list[frozenset[Site]]:
        """Maximal connected components under the distance-4 relation."""
        left = set(sites)
        comps = []
        while left:
            seed = left.pop()
            comp = {seed}
            frontier = [seed]
            while frontier:
                nxt = []
                for s in frontier:
                    hits = self.ball4(s) & left
                    if hits:
                        comp |= hits
                        left -= hits
                        nxt.extend(hits)
                frontier = nxt
            comps.append(frozenset(comp))
        return comps

    def compatible(self, w1: Iterable[Site], w2: Iterable[Site]) -> bool:
        return not (self.dependence_set(w1) & self.dependence_set(w2))

    def enumerate_polymers(self, max_size: int) -> list[tuple[Site, ...]]:
        """All connected site sets of the free area up to max_size.

        Canonical order: by size, then lexicographically by sorted sites.
        """
        out: list[frozenset[Site]] = []
        sites = sorted(self._free)
        pos = {s: i for i, s in enumerate(sites)}

        def rec(cur: set[Site], cand: list[Site], banned: set[Site]):
            out.append(frozenset(cur))
            if len(cur) >= max_size:
                return
            local_banned = set(banned)
            for v in list(cand):
                grow = sorted(
                    (self.ball4(v) & self._free)
                    - cur
                    - local_banned
                    - {v}
                    - set(cand)
                )
                rest = [c for c in cand if c != v and c not in local_banned]
                rec(cur | {v}, sorted(set(rest) | set(grow)), local_banned | {v})
                local_banned.add(v)

        for s in sites:
            banned = {t for t in sites if pos[t] < pos[s]}
            cand = sorted((self.ball4(s) & self._free) - banned - {s})
            rec({s}, cand, banned)
        return sorted((tuple(sorted(w)) for w in out), key=lambda w: (len(w), w))

    # -- weights -------------------------------------------------------

    def _atoms(self, i: Site) -> list[tuple[Site | None, tuple[Site, ...]]]:
        """Witness atoms of J_i: (free witness or None-for-context, vacant set).

        Each atom is satisfied when the witness is occupied (context
        witnesses must carry value 1) and every listed free neighbor is
        vacant; atoms with an occupied context neighbor are dropped as
        impossible.
        """
        atoms = []
        for j in neighbors(i):
            if j not in self.ctx.jsites:
                continue
            if j in self._free:
                witness: Site | None = j
            elif self.ctx.context.get(j) == 1:
                witness = None
            else:
                continue  # context witness forced vacant
            vacant_free = []
            possible = True
            for k in neighbors(j):
                if k in self._free:
                    vacant_free.append(k)
                else:
                    if k not in self.ctx.context:
                        raise UnresolvedNeighborError(f"unresolved neighbor {k}")
                    if self.ctx.context[k] == 1:
                        possible = False
                        break
            if possible:
                atoms.append((witness, tuple(sorted(vacant_free))))
        return atoms

    def _cache_key(self, W: tuple[Site, ...]):
        base = min(W)
        patch: set[Site] = set()
        for w in W:
            for a in neighbors(w):
                patch.add(a)
                patch.update(neighbors(a))
        rel = lambda s: tuple(x - y for x, y in zip(s, base))
        kinds = []
        for s in sorted(patch):
            if s in self._free:
                kind = ("free", s in self.ctx.jsites)
            elif s in self.ctx.context:
                kind = ("ctx", self.ctx.context[s], s in self.ctx.jsites)
            else:
                kind = ("out",)
            kinds.append((rel(s), kind))
        depfree = len(self.dependence_set(W) & self._free)
        return (tuple(rel(w) for w in sorted(W)), tuple(kinds), depfree)

    def weight(self, W: Iterable[Site]) -> OccupancyPolynomial:
        """The signed weight of W as an exact occupancy polynomial.

        Coefficients are counts (with sign (-1)^|W|) over the free sites
        of the dependence window; the intersection-of-J_i constraint is
        integrated out by bucket variable elimination.
        """
        W = tuple(sorted(set(W)))
        if not W or not set(W) <= self._free:
            raise ValueError("polymer must be a nonempty set of free sites")
        key = self._cache_key(W)
        hit = self._weight_cache.get(key)
        if hit is not None:
            return hit
        depfree = sorted(self.dependence_set(W) & self._free)
        factors = []
        zero = False
        for i in W:
            atoms = self._atoms(i)
            if not atoms:
                zero = True
                break
            factors.append(self._atom_table(atoms))
        if zero:
            poly = OccupancyPolynomial(len(depfree), (0,) * (len(depfree) + 1))
        else:
            poly = self._eliminate(factors, len(depfree))
            if len(W) % 2:
                poly = OccupancyPolynomial(
                    poly.M, tuple(-c for c in poly.coeffs)
                )
        self._weight_cache[key] = poly
        return poly

    def _atom_table(self, atoms) -> tuple[tuple[Site, ...], np.ndarray]:
        vars_set: set[Site] = set()
        for witness, vacant in atoms:
            if witness is not None:
                vars_set.add(witness)
            vars_set.update(vacant)
        vs = tuple(sorted(vars_set))
        idx = {s: i for i, s in enumerate(vs)}
        n = len(vs)
        m = np.arange(1 << n, dtype=np.uint64)
        ok = np.zeros(1 << n, dtype=bool)
        for witness, vacant in atoms:
            cond = np.ones(1 << n, dtype=bool)
            if witness is not None:
                cond &= (m >> np.uint64(idx[witness])) & np.uint64(1) == 1
            for k in vacant:
                cond &= (m >> np.uint64(idx[k])) & np.uint64(1) == 0
            ok |= cond
        table = ok.astype(np.int64).reshape((2,) * n + (1,), order="F")
        return (vs, table)

    def _eliminate(self, factors, n_depfree: int) -> OccupancyPolynomial:
        remaining = sorted({v for vs, _ in factors for v in vs})
        work = list(factors)
        while remaining:
            # greedy min-width order: eliminate the variable whose joined
            # factor has the smallest scope (ties broken lexicographically)
            def joined_scope(v):
                scope = set()
                for vs, _ in work:
                    if v in vs:
                        scope.update(vs)
                return len(scope)

            v = min(remaining, key=lambda u: (joined_scope(u), u))
            remaining.remove(v)
            group = [f for f in work if v in f[0]]
            rest = [f for f in work if v not in f[0]]
            joined = reduce(self._join, group)
            work = rest + [self._elim_var(joined, v)]
        scalar = OccupancyPolynomial.one()
        for vs, table in work:
            assert not vs
            scalar = scalar.convolve(
                OccupancyPolynomial(table.shape[-1] - 1, tuple(int(c) for c in table))
            )
        return scalar.pad(n_depfree - scalar.M)

    def _join(self, f1, f2):
        v1, t1 = f1
        v2, t2 = f2
        vs = tuple(sorted(set(v1) | set(v2)))
        if len(vs) > self.width_cap:
            raise WindowTooLargeError(
                f"window too large: elimination width {len(vs)} exceeds cap"
            )

        def expand(src_vars, table):
            # order the factor's axes by merged position, then insert
            # size-1 axes for the variables it does not carry
            positions = [vs.index(s) for s in src_vars]
            t = np.moveaxis(
                table, range(len(src_vars)), np.argsort(np.argsort(positions))
            )
            slices: list = [
                slice(None) if s in src_vars else np.newaxis for s in vs
            ]
            slices.append(slice(None))
            return t[tuple(slices)]

        a = expand(v1, t1)
        b = expand(v2, t2)
        k1 = a.shape[-1]
        k2 = b.shape[-1]
        out = np.zeros(tuple(2 for _ in vs) + (k1 + k2 - 1,), dtype=np.int64)
        for i in range(k1):
            sa = a[..., i]
            for j in range(k2):
                out[..., i + j] += sa * b[..., j]
        return (vs, out)

    def _elim_var(self, factor, v):
        vs, table = factor
        axis = vs.index(v)
        t0 = np.take(table, 0, axis=axis)
        t1 = np.take(table, 1, axis=axis)
        k = table.shape[-1]
        out = np.zeros(t0.shape[:-1] + (k + 1,), dtype=np.int64)
        out[..., :k] += t0
        out[..., 1:] += t1
        return (tuple(s for s in vs if s != v), out)

    # -- derived quantities -------------------------------------------

    def surrounded_set(self, W: Iterable[Site]) -> frozenset[Site]:
        """Sites of the dependence set enclosed by W or by vacant context."""
        Wset = frozenset(W)
        out = set()
        for j in self.dependence_set(Wset):
            good = True
            for i in neighbors(j):
                if i in Wset:
                    continue
                if i not in self._free and self.ctx.context.get(i) == 0:
                    continue
                good = False
                break
            if good:
                out.add(j)
        return frozenset(out)


def polymer_weight(
    W: Iterable[Site], p: float, ctx: AnnulusContext, model: PolymerModel | None = None
) -> float:
    """The weight of W evaluated at density p."""
    model = model or PolymerModel(ctx)
    return model.weight(W).evaluate(p)


def polymer_partition_identity(
    ctx: AnnulusContext, model: PolymerModel | None = None
) -> tuple[tuple[int, ...], tuple[int, ...], bool]:
    """Exact integer test of Z = sum over compatible polymer families.

    The left side enumerates the feasibility-constrained counts directly;
    the right side sums, over every subset of the free area, the product
    of its connected components' weights.  Requires every constraint site
    to have a free neighbor (otherwise the expansion of the constraint
    indicator into J-events is not exhaustive).
    """
    model = model or PolymerModel(ctx)
    n = len(ctx.free)
    if n > 18:
        raise WindowTooLargeError("window too large for the family sum")
    for c in ctx.constraint:
        # the expansion misses an isolation at c only if c can actually be
        # occupied and isolated yet no free site is adjacent to witness it
        if c not in model._free and ctx.context.get(c) == 0:
            continue
        if any(ctx.context.get(k) == 1 for k in neighbors(c)):
            continue
        if not any(j in model._free for j in neighbors(c)):
            raise ValueError(
                f"constraint site {c} has no free neighbor; expansion not exact"
            )
    lhs = count_feasible(ctx.free, ctx.constraint, ctx.context)

    order = ctx.free
    index = {s: i for i, s in enumerate(order)}
    ball_mask = [0] * n
    for i, s in enumerate(order):
        for t in model.ball4(s):
            if t in index:
                ball_mask[i] |= 1 << index[t]
    pascal = [[math.comb(m, j) for j in range(m + 1)] for m in range(n + 1)]
    weight_by_mask: dict[int, tuple[np.ndarray, int]] = {}
    rhs = np.zeros(n + 1, dtype=np.int64)
    for mask in range(1 << n):
        rem = mask
        coeffs = np.ones(1, dtype=np.int64)
        used = 0
        while rem:
            seed = rem & -rem
            comp = seed
            while True:
                grow = 0
                m = comp
                while m:
                    b = m & -m
                    grow |= ball_mask[b.bit_length() - 1]
                    m ^= b
                grown = (comp | grow) & mask
                if grown == comp:
                    break
                comp = grown
            rem &= ~comp
            entry = weight_by_mask.get(comp)
            if entry is None:
                sites = [order[i] for i in range(n) if (comp >> i) & 1]
                w = model.weight(sites)
                entry = (np.asarray(w.coeffs, dtype=np.int64), w.M)
                weight_by_mask[comp] = entry
            coeffs = np.convolve(coeffs, entry[0])
            used += entry[1]
        if used < n:
            coeffs = np.convolve(
                coeffs, np.asarray(pascal[n - used], dtype=np.int64)
            )
        rhs[: len(coeffs)] += coeffs
    rhs_t = tuple(int(c) for c in rhs)
    return lhs.counts, rhs_t, lhs.counts == rhs_t


def kp_condition_sums(
    model: PolymerModel, p: float, truncation: int = 4, max_size_cache: dict | None = None
) -> dict[Site, float]:
    """Truncated convergence sums for every singleton reference polymer.

    For each free site x, the sum of |z_W| e^|W| over polymers W of size
    at most `truncation` whose dependence set meets that of {x}.
    Singleton sums dominate: the sum for a general reference polymer is
    at most the total over its sites.
    """
    sums = {s: 0.0 for s in model.ctx.free}
    for W in model.enumerate_polymers(truncation):
        term = abs(model.weight(W).evaluate(p)) * math.exp(len(W))
        if term == 0.0:
            continue
        touched: set[Site] = set()
        for w in W:
            touched |= model.ball4(w)
        for x in touched & model._free:
            sums[x] += term
    return sums


def kp_condition_sum(
    w_star: Iterable[Site],
    p: float,
    model: PolymerModel,
    truncation: int = 4,
) -> tuple[float, int, bool]:
    """Truncated convergence sum against one reference polymer.

    Returns (sum, |W*|, sum <= |W*|).
    """
    w_star = tuple(sorted(set(w_star)))
    dep_star = model.dependence_set(w_star)
    total = 0.0
    for W in model.enumerate_polymers(truncation):
        if not (model.dependence_set(W) & dep_star):
            continue
        total += abs(model.weight(W).evaluate(p)) * math.exp(len(W))
    return total, len(w_star), total <= len(w_star)


def ursell_coefficient(cluster: Sequence[tuple[Site, ...]], model: PolymerModel) -> float:
    """Combinatorial prefactor of a cluster: multiplicity factorials times
    the signed connected-subgraph sum over incompatibility edges."""
    n = len(cluster)
    counts: dict[tuple[Site, ...], int] = {}
    for W in cluster:
        counts[W] = counts.get(W, 0) + 1
    fact = 1.0
    for c in counts.values():
        fact /= math.factorial(c)
    edges = [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if not model.compatible(cluster[i], cluster[j])
    ]
    if n == 1:
        return fact
    total = 0
    for r in range(len(edges) + 1):
        for sub in itertools.combinations(edges, r):
            # connectivity over all n vertices
            parent = list(range(n))

            def find(a):
                while parent[a] != a:
                    parent[a] = parent[parent[a]]
                    a = parent[a]
                return a

            for i, j in sub:
                parent[find(i)] = find(j)
            if len({find(i) for i in range(n)}) == 1:
                total += (-1) ** len(sub)
    return fact * total


def cluster_potential(
    cluster: Sequence[tuple[Site, ...]], p: float, model: PolymerModel
) -> float:
    phi = ursell_coefficient(cluster, model)
    if phi == 0.0:
        return 0.0
    for W in cluster:
        phi *= model.weight(W).evaluate(p)
    return phi


def ursell_cluster_sum(
    polymers: Sequence[tuple[Site, ...]],
    p: float,
    model: PolymerModel,
    max_cluster_polymers: int = 3,
) -> float:
    """Truncated sum of cluster potentials over multisets of polymers."""
    total = 0.0
    for n in range(1, max_cluster_polymers + 1):
        for cluster in itertools.combinations_with_replacement(polymers, n):
            total += cluster_potential(cluster, p, model)
    return total


def suppression_check(
    model: PolymerModel,
    p: float,
    R: int,
    x: Site,
    max_polymer_size: int = 3,
    max_cluster_polymers: int = 3,
) -> tuple[float, float, bool]:
    """Large-cluster suppression at truncated scale.

    Sums |cluster potential| over enumerated clusters whose support has
    at least R sites and contains x, and compares with p^(R/(4d)).
    Returns (sum, bound, sum <= bound).
    """
    polymers = model.enumerate_polymers(max_polymer_size)
    total = 0.0
    for n in range(1, max_cluster_polymers + 1):
        for cluster in itertools.combinations_with_replacement(polymers, n):
            support: set[Site] = set()
            for W in cluster:
                support |= set(W)
            if len(support) < R or x not in support:
                continue
            total += abs(cluster_potential(cluster, p, model))
    bound = p ** (R / (4 * model.ctx.dim))
    return total, bound, total <= bound


def boundary_polymer_bound(
    qs: Sequence[tuple[Site, ...]], p: float, model: PolymerModel
) -> tuple[float, float, bool]:
    """Product bound for polymers whose dependence sets touch the hole.

    Verifies prod |z_Q| <= p^(sum|Q|/(2d)) * p^(-|hole outer boundary|).
    """
    hole = set(model.ctx.hole_boundary)
    if not hole:
        raise ValueError("context has no hole boundary")
    for q in qs:
        if not (model.dependence_set(q) & hole):
            raise ValueError(f"polymer {q} does not touch the hole boundary")
    for a, b in itertools.combinations(qs, 2):
        if not model.compatible(a, b):
            raise ValueError("polymers must be pairwise compatible")
    prod = 1.0
    size = 0
    for q in qs:
        prod *= abs(model.weight(q).evaluate(p))
        size += len(q)
    bound = p ** (size / (2 * model.ctx.dim)) * p ** (-len(hole))
    return prod, bound, prod <= bound
