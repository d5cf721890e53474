"""Monte Carlo reference samplers.

Two layers: plain i.i.d. Bernoulli sampling composed with the isolation
thinning (for marginal estimates with known closed forms), and a
heat-bath Gibbs sampler for the pair-constraint model in its domino
representation, used to probe boundary-condition sensitivity through an
annulus.

All randomness flows from a counter-based Philox generator keyed by the
config seed, so every output is a deterministic function of the
SamplerConfig.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .domino import (
    DominoBoundary,
    admissibility_class,
    dependence_set,
    domino_sites,
    kernel_vector,
    site_domino,
)
from .lattice import (
    Config,
    Region,
    Site,
    UnfixedArea,
    UnresolvedNeighborError,
    inner_boundary,
    neighbors,
    outer_boundary,
)

Offset = tuple[int, ...]


@dataclass(frozen=True)
class SamplerConfig:
    """Deterministic description of one sampling run."""

    p: float
    window: Region
    seed: int
    sweeps: int = 1
    boundary: Config | None = None

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("density must lie in [0, 1]")
        if self.sweeps < 1:
            raise ValueError("at least one sweep required")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def boundary_map(self) -> dict[Site, int]:
        return self.boundary.to_mapping() if self.boundary else {}

    def generator(self, stream: int = 0) -> np.random.Generator:
        bg = np.random.Philox(key=self.seed)
        if stream:
            bg = bg.jumped(stream)
        return np.random.Generator(bg)


@dataclass(frozen=True)
class DisagreementRecord:
    """Coupled-chain disagreement at one sweep."""

    sweep: int
    fraction: float

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError("fraction must lie in [0, 1]")


def sample_bernoulli(cfg: SamplerConfig) -> Config:
    """One i.i.d. occupancy sample over the window."""
    rng = cfg.generator()
    u = rng.random(len(cfg.window))
    bits = 0
    for i, x in enumerate(u):
        if x < cfg.p:
            bits |= 1 << i
    return Config(cfg.window, bits)


def empirical_thinned_marginal(
    cfg: SamplerConfig, site: Site, chunk: int = 1 << 20
) -> tuple[float, float]:
    """Estimate of the post-thinning occupation probability at a site.

    Draws ``cfg.sweeps`` independent fields restricted to the site's
    one-neighborhood and reports the fraction in which the site survives
    the thinning (occupied with all neighbors vacant), together with the
    binomial standard error.  Neighbors outside the window are read from
    the boundary.
    """
    boundary = cfg.boundary_map()
    fixed_occ = []
    free = []
    for n in neighbors(site):
        if n in cfg.window:
            free.append(n)
        elif n in boundary:
            fixed_occ.append(boundary[n])
        else:
            raise UnresolvedNeighborError(f"unresolved neighbor {n}")
    if site not in cfg.window:
        raise ValueError(f"site {site} not in window")
    if any(fixed_occ):
        return 0.0, 0.0  # an occupied fixed neighbor kills isolation

    rng = cfg.generator()
    n_total = cfg.sweeps
    hits = 0
    done = 0
    width = 1 + len(free)
    while done < n_total:
        m = min(chunk, n_total - done)
        occ = rng.random((m, width)) < cfg.p
        good = occ[:, 0]
        if width > 1:
            good = good & ~occ[:, 1:].any(axis=1)
        hits += int(good.sum())
        done += m
    est = hits / n_total
    stderr = float(np.sqrt(est * (1.0 - est) / n_total))
    return est, stderr


def _area_dominoes(area: UnfixedArea) -> list[Offset]:
    """The dominoes tiling the unfixed area, in raster order."""
    doms: dict[Offset, int] = {}
    for s in area.sites:
        v, _ = site_domino(s)
        doms[v] = doms.get(v, 0) + 1
    for v, c in doms.items():
        if c != 2:
            raise ValueError(f"window is not domino-tileable at {v}")
    return sorted(doms)


def _boundary_domino_values(
    doms: set[Offset],
    dep: tuple[Offset, ...],
    boundary: dict[Site, int],
) -> dict[Offset, tuple[str, int]]:
    """Classify every dependence-patch domino around every area domino.

    Returns for each absolute domino outside the area either
    ("fixed", value) when the boundary resolves at least one of its
    sites (unresolved sites read as vacant), or ("removed", 0) when
    neither site is known (off-lattice for the run).
    """
    out: dict[Offset, tuple[str, int]] = {}
    for v in doms:
        for off in dep:
            w = tuple(a + b for a, b in zip(v, off))
            if w in doms or w in out:
                continue
            left, right = domino_sites(w)
            have = [s in boundary for s in (left, right)]
            if any(have):
                # sites beyond the supplied boundary read as vacant
                out[w] = ("fixed", 2 * boundary.get(left, 0) + boundary.get(right, 0))
            else:
                out[w] = ("removed", 0)
    return out


class _DominoChain:
    """Mutable heat-bath state over the dominoes of an unfixed area."""

    def __init__(self, cfg: SamplerConfig, area: UnfixedArea):
        self.p = cfg.p
        self.d = area.dim
        self.dep = dependence_set(self.d)
        self.order = _area_dominoes(area)
        dom_set = set(self.order)
        self.outside = _boundary_domino_values(
            dom_set, self.dep, cfg.boundary_map()
        )
        self.state: dict[Offset, int] = {v: 0 for v in self.order}
        # per-domino static neighbor wiring: (offset, resolver)
        self.wiring: list[list[tuple[Offset, Offset | None, int]]] = []
        self.removed: list[frozenset[Offset]] = []
        for v in self.order:
            wires = []
            removed = []
            for off in self.dep:
                w = tuple(a + b for a, b in zip(v, off))
                if w in dom_set:
                    wires.append((off, w, 0))
                else:
                    kind, val = self.outside[w]
                    if kind == "fixed":
                        wires.append((off, None, val))
                    else:
                        removed.append(off)
            self.wiring.append(wires)
            self.removed.append(frozenset(removed))
        self._class_cache: dict = {}

    def kernel_at(self, idx: int) -> tuple:
        values = {}
        for off, w, val in self.wiring[idx]:
            values[off] = self.state[w] if w is not None else val
        key = (
            self.removed[idx],
            tuple(values.get(off, -1) for off in self.dep),
        )
        kv = self._class_cache.get(key)
        if kv is None:
            cls = admissibility_class(
                DominoBoundary(values=values, d=self.d, removed=self.removed[idx])
            )
            kv = kernel_vector(self.p, cls)
            self._class_cache[key] = kv
        return kv

    def update(self, idx: int, u: float) -> None:
        kv = self.kernel_at(idx)
        cum = []
        acc = 0.0
        for w in kv:
            acc += w
            cum.append(acc)
        self.state[self.order[idx]] = min(bisect_right(cum, u), 3)

    def sweep(self, uniforms) -> None:
        for idx in range(len(self.order)):
            self.update(idx, float(uniforms[idx]))

    def site_config(self, window: Region) -> Config:
        bits = 0
        for v, val in self.state.items():
            left, right = domino_sites(v)
            if (val >> 1) & 1 and left in window:
                bits |= 1 << window.index[left]
            if val & 1 and right in window:
                bits |= 1 << window.index[right]
        return Config(window, bits)


def heat_bath_chain(
    cfg: SamplerConfig, area: UnfixedArea
) -> tuple[Config, list[float]]:
    """Raster-sweep heat bath for the pair-constraint model.

    Each update redraws one domino from the single-domino kernel given
    its dependence patch; the trace records the fraction of fully
    occupied dominoes after each sweep.
    """
    chain = _DominoChain(cfg, area)
    rng = cfg.generator()
    uniforms = rng.random((cfg.sweeps, len(chain.order)))
    trace = []
    for t in range(cfg.sweeps):
        chain.sweep(uniforms[t])
        full = sum(1 for v in chain.state.values() if v == 3)
        trace.append(full / len(chain.order))
    return chain.site_config(cfg.window), trace


def domino_histogram(
    cfg: SamplerConfig, area: UnfixedArea, burn_in: int = 0
) -> dict[Offset, np.ndarray]:
    """Per-domino empirical value distribution along one chain.

    Runs ``cfg.sweeps`` sweeps and tallies each domino's value after
    every post-burn-in sweep.
    """
    if burn_in >= cfg.sweeps:
        raise ValueError("burn-in must leave at least one recorded sweep")
    chain = _DominoChain(cfg, area)
    rng = cfg.generator()
    uniforms = rng.random((cfg.sweeps, len(chain.order)))
    counts = {v: np.zeros(4, dtype=np.int64) for v in chain.order}
    for t in range(cfg.sweeps):
        chain.sweep(uniforms[t])
        if t >= burn_in:
            for v, val in chain.state.items():
                counts[v][val] += 1
    n = cfg.sweeps - burn_in
    return {v: c / n for v, c in counts.items()}


def disagreement_experiment(
    cfg_a: SamplerConfig,
    cfg_b: SamplerConfig,
    area: UnfixedArea,
    watch: frozenset[Offset] | None = None,
) -> list[DisagreementRecord]:
    """Grand coupling of two chains that differ only in their boundary.

    Both chains consume the same uniforms in the same raster order, so
    any disagreement is driven purely by the boundary conditions.  The
    per-sweep record is the fraction of watched dominoes (default: the
    dominoes meeting the inner boundary of the area) on which the chains
    differ.
    """
    if (cfg_a.p, cfg_a.seed, cfg_a.sweeps) != (cfg_b.p, cfg_b.seed, cfg_b.sweeps):
        raise ValueError("coupled chains must share p, seed and sweeps")
    chain_a = _DominoChain(cfg_a, area)
    chain_b = _DominoChain(cfg_b, area)
    if chain_a.order != chain_b.order:
        raise ValueError("coupled chains must share the unfixed area")
    if watch is None:
        watch = frozenset(
            site_domino(s)[0] for s in inner_boundary(area.sites)
        )
    watch = frozenset(watch) & set(chain_a.order)
    if not watch:
        raise ValueError("no watched dominoes inside the area")
    rng = cfg_a.generator()
    uniforms = rng.random((cfg_a.sweeps, len(chain_a.order)))
    records = []
    for t in range(cfg_a.sweeps):
        chain_a.sweep(uniforms[t])
        chain_b.sweep(uniforms[t])
        diff = sum(1 for v in watch if chain_a.state[v] != chain_b.state[v])
        records.append(DisagreementRecord(sweep=t + 1, fraction=diff / len(watch)))
    return records


def annulus_experiment(
    p: float,
    seed: int,
    sweeps: int,
    outer_side: int = 12,
    hole_side: int = 4,
    d: int = 2,
) -> list[DisagreementRecord]:
    """Vacant-vs-occupied exterior coupling across a square annulus.

    The annulus is the outer box minus the centered hole; the hole and
    its surroundings are held vacant in both chains while the exterior
    ring is all-vacant in one chain and all-occupied in the other.
    """
    if outer_side % 2 or hole_side % 2:
        raise ValueError("annulus sides must be even for domino tiling")
    outer = Region.box(d, outer_side)
    hole = Region.box(d, hole_side)
    ann_sites = outer.site_set - hole.site_set
    window = Region.from_sites(ann_sites)
    area = UnfixedArea(sites=window.site_set, dim=d)
    ext = sorted(outer_boundary(outer.site_set))
    hole_sites = sorted(hole.site_set)
    bnd_region = Region.from_sites(ext + hole_sites)
    vac = Config.from_mapping(bnd_region, {s: 0 for s in bnd_region.sites})
    occ = Config.from_mapping(
        bnd_region, {s: (1 if s in set(ext) else 0) for s in bnd_region.sites}
    )
    cfg_a = SamplerConfig(p=p, window=window, seed=seed, sweeps=sweeps, boundary=vac)
    cfg_b = SamplerConfig(p=p, window=window, seed=seed, sweeps=sweeps, boundary=occ)
    return disagreement_experiment(cfg_a, cfg_b, area)
