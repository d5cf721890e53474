"""Sites, regions, configurations and the isolation-thinning maps.

Sites are integer coordinate tuples on Z^d with the nearest-neighbor
relation (l1-distance 1).  A Region is a finite ordered window of sites
with a stable site <-> bit-index map; a Config stores occupancies for a
Region as a dense bitmask.  Values outside a region are always supplied
explicitly through a boundary mapping ``site -> 0/1`` -- there is no
implicit zero padding.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

Site = tuple[int, ...]


class UnresolvedNeighborError(ValueError):
    """A required site value is neither in the window nor in the boundary."""


class NotThinnedConfigError(ValueError):
    """A configuration violates the isolation constraint of the image space."""


def neighbors(site: Site) -> list[Site]:
    """The 2d nearest neighbors of a site."""
    out = []
    for axis in range(len(site)):
        for step in (-1, 1):
            out.append(site[:axis] + (site[axis] + step,) + site[axis + 1 :])
    return out


def inner_boundary(sites: frozenset[Site]) -> frozenset[Site]:
    return frozenset(s for s in sites if any(n not in sites for n in neighbors(s)))


def interior(sites: frozenset[Site]) -> frozenset[Site]:
    return frozenset(sites) - inner_boundary(frozenset(sites))


def outer_boundary(sites: Iterable[Site]) -> frozenset[Site]:
    ss = frozenset(sites)
    out: set[Site] = set()
    for s in ss:
        out.update(n for n in neighbors(s) if n not in ss)
    return frozenset(out)


def extension(sites: Iterable[Site]) -> frozenset[Site]:
    """The window together with its outer boundary."""
    ss = frozenset(sites)
    return ss | outer_boundary(ss)


def thick_boundary(sites: Iterable[Site]) -> frozenset[Site]:
    ss = frozenset(sites)
    return inner_boundary(ss) | outer_boundary(ss)


@dataclass(frozen=True)
class Region:
    """A finite ordered set of lattice sites with a bijective index map."""

    sites: tuple[Site, ...]
    dim: int
    index: Mapping[Site, int] = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.index is None:
            object.__setattr__(
                self, "index", {s: i for i, s in enumerate(self.sites)}
            )
        if len(self.index) != len(self.sites):
            raise ValueError("duplicate sites in region")
        for s in self.sites:
            if len(s) != self.dim:
                raise ValueError(f"site {s} has wrong dimension")

    @classmethod
    def from_sites(cls, sites: Iterable[Site]) -> "Region":
        ordered = tuple(sorted(set(sites)))
        if not ordered:
            raise ValueError("empty region")
        return cls(sites=ordered, dim=len(ordered[0]))

    @classmethod
    def box(cls, d: int, side: int) -> "Region":
        """The cube B_side around the origin (origin always contained)."""
        lo = -(side // 2)
        rng = range(lo, lo + side)
        sites = _product_sites(rng, d)
        return cls.from_sites(sites)

    def __len__(self) -> int:
        return len(self.sites)

    def __contains__(self, site: Site) -> bool:
        return site in self.index

    @property
    def site_set(self) -> frozenset[Site]:
        return frozenset(self.sites)

    def interior(self) -> frozenset[Site]:
        return interior(self.site_set)

    def inner_boundary(self) -> frozenset[Site]:
        return inner_boundary(self.site_set)

    def outer_boundary(self) -> frozenset[Site]:
        return outer_boundary(self.site_set)

    def extension(self) -> frozenset[Site]:
        return extension(self.site_set)


def _product_sites(rng: range, d: int) -> list[Site]:
    sites: list[Site] = [()]
    for _ in range(d):
        sites = [s + (x,) for s in sites for x in rng]
    return sites


@dataclass(frozen=True)
class Config:
    """An occupancy assignment {0,1} over a Region, packed as a bitmask."""

    region: Region
    bits: int = 0

    @classmethod
    def from_mapping(cls, region: Region, values: Mapping[Site, int]) -> "Config":
        bits = 0
        for s, v in values.items():
            if s not in region.index:
                raise ValueError(f"site {s} not in region")
            if v:
                bits |= 1 << region.index[s]
        return cls(region, bits)

    @classmethod
    def from_occupied(cls, region: Region, occupied: Iterable[Site]) -> "Config":
        return cls.from_mapping(region, {s: 1 for s in occupied})

    @classmethod
    def constant(cls, region: Region, value: int) -> "Config":
        bits = (1 << len(region)) - 1 if value else 0
        return cls(region, bits)

    def __getitem__(self, site: Site) -> int:
        return (self.bits >> self.region.index[site]) & 1

    def occupied_sites(self) -> frozenset[Site]:
        return frozenset(s for s in self.region.sites if self[s])

    def to_mapping(self) -> dict[Site, int]:
        return {s: self[s] for s in self.region.sites}

    def restrict(self, sites: Iterable[Site]) -> "Config":
        sub = Region.from_sites(sites)
        return Config.from_mapping(sub, {s: self[s] for s in sub.sites})

    def concat(self, other: "Config") -> "Config":
        """Join two configurations on disjoint site sets."""
        if self.region.site_set & other.region.site_set:
            raise ValueError("overlapping regions")
        joint = Region.from_sites(self.region.sites + other.region.sites)
        values = self.to_mapping()
        values.update(other.to_mapping())
        return Config.from_mapping(joint, values)


@dataclass(frozen=True)
class UnfixedArea:
    """The free remainder S of a window after fixing a thinned configuration.

    Graph distances and balls are computed inside S only.
    """

    sites: frozenset[Site]
    dim: int
    origin: Config | None = None

    def __contains__(self, site: Site) -> bool:
        return site in self.sites

    @classmethod
    def full(cls, sites: Iterable[Site], dim: int) -> "UnfixedArea":
        return cls(sites=frozenset(sites), dim=dim)


def resolve(site: Site, config: Config, boundary: Mapping[Site, int]) -> int:
    """Occupancy at a site, read from the window or else from the boundary."""
    if site in config.region.index:
        return config[site]
    if site in boundary:
        return boundary[site]
    raise UnresolvedNeighborError(f"unresolved neighbor {site}")


def is_isolated(site: Site, config: Config, boundary: Mapping[Site, int]) -> bool:
    """Whether the site is occupied with all its lattice neighbors vacant."""
    if site not in config.region.index:
        raise ValueError(f"site {site} not in window")
    if not config[site]:
        return False
    return all(resolve(n, config, boundary) == 0 for n in neighbors(site))


def thin(config: Config, boundary: Mapping[Site, int] | None = None) -> Config:
    """Keep exactly the isolated occupied sites (the map onto isolates)."""
    boundary = boundary or {}
    bits = 0
    for s in config.region.sites:
        if is_isolated(s, config, boundary):
            bits |= 1 << config.region.index[s]
    return Config(config.region, bits)


def thin_complement(config: Config, boundary: Mapping[Site, int] | None = None) -> Config:
    """Keep exactly the occupied non-isolated sites."""
    boundary = boundary or {}
    bits = 0
    for s in config.region.sites:
        if config[s] and not is_isolated(s, config, boundary):
            bits |= 1 << config.region.index[s]
    return Config(config.region, bits)


def is_T_feasible(
    config: Config, constraint: Iterable[Site], boundary: Mapping[Site, int] | None = None
) -> bool:
    """Every occupied site of the constraint set has an occupied neighbor.

    The rescuing neighbor may lie outside the constraint set (window or
    boundary).
    """
    boundary = boundary or {}
    for s in constraint:
        if s not in config.region.index:
            raise ValueError(f"constraint site {s} not in window")
        if config[s] and all(
            resolve(n, config, boundary) == 0 for n in neighbors(s)
        ):
            return False
    return True


def fixed_region(thinned: Config) -> tuple[frozenset[Site], UnfixedArea]:
    """Split the window into the forced part and the free remainder.

    The forced part is the extension of the occupied set of the thinned
    configuration (occupied sites plus all their neighbors) intersected
    with the window; every preimage under the thinning map agrees there.
    """
    occ = thinned.occupied_sites()
    window = thinned.region.site_set
    for s in occ:
        for n in neighbors(s):
            if n in window and thinned[n]:
                raise NotThinnedConfigError(
                    "not an admissible thinned configuration"
                )
    fixed = extension(occ) & window
    unfixed = UnfixedArea(
        sites=window - fixed, dim=thinned.region.dim, origin=thinned
    )
    return fixed, unfixed


def s_distance(i: Site, j: Site, area: UnfixedArea) -> float:
    """Shortest-path distance inside the unfixed area; inf when disconnected."""
    if i not in area.sites or j not in area.sites:
        raise ValueError("site not in unfixed area")
    if i == j:
        return 0
    seen = {i}
    queue = deque([(i, 0)])
    while queue:
        cur, dist = queue.popleft()
        for n in neighbors(cur):
            if n == j:
                return dist + 1
            if n in area.sites and n not in seen:
                seen.add(n)
                queue.append((n, dist + 1))
    return float("inf")


def s_ball(center: Site, radius: int, area: UnfixedArea) -> frozenset[Site]:
    """The ball B_radius^S around a site for the in-area path metric."""
    if center not in area.sites:
        raise ValueError("site not in unfixed area")
    seen = {center}
    frontier = [center]
    for _ in range(radius):
        nxt = []
        for s in frontier:
            for n in neighbors(s):
                if n in area.sites and n not in seen:
                    seen.add(n)
                    nxt.append(n)
        frontier = nxt
    return frozenset(seen)


def parse_grid(text: str) -> Config:
    """Parse a plain-text configuration literal.

    Rows of ``0``/``1`` characters with ``#`` marking off-window cells,
    one row per line.  Site coordinates are (row, column) with the first
    row at 0, so the literal reads like the printed lattice.
    """
    values: dict[Site, int] = {}
    rows = [line for line in text.splitlines() if line.strip()]
    for r, line in enumerate(rows):
        for c, ch in enumerate(line.strip()):
            if ch == "#":
                continue
            if ch not in "01":
                raise ValueError(f"bad grid character {ch!r}")
            values[(r, c)] = int(ch)
    if not values:
        raise ValueError("empty grid literal")
    region = Region.from_sites(values)
    return Config.from_mapping(region, values)


def format_grid(config: Config) -> str:
    """Inverse of :func:`parse_grid` for 2d configurations."""
    if config.region.dim != 2:
        raise ValueError("grid literals are two-dimensional")
    rows = [s[0] for s in config.region.sites]
    cols = [s[1] for s in config.region.sites]
    lines = []
    for r in range(min(rows), max(rows) + 1):
        line = []
        for c in range(min(cols), max(cols) + 1):
            if (r, c) in config.region.index:
                line.append(str(config[(r, c)]))
            else:
                line.append("#")
        lines.append("".join(line))
    return "\n".join(lines)
