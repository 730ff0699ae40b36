"""Flip and trit moves and the flip-graph: components, connectivity, padding.

A flip replaces two parallel dominoes tiling a unit square by the other
pair; it never changes the twist.  A trit acts on a 2x2x2 block (along any
three axes) minus two opposite corners, replacing its three dominoes by
the only other arrangement; it always toggles the twist.

Component searches run over byte-packed partner vectors.  Budgets cap the
number of visited states and exhausting a budget yields INDETERMINATE,
never a wrong boolean.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from enum import Enum

from .kasteleyn import twist, twist_batch
from .regions import Region
from .tilings import Tiling, all_partner_bytes, as_cylinder, concat, vertical_tiling

DEFAULT_BUDGET = 20_000_000


class Connectivity(Enum):
    CONNECTED = "connected"
    DISCONNECTED = "disconnected"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class MoveSite:
    """A place where a move applies: cell indices plus the axes involved."""

    kind: str  # "flip" or "trit"
    cells: tuple[int, ...]
    axes: tuple[int, ...]


def pack_state(tiling: Tiling) -> bytes:
    if len(tiling.region.cells) > 255:
        raise ValueError("byte packing needs a region with at most 255 cells")
    return bytes(tiling.partner)


def unpack_state(region: Region, state: bytes) -> Tiling:
    return Tiling(region, state)


def flip_neighbors_bytes(state: bytes, squares) -> list[bytes]:
    """All states one flip away. Hot path: bytes in, bytes out."""
    out = []
    for a, b, c, d in squares:
        pa = state[a]
        if pa == b:
            if state[c] == d:
                t = bytearray(state)
                t[a] = c
                t[c] = a
                t[b] = d
                t[d] = b
                out.append(bytes(t))
        elif pa == c:
            if state[b] == d:
                t = bytearray(state)
                t[a] = b
                t[b] = a
                t[c] = d
                t[d] = c
                out.append(bytes(t))
    return out


def flip_sites(tiling: Tiling) -> list[MoveSite]:
    region = tiling.region
    partner = tiling.partner
    sites = []
    for a, b, c, d in region.squares:
        if (partner[a] == b and partner[c] == d) or (partner[a] == c and partner[b] == d):
            axes = _square_axes(region, a, b, c)
            sites.append(MoveSite("flip", (a, b, c, d), axes))
    return sites


def _square_axes(region: Region, a: int, b: int, c: int) -> tuple[int, int]:
    va, vb, vc = region.cells[a], region.cells[b], region.cells[c]
    k0 = next(k for k in range(region.dim) if va[k] != vb[k])
    k1 = next(k for k in range(region.dim) if va[k] != vc[k])
    return (k0, k1)


def apply_flip(tiling: Tiling, site: MoveSite) -> Tiling:
    if site.kind != "flip":
        raise ValueError(f"not a flip site: {site.kind}")
    a, b, c, d = site.cells
    partner = list(tiling.partner)
    if partner[a] == b and partner[c] == d:
        partner[a], partner[c], partner[b], partner[d] = c, a, d, b
    elif partner[a] == c and partner[b] == d:
        partner[a], partner[b], partner[c], partner[d] = b, a, d, c
    else:
        raise ValueError("tiling does not match the flip site")
    return Tiling(tiling.region, partner)


def flip_neighbors(tiling: Tiling) -> list[Tiling]:
    region = tiling.region
    if len(region.cells) <= 255:
        state = pack_state(tiling)
        return [Tiling(region, s) for s in flip_neighbors_bytes(state, region.squares)]
    return [apply_flip(tiling, s) for s in flip_sites(tiling)]


def trit_sites(tiling: Tiling) -> list[MoveSite]:
    partner = tiling.partner
    sites = []
    for (x0, x1, x2, y01, y12, y02), axes in tiling.region.trit_blocks:
        if partner[x0] == y01 and partner[x1] == y12 and partner[x2] == y02:
            sites.append(MoveSite("trit", (x0, x1, x2, y01, y12, y02), axes))
        elif partner[x0] == y02 and partner[x1] == y01 and partner[x2] == y12:
            sites.append(MoveSite("trit", (x0, x1, x2, y01, y12, y02), axes))
    return sites


def apply_trit(tiling: Tiling, site: MoveSite) -> Tiling:
    if site.kind != "trit":
        raise ValueError(f"not a trit site: {site.kind}")
    x0, x1, x2, y01, y12, y02 = site.cells
    partner = list(tiling.partner)
    if partner[x0] == y01 and partner[x1] == y12 and partner[x2] == y02:
        pairs = ((x0, y02), (x1, y01), (x2, y12))
    elif partner[x0] == y02 and partner[x1] == y01 and partner[x2] == y12:
        pairs = ((x0, y01), (x1, y12), (x2, y02))
    else:
        raise ValueError("tiling does not match the trit site")
    for i, j in pairs:
        partner[i] = j
        partner[j] = i
    return Tiling(tiling.region, partner)


def trit_neighbors(tiling: Tiling) -> list[Tiling]:
    return [apply_trit(tiling, s) for s in trit_sites(tiling)]


@dataclass
class Component:
    size: int
    twist: int
    representative: bytes


@dataclass
class ComponentReport:
    """Flip-graph components of a region's tilings.

    components are sorted by size descending, then by representative bytes;
    comp_of[i] is the component id of states[i] (-1 if the budget ran out
    before that state was reached); complete says whether the census
    finished within budget.
    """

    region: Region
    states: list[bytes]
    components: list[Component]
    comp_of: list[int]
    twists: "object"  # np.ndarray of per-state twists, aligned with states
    complete: bool
    visited: int

    def representative_tiling(self, k: int) -> Tiling:
        return Tiling(self.region, self.components[k].representative)

    def summary(self) -> list[dict]:
        return [
            {
                "size": c.size,
                "twist": c.twist,
                "representative": Tiling(self.region, c.representative).to_text(),
            }
            for c in self.components
        ]


def flip_components(region: Region, budget: int = DEFAULT_BUDGET,
                    states: list[bytes] | None = None) -> ComponentReport:
    """Census of the flip graph: enumerate all tilings, BFS each component."""
    if states is None:
        states = all_partner_bytes(region)
    squares = region.squares
    id_of = {s: k for k, s in enumerate(states)}
    comp_of = [-1] * len(states)
    twists = twist_batch(region, states) if states else None
    raw: list[tuple[int, bytes, int]] = []  # (size, representative, first state id)
    visited = 0
    complete = True
    for start in range(len(states)):
        if comp_of[start] >= 0:
            continue
        if visited >= budget:
            complete = False
            break
        cid = len(raw)
        comp_of[start] = cid
        frontier = [states[start]]
        visited += 1
        size = 1
        rep = states[start]
        while frontier:
            next_frontier = []
            for s in frontier:
                for nb in flip_neighbors_bytes(s, squares):
                    k = id_of[nb]
                    if comp_of[k] < 0:
                        comp_of[k] = cid
                        next_frontier.append(nb)
                        size += 1
                        if nb < rep:
                            rep = nb
            visited += len(next_frontier)
            frontier = next_frontier
        raw.append((size, rep, start))

    order = sorted(range(len(raw)), key=lambda k: (-raw[k][0], raw[k][1]))
    remap = {old: new for new, old in enumerate(order)}
    components = [
        Component(raw[old][0], int(twists[id_of[raw[old][1]]]), raw[old][1])
        for old in order
    ]
    comp_of = [remap[c] if c >= 0 else -1 for c in comp_of]
    return ComponentReport(region, states, components, comp_of, twists, complete, visited)


def flip_connected(t0: Tiling, t1: Tiling, budget: int = DEFAULT_BUDGET) -> Connectivity:
    """Bidirectional BFS on the implicit flip graph.

    The twist shortcut is sound: flips preserve twist, so tilings with
    different twists are disconnected without any search.
    """
    if t0.region != t1.region:
        raise ValueError("tilings live on different regions")
    if t0.partner == t1.partner:
        return Connectivity.CONNECTED
    if twist(t0) != twist(t1):
        return Connectivity.DISCONNECTED
    squares = t0.region.squares
    s0, s1 = pack_state(t0), pack_state(t1)
    sides = [({s0}, [s0]), ({s1}, [s1])]  # (visited, frontier)
    visited_total = 2
    while sides[0][1] and sides[1][1]:
        # expand the smaller frontier
        i = 0 if len(sides[0][1]) <= len(sides[1][1]) else 1
        seen, frontier = sides[i]
        other_seen = sides[1 - i][0]
        next_frontier = []
        for s in frontier:
            for nb in flip_neighbors_bytes(s, squares):
                if nb in seen:
                    continue
                if nb in other_seen:
                    return Connectivity.CONNECTED
                seen.add(nb)
                next_frontier.append(nb)
        visited_total += len(next_frontier)
        sides[i] = (seen, next_frontier)
        if visited_total > budget:
            return Connectivity.INDETERMINATE
    return Connectivity.DISCONNECTED


def connected_with_padding(t0: Tiling, t1: Tiling, extra_floors: int,
                           budget: int = DEFAULT_BUDGET) -> Connectivity:
    """Append `extra_floors` vertical floors to both tilings, then test."""
    if extra_floors % 2:
        raise ValueError("padding must use an even number of floors")
    base, _ = as_cylinder(t0.region)
    if extra_floors == 0:
        return flip_connected(t0, t1, budget)
    pad = vertical_tiling(base, extra_floors)
    return flip_connected(concat(t0, pad), concat(t1, pad), budget)


def padded_merge_search(t_start: Tiling, bottom_targets: set[bytes], extra_floors: int,
                        budget: int = 2_000_000) -> list[bytes] | None:
    """Flip path from t_start + vertical padding to some (w + same padding)
    with packed w in bottom_targets.

    Best-first search ordered by how much of the padding slab is back in
    vertical position, FIFO within equal scores.  Returns the byte-state
    path (both endpoints included), or None when the budget is exhausted.
    Any returned path is a certificate: every step is a legal flip.
    """
    if extra_floors % 2 or extra_floors <= 0:
        raise ValueError("padding must use a positive even number of floors")
    base, n0 = as_cylinder(t_start.region)
    nb = len(base.cells)
    padded = concat(t_start, vertical_tiling(base, extra_floors))
    region = padded.region
    squares = region.squares
    bottom_len = n0 * nb

    slab_pairs = []
    for h in range(n0, n0 + extra_floors, 2):
        for i in range(nb):
            slab_pairs.append((h * nb + i, (h + 1) * nb + i))
    max_score = len(slab_pairs)

    def score(state: bytes) -> int:
        return sum(1 for i, j in slab_pairs if state[i] == j)

    def is_goal(state: bytes) -> bool:
        return score(state) == max_score and state[:bottom_len] in bottom_targets

    start = pack_state(padded)
    if is_goal(start):
        return [start]
    parent: dict[bytes, bytes | None] = {start: None}
    counter = 0
    heap = [(-score(start), counter, start)]
    while heap:
        _, _, s = heapq.heappop(heap)
        for nb_state in flip_neighbors_bytes(s, squares):
            if nb_state in parent:
                continue
            parent[nb_state] = s
            if is_goal(nb_state):
                path = [nb_state]
                cur = s
                while cur is not None:
                    path.append(cur)
                    cur = parent[cur]
                path.reverse()
                return path
            if len(parent) >= budget:
                return None
            counter += 1
            heapq.heappush(heap, (-score(nb_state), counter, nb_state))
    return None


def is_flip_pair(region: Region, s0: bytes, s1: bytes) -> bool:
    """Independent check that two packed states differ by one legal flip."""
    return s1 in flip_neighbors_bytes(s0, region.squares)
