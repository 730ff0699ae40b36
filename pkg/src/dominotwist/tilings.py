"""Tilings of cubiculated regions by dominoes (2x1x...x1 blocks).

A tiling is stored as a partner vector over canonical cell indices:
partner[i] = index of the cell matched with cell i.  Enumeration is
deterministic: branch on the lowest-labeled uncovered cell, partners in
ascending label order.
"""

from __future__ import annotations

import json
import re
import sys
from dataclasses import dataclass

from .regions import Region, RegionError, make_cylinder, parse_region_spec, region_spec

Domino = tuple[tuple[int, ...], tuple[int, ...]]  # (black cell, white cell)


class TilingError(ValueError):
    pass


class EnumerationLimitExceeded(RuntimeError):
    pass


class Tiling:
    """Perfect matching of a region's adjacency graph."""

    __slots__ = ("region", "partner")

    def __init__(self, region: Region, partner, validate: bool = False):
        self.region = region
        self.partner: tuple[int, ...] = tuple(partner)
        if validate:
            self.validate()

    def validate(self) -> None:
        region = self.region
        partner = self.partner
        if len(partner) != len(region.cells):
            raise TilingError(f"partner vector has {len(partner)} entries for {len(region.cells)} cells")
        for i, j in enumerate(partner):
            if not 0 <= j < len(partner) or j == i:
                raise TilingError(f"cell {region.cells[i]} has bad partner index {j}")
            if partner[j] != i:
                raise TilingError(f"cells {region.cells[i]} and {region.cells[j]} disagree on matching")
            if region.colors[i] == region.colors[j]:
                raise TilingError(f"domino {region.cells[i]}-{region.cells[j]} joins same-color cells")
            if sum(abs(a - b) for a, b in zip(region.cells[i], region.cells[j])) != 1:
                raise TilingError(f"cells {region.cells[i]} and {region.cells[j]} are not adjacent")

    @classmethod
    def from_dominoes(cls, region: Region, pairs) -> "Tiling":
        partner = [-1] * len(region.cells)
        idx = region.index
        for a, b in pairs:
            try:
                i, j = idx[tuple(a)], idx[tuple(b)]
            except KeyError as e:
                raise TilingError(f"cell {e.args[0]} not in region") from None
            if partner[i] != -1 or partner[j] != -1:
                raise TilingError(f"cell covered twice near {tuple(a)}-{tuple(b)}")
            partner[i] = j
            partner[j] = i
        if -1 in partner:
            raise TilingError(f"cell {region.cells[partner.index(-1)]} left uncovered")
        return cls(region, partner, validate=True)

    def dominoes(self) -> list[Domino]:
        """Dominoes as (black cell, white cell), sorted by black cell label."""
        region = self.region
        return [
            (region.cells[i], region.cells[self.partner[i]])
            for i in region.black_cells
        ]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Tiling)
            and self.region == other.region
            and self.partner == other.partner
        )

    def __hash__(self) -> int:
        return hash(self.partner)

    def __repr__(self) -> str:
        return f"Tiling({self.region!r}, {len(self.partner) // 2} dominoes)"

    def to_text(self) -> str:
        lines = [f"tiling v1 dim={self.region.dim} region={region_spec(self.region)}"]
        for b, w in self.dominoes():
            lines.append(f"({','.join(map(str, b))})-({','.join(map(str, w))})")
        return "\n".join(lines) + "\n"

    def to_json_obj(self) -> dict:
        return {
            "version": 1,
            "region": region_spec(self.region),
            "dominoes": [[list(b), list(w)] for b, w in self.dominoes()],
        }


_HEADER_RE = re.compile(r"^tiling v1 dim=(\d+) region=(\S+)$")
_DOMINO_RE = re.compile(r"^\((-?\d+(?:,-?\d+)*)\)-\((-?\d+(?:,-?\d+)*)\)$")


def tiling_from_text(text: str, region: Region | None = None) -> Tiling:
    lines = text.splitlines()
    if not lines:
        raise TilingError("empty tiling text")
    m = _HEADER_RE.match(lines[0].strip())
    if not m:
        raise TilingError(f"line 1: bad header {lines[0]!r}")
    dim = int(m.group(1))
    if region is None:
        region = parse_region_spec(m.group(2))
    if region.dim != dim:
        raise TilingError(f"line 1: header says dim={dim}, region has dim={region.dim}")
    pairs = []
    for ln, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line:
            continue
        dm = _DOMINO_RE.match(line)
        if not dm:
            raise TilingError(f"line {ln}: bad domino line {line!r}")
        a = tuple(int(x) for x in dm.group(1).split(","))
        b = tuple(int(x) for x in dm.group(2).split(","))
        if len(a) != dim or len(b) != dim:
            raise TilingError(f"line {ln}: cell arity does not match dim={dim}")
        pairs.append((a, b))
    return Tiling.from_dominoes(region, pairs)


def tiling_from_json_obj(obj, region: Region | None = None) -> Tiling:
    if not isinstance(obj, dict) or obj.get("version") != 1:
        raise TilingError("expected a tiling object with version 1")
    if region is None:
        region = parse_region_spec(obj["region"])
    pairs = [(tuple(b), tuple(w)) for b, w in obj["dominoes"]]
    return Tiling.from_dominoes(region, pairs)


def tiling_from_json(text: str, region: Region | None = None) -> Tiling:
    return tiling_from_json_obj(json.loads(text), region)


def _ensure_recursion_headroom(depth: int) -> None:
    need = depth + 200
    if sys.getrecursionlimit() < need:
        sys.setrecursionlimit(need)


def iter_partner_vectors(region: Region, mask: int | None = None):
    """Yield partner vectors of all tilings of the masked sub-region.

    Deterministic order; cells outside the mask get partner -1.  With the
    default mask this enumerates tilings of the whole region.
    """
    n = len(region.cells)
    _ensure_recursion_headroom(n // 2)
    nbrs = region.neighbors
    bit = [1 << i for i in range(n)]
    partner = [-1] * n
    full = (1 << n) - 1 if mask is None else mask

    def rec(m):
        if not m:
            yield tuple(partner)
            return
        low = m & -m
        i = low.bit_length() - 1
        m2 = m ^ low
        for j in nbrs[i]:
            bj = bit[j]
            if m2 & bj:
                partner[i] = j
                partner[j] = i
                yield from rec(m2 ^ bj)
        partner[i] = -1

    yield from rec(full)


def all_partner_bytes(region: Region, limit: int | None = None) -> list[bytes]:
    """All tilings as packed partner byte strings (regions up to 255 cells).

    Fast path used by censuses and flip searches; same order as
    iter_partner_vectors.
    """
    n = len(region.cells)
    if n > 255:
        raise TilingError("byte-packed enumeration needs a region with at most 255 cells")
    _ensure_recursion_headroom(n // 2)
    nbrs = region.neighbors
    bit = [1 << i for i in range(n)]
    partner = bytearray(n)
    out: list[bytes] = []
    full = (1 << n) - 1

    def rec(m):
        if not m:
            out.append(bytes(partner))
            return
        low = m & -m
        i = low.bit_length() - 1
        m2 = m ^ low
        for j in nbrs[i]:
            bj = bit[j]
            if m2 & bj:
                partner[i] = j
                partner[j] = i
                rec(m2 ^ bj)
                if limit is not None and len(out) > limit:
                    raise EnumerationLimitExceeded(f"more than {limit} tilings")

    rec(full)
    return out


class TilingStream:
    """Iterator over tilings with a truncation flag.

    After exhaustion, `truncated` says whether an optional limit cut the
    enumeration short.
    """

    def __init__(self, region: Region, limit: int | None = None):
        self.region = region
        self.limit = limit
        self.count = 0
        self.truncated = False
        self._done = False
        self._source = iter_partner_vectors(region)

    def __iter__(self):
        return self

    def __next__(self) -> Tiling:
        if self._done:
            raise StopIteration
        if self.limit is not None and self.count >= self.limit:
            # peek to learn whether anything was cut off
            self._done = True
            for _ in self._source:
                self.truncated = True
                break
            raise StopIteration
        try:
            vec = next(self._source)
        except StopIteration:
            self._done = True
            raise
        self.count += 1
        return Tiling(self.region, vec)


def enumerate_tilings(region: Region, limit: int | None = None) -> TilingStream:
    return TilingStream(region, limit)


def count_tilings(region: Region, mask: int | None = None, memo: dict | None = None) -> int:
    """Exact tiling count via memoized recursion on the uncovered-cell mask."""
    if mask is None:
        if not region.balanced:
            return 0
        mask = (1 << len(region.cells)) - 1
    n = len(region.cells)
    _ensure_recursion_headroom(n // 2)
    nbrs = region.neighbors
    bit = [1 << i for i in range(n)]
    if memo is None:
        memo = {}

    def cnt(m):
        if not m:
            return 1
        val = memo.get(m)
        if val is None:
            low = m & -m
            i = low.bit_length() - 1
            m2 = m ^ low
            val = 0
            for j in nbrs[i]:
                bj = bit[j]
                if m2 & bj:
                    val += cnt(m2 ^ bj)
            memo[m] = val
        return val

    return cnt(mask)


def vertical_tiling(base: Region, floors: int) -> Tiling:
    """All-vertical tiling of the cylinder over `base` with an even floor count."""
    if floors % 2:
        raise TilingError(f"vertical tiling needs an even number of floors, got {floors}")
    region = make_cylinder(base, floors)
    nb = len(base.cells)
    partner = [0] * (nb * floors)
    for h in range(0, floors, 2):
        for i in range(nb):
            partner[h * nb + i] = (h + 1) * nb + i
            partner[(h + 1) * nb + i] = h * nb + i
    return Tiling(region, partner)


def as_cylinder(region: Region) -> tuple[Region, int]:
    """Base and floor count of a cylinder region."""
    if region.base is not None and region.floors is not None:
        return region.base, region.floors
    heights = sorted({c[-1] for c in region.cells})
    if heights != list(range(len(heights))):
        raise TilingError("region is not a cylinder: heights are not 0..N-1")
    floors = len(heights)
    base_cells = sorted({c[:-1] for c in region.cells}, key=lambda c: c[::-1])
    if len(base_cells) * floors != len(region.cells):
        raise TilingError("region is not a cylinder: floors differ")
    base = Region(region.dim - 1, base_cells)
    return base, floors


def concat(t0: Tiling, t1: Tiling) -> Tiling:
    """Stack t1 on top of t0; both must be cylinder tilings over the same base."""
    base0, n0 = as_cylinder(t0.region)
    base1, n1 = as_cylinder(t1.region)
    if base0 != base1:
        raise TilingError("cannot concatenate tilings over different bases")
    nb = len(base0.cells)
    shift = n0 * nb
    partner = list(t0.partner) + [p + shift for p in t1.partner]
    return Tiling(make_cylinder(base0, n0 + n1), partner)


@dataclass
class FloorDecomposition:
    """Alternating plugs and floor matchings of a cylinder tiling.

    plugs[k] is the bitmask of base cells whose vertical domino crosses
    height k (so plugs[0] = plugs[N] = 0); floor_pairs[k-1] lists the
    horizontal dominoes of floor k as base-index pairs (i, j).
    """

    base: Region
    floors: int
    plugs: list[int]
    floor_pairs: list[list[tuple[int, int]]]


def decompose_floors(t: Tiling) -> FloorDecomposition:
    base, floors = as_cylinder(t.region)
    nb = len(base.cells)
    plugs = [0] * (floors + 1)
    floor_pairs: list[list[tuple[int, int]]] = [[] for _ in range(floors)]
    for i, j in enumerate(t.partner):
        if j < i:
            continue
        hi, ci = divmod(i, nb)
        hj, cj = divmod(j, nb)
        if hi == hj:
            floor_pairs[hi].append((ci, cj))
        else:
            plugs[hj] |= 1 << ci  # vertical domino crosses height hj = hi+1
    return FloorDecomposition(base, floors, plugs, floor_pairs)


def recompose_floors(fd: FloorDecomposition) -> Tiling:
    nb = len(fd.base.cells)
    partner = [-1] * (nb * fd.floors)
    for k in range(1, fd.floors):
        m = fd.plugs[k]
        while m:
            low = m & -m
            i = low.bit_length() - 1
            partner[(k - 1) * nb + i] = k * nb + i
            partner[k * nb + i] = (k - 1) * nb + i
            m ^= low
    for h, pairs in enumerate(fd.floor_pairs):
        for ci, cj in pairs:
            partner[h * nb + ci] = h * nb + cj
            partner[h * nb + cj] = h * nb + ci
    if -1 in partner:
        raise TilingError("floors and plugs do not cover the cylinder")
    t = Tiling(make_cylinder(fd.base, fd.floors), partner)
    t.validate()
    return t
