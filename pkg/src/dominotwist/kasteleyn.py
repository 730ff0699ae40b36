"""Kasteleyn sign systems, the Z/2 twist of a tiling, integer defects.

The canonical sign of an edge between a black cell v and a white neighbor
w differing along axis k is (-1)^(v[0]+...+v[k-1]), evaluated on the black
endpoint.  The twist of a tiling t is defined through the permutation it
induces from black to white labels:

    (-1)^twist(t) = sign(sigma_t) * prod_i K[i, sigma_t(i)]

and the defect of a region is det K = #(twist 0) - #(twist 1), both taken
in the canonical labeling.
"""

from __future__ import annotations

from dataclasses import dataclass
from random import Random

import numpy as np

from .regions import Region
from .tilings import Tiling, all_partner_bytes, iter_partner_vectors


class KasteleynError(ValueError):
    pass


def canonical_sign(region: Region, v, w) -> int:
    """Canonical edge sign for a black cell v adjacent to a white cell w."""
    v, w = tuple(v), tuple(w)
    if sum(v) % 2 or not sum(w) % 2:
        raise KasteleynError(f"expected (black, white), got {v}-{w}")
    diff = [k for k in range(len(v)) if v[k] != w[k]]
    if len(diff) != 1 or abs(v[diff[0]] - w[diff[0]]) != 1:
        raise KasteleynError(f"cells {v} and {w} are not adjacent")
    return -1 if sum(v[:diff[0]]) % 2 else 1


def _edge_sign_by_index(region: Region, i: int, j: int) -> int:
    """Sign of the edge between adjacent cells i, j (either order)."""
    if region.colors[i] < 0:
        i, j = j, i
    return canonical_sign(region, region.cells[i], region.cells[j])


def sign_matrix(region: Region) -> list[list[int]]:
    """Canonical Kasteleyn matrix, rows = black labels, columns = white labels."""
    if not region.balanced:
        raise KasteleynError("sign matrix needs a balanced region")
    b = len(region.black_cells)
    wr = region.white_rank
    K = [[0] * b for _ in range(b)]
    for r, i in enumerate(region.black_cells):
        for j in region.neighbors[i]:
            K[r][wr[j]] = canonical_sign(region, region.cells[i], region.cells[j])
    return K


class SignSystem:
    """Assignment of +-1 to every region edge, stored black-to-white."""

    def __init__(self, region: Region, signs: dict[tuple[int, int], int]):
        self.region = region
        self.signs = signs

    @classmethod
    def canonical(cls, region: Region) -> "SignSystem":
        signs = {}
        for i in region.black_cells:
            for j in region.neighbors[i]:
                signs[(i, j)] = canonical_sign(region, region.cells[i], region.cells[j])
        return cls(region, signs)

    @classmethod
    def gauge(cls, region: Region, negated_cells) -> "SignSystem":
        """Canonical system with all edges at the given cells negated."""
        system = cls.canonical(region)
        flip = set(negated_cells)
        signs = dict(system.signs)
        for (i, j), s in signs.items():
            if (i in flip) != (j in flip):
                signs[(i, j)] = -s
        return cls(region, signs)

    @classmethod
    def random_system(cls, region: Region, seed: int) -> "SignSystem":
        """Random valid system: a random vertex gauge of the canonical one."""
        rng = Random(seed)
        negate = [i for i in range(len(region.cells)) if rng.random() < 0.5]
        return cls.gauge(region, negate)

    def edge(self, i: int, j: int) -> int:
        if self.region.colors[i] < 0:
            i, j = j, i
        return self.signs[(i, j)]

    def is_valid(self) -> bool:
        """Every unit square must have edge-sign product -1."""
        for a, b, c, d in self.region.squares:
            p = self.edge(a, b) * self.edge(a, c) * self.edge(b, d) * self.edge(c, d)
            if p != -1:
                return False
        return True

    def negate_edge(self, i: int, j: int) -> "SignSystem":
        if self.region.colors[i] < 0:
            i, j = j, i
        signs = dict(self.signs)
        signs[(i, j)] = -signs[(i, j)]
        return SignSystem(self.region, signs)


def _twist_tables(region: Region):
    """Per-region tables for twist evaluation (cached on the region object)."""
    cached = getattr(region, "_twist_tables", None)
    if cached is not None:
        return cached
    if not region.balanced:
        raise KasteleynError("twist needs a balanced region")
    black = np.array(region.black_cells, dtype=np.int64)
    b = len(black)
    wr = np.array(region.white_rank, dtype=np.int64)
    # neg_bit[r, s] = 1 when the edge from black label r to white label s has sign -1
    neg_bit = np.zeros((b, b), dtype=np.uint8)
    for r, i in enumerate(region.black_cells):
        for j in region.neighbors[i]:
            if canonical_sign(region, region.cells[i], region.cells[j]) < 0:
                neg_bit[r, wr[j]] = 1
    tables = (black, wr, neg_bit)
    region._twist_tables = tables
    return tables


def permutation_of(tiling: Tiling) -> list[int]:
    """White label matched to each black label, in black-label order."""
    region = tiling.region
    wr = region.white_rank
    return [wr[tiling.partner[i]] for i in region.black_cells]


def inversion_count(seq) -> int:
    # b stays small in the exact paths, the quadratic loop is fine
    inv = 0
    for x in range(len(seq)):
        sx = seq[x]
        for y in range(x + 1, len(seq)):
            if sx > seq[y]:
                inv += 1
    return inv


def twist(tiling: Tiling) -> int:
    """Twist in Z/2 under the canonical labeling and sign system."""
    region = tiling.region
    _, wr_np, neg_bit = _twist_tables(region)
    sigma = permutation_of(tiling)
    neg = int(sum(int(neg_bit[r, s]) for r, s in enumerate(sigma)))
    return (inversion_count(sigma) + neg) % 2


def twist_batch(region: Region, states: list[bytes], chunk: int = 1 << 18) -> np.ndarray:
    """Twists of many byte-packed tilings at once. Exact uint8 arithmetic."""
    black, wr, neg_bit = _twist_tables(region)
    n = len(region.cells)
    b = len(black)
    out = np.empty(len(states), dtype=np.uint8)
    for lo in range(0, len(states), chunk):
        part = states[lo:lo + chunk]
        P = np.frombuffer(b"".join(part), dtype=np.uint8).reshape(len(part), n)
        S = wr[P[:, black]].astype(np.uint8)
        acc = np.zeros(len(part), dtype=np.uint8)
        for i in range(b):
            si = S[:, i]
            for j in range(i + 1, b):
                acc ^= si > S[:, j]
            acc ^= neg_bit[i, si]
        out[lo:lo + len(part)] = acc
    return out


def signed_det_term(tiling: Tiling, system: SignSystem | None = None) -> int:
    """det of the tiling's one-permutation matrix: sign(sigma) * product of edge signs."""
    region = tiling.region
    sigma = permutation_of(tiling)
    sgn = -1 if inversion_count(sigma) % 2 else 1
    for i in region.black_cells:
        j = tiling.partner[i]
        s = system.signs[(i, j)] if system else _edge_sign_by_index(region, i, j)
        sgn *= s
    return sgn


def bareiss_determinant(rows) -> int:
    """Fraction-free integer determinant (Bareiss elimination)."""
    a = [list(map(int, r)) for r in rows]
    n = len(a)
    if any(len(r) != n for r in a):
        raise KasteleynError("determinant needs a square matrix")
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k]:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        pkk = a[k][k]
        rk = a[k]
        for i in range(k + 1, n):
            ri = a[i]
            aik = ri[k]
            for j in range(k + 1, n):
                ri[j] = (ri[j] * pkk - aik * rk[j]) // prev
            ri[k] = 0
        prev = pkk
    return sign * a[n - 1][n - 1]


def defect_by_determinant(region: Region) -> int:
    """det K under canonical labels; 0 for unbalanced regions (no tilings)."""
    if not region.balanced:
        return 0
    return bareiss_determinant(sign_matrix(region))


def defect_by_enumeration(region: Region, limit: int | None = None) -> int:
    """#(twist 0) - #(twist 1) over all tilings, enumerated directly."""
    n0, n1 = twist_census(region, limit)
    return n0 - n1


def twist_census(region: Region, limit: int | None = None) -> tuple[int, int]:
    """(#twist 0, #twist 1) over all tilings of the region."""
    if not region.balanced:
        return (0, 0)
    if len(region.cells) <= 255:
        states = all_partner_bytes(region, limit)
        if not states:
            return (0, 0)
        tw = twist_batch(region, states)
        ones = int(tw.sum())
        return (len(states) - ones, ones)
    n0 = n1 = 0
    for count, vec in enumerate(iter_partner_vectors(region)):
        if limit is not None and count >= limit:
            from .tilings import EnumerationLimitExceeded

            raise EnumerationLimitExceeded(f"more than {limit} tilings")
        if twist(Tiling(region, vec)):
            n1 += 1
        else:
            n0 += 1
    return (n0, n1)


@dataclass
class GaugeReport:
    """Result of comparing a sign system against the canonical one."""

    consistent: bool
    epsilon: int | None
    counterexample: tuple[Tiling, Tiling] | None


def gauge_twist_comparison(region: Region, system: SignSystem) -> GaugeReport:
    """Check that one global unit epsilon relates the system's signed terms
    to the canonical ones across every tiling."""
    epsilon = None
    first = None
    for vec in iter_partner_vectors(region):
        t = Tiling(region, vec)
        ratio = signed_det_term(t, system) * signed_det_term(t)
        if epsilon is None:
            epsilon = ratio
            first = t
        elif ratio != epsilon:
            return GaugeReport(False, None, (first, t))
    return GaugeReport(True, epsilon, None)
