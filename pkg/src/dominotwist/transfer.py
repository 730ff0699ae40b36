"""Plug/floor transfer matrices for cylinders base x [0,N].

A plug is a balanced subset of base cells, encoded as a bitmask over the
base's cell order.  Entry A[p0][p1] counts the tilings of one floor given
vertical dominoes entering from below at p0 and leaving upward at p1, so
(A^N)[empty][empty] counts cylinder tilings.  The signed companion At
weights each floor tiling by its twist contribution

    tw(f) = (tk(f) + inv(sigma_f) + inv_bl + inv_wh) mod 2

where tk multiplies the base Kasteleyn signs over the floor's dominoes,
sigma_f matches black to white base labels, and inv_bl/inv_wh count label
inversions induced by the two plugs.  (At^N)[empty][empty] is then the
cylinder defect: twist-0 count minus twist-1 count.

All matrix entries and powers are exact integers; floating point appears
only in spectral_estimates.
"""

from __future__ import annotations

import json
import math
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .kasteleyn import _edge_sign_by_index, inversion_count
from .regions import Region, region_spec
from .tilings import Tiling, enumerate_tilings

MAX_PLUG_BASE_CELLS = 24
MAX_MATRIX_PLUGS = 4096
CACHE_FORMAT_VERSION = 1


class TransferError(ValueError):
    pass


def enumerate_plugs(base: Region) -> list[int]:
    """All balanced subsets of base cells as bitmasks, ascending.

    Index 0 is the empty plug; the last entry is the full plug.
    """
    nc = len(base.cells)
    if nc > MAX_PLUG_BASE_CELLS:
        raise TransferError(
            f"plug enumeration needs a base with at most {MAX_PLUG_BASE_CELLS}"
            f" cells, got {nc}")
    if not base.balanced:
        raise TransferError("plug enumeration needs a balanced base")
    from itertools import combinations

    blacks = base.black_cells
    whites = base.white_cells
    plugs = []
    for k in range(len(blacks) + 1):
        for bsub in combinations(blacks, k):
            bmask = sum(1 << i for i in bsub)
            for wsub in combinations(whites, k):
                plugs.append(bmask + sum(1 << i for i in wsub))
    plugs.sort()
    return plugs


class _BaseTables:
    """Per-base lookup tables for transfer construction.

    count_table[m] counts tilings of the cells in mask m using only
    in-base dominoes; signed_table[m] is the corresponding sum of
    (-1)^(tk + inv(sigma)), equal to the Kasteleyn submatrix determinant
    on the mask's black rows and white columns taken in label order.
    """

    def __init__(self, base: Region):
        self.base = base
        nc = len(base.cells)
        self.full = (1 << nc) - 1
        self.black_bits = sum(1 << i for i in base.black_cells)
        self.white_bits = sum(1 << i for i in base.white_cells)
        self.count_table = self._build_count_table()
        self.signed_table = self._build_signed_table()
        self.parity_bl = self._build_parity_table(base.black_cells)
        self.parity_wh = self._build_parity_table(base.white_cells)

    def _build_count_table(self) -> np.ndarray:
        base = self.base
        nbrs = base.neighbors
        table = [0] * (self.full + 1)
        table[0] = 1
        for m in range(1, self.full + 1):
            i = (m & -m).bit_length() - 1
            acc = 0
            for j in nbrs[i]:
                bit = 1 << j
                if m & bit:
                    acc += table[m ^ (1 << i) ^ bit]
            table[m] = acc
        return np.array(table, dtype=np.int64)

    def _build_signed_table(self) -> np.ndarray:
        base = self.base
        nbrs = base.neighbors
        colors = base.colors
        wr_below = [0] * len(base.cells)
        for w in base.white_cells:
            wr_below[w] = self.white_bits & ((1 << w) - 1)
        sign_of = {}
        for i in base.black_cells:
            for j in nbrs[i]:
                sign_of[(i, j)] = _edge_sign_by_index(base, i, j)
        table = [0] * (self.full + 1)
        table[0] = 1
        black_bits = self.black_bits
        for m in range(1, self.full + 1):
            mb = m & black_bits
            if not mb:
                continue  # whites left without blacks: no matching
            i = (mb & -mb).bit_length() - 1
            acc = 0
            for j in nbrs[i]:
                bit = 1 << j
                if m & bit and colors[j] < 0:
                    sub = table[m ^ (1 << i) ^ bit]
                    if sub:
                        term = sign_of[(i, j)] * sub
                        if (m & wr_below[j]).bit_count() & 1:
                            term = -term
                        acc += term
            table[m] = acc
        return np.array(table, dtype=np.int64)

    def _build_parity_table(self, colored_cells: list[int]) -> np.ndarray:
        """parity[(a << k) | c] = inversion parity of h = [i in c] - [i in a]
        over the labels of one color, for disjoint position masks a, c."""
        k = len(colored_cells)
        table = np.zeros(1 << (2 * k), dtype=np.int8)
        for a in range(1 << k):
            rest = ((1 << k) - 1) ^ a
            c = rest
            while True:
                h = [0] * k
                for r in range(k):
                    if a >> r & 1:
                        h[r] = -1
                    elif c >> r & 1:
                        h[r] = 1
                inv = 0
                for r0 in range(k):
                    for r1 in range(r0 + 1, k):
                        if h[r0] > h[r1]:
                            inv += 1
                table[(a << k) | c] = inv & 1
                if c == 0:
                    break
                c = (c - 1) & rest
        return table

    def project(self, mask: int, colored_cells: list[int]) -> int:
        out = 0
        for r, i in enumerate(colored_cells):
            if mask >> i & 1:
                out |= 1 << r
        return out


def _base_tables(base: Region) -> _BaseTables:
    cached = getattr(base, "_transfer_tables", None)
    if cached is None:
        cached = _BaseTables(base)
        base._transfer_tables = cached
    return cached


@dataclass
class TransferMatrices:
    """Sparse count matrix A and signed matrix At over a base's plugs.

    rows_count[i] and rows_signed[i] hold (column, value) pairs for plug
    index i.  Entries are exact Python integers.
    """

    base: Region
    plugs: list[int]
    plug_index: dict[int, int]
    rows_count: list[list[tuple[int, int]]]
    rows_signed: list[list[tuple[int, int]]]
    _rows_sharp: list[list[tuple[int, int]]] | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.plugs)

    @property
    def nnz(self) -> tuple[int, int]:
        return (sum(len(r) for r in self.rows_count),
                sum(len(r) for r in self.rows_signed))

    @property
    def rows_count_sharp(self) -> list[list[tuple[int, int]]]:
        """A with vertical-floor transitions removed: entries where the two
        plugs cover the whole base are zeroed."""
        if self._rows_sharp is None:
            full = (1 << len(self.base.cells)) - 1
            self._rows_sharp = [
                [(j, v) for j, v in row if self.plugs[i] | self.plugs[j] != full]
                for i, row in enumerate(self.rows_count)
            ]
        return self._rows_sharp

    def entry_count(self, p0: int, p1: int) -> int:
        i0, i1 = self.plug_index[p0], self.plug_index[p1]
        for j, v in self.rows_count[i0]:
            if j == i1:
                return v
        return 0

    def entry_signed(self, p0: int, p1: int) -> int:
        i0, i1 = self.plug_index[p0], self.plug_index[p1]
        for j, v in self.rows_signed[i0]:
            if j == i1:
                return v
        return 0

    def dense_count(self) -> list[list[int]]:
        return _dense(self.rows_count, self.size)

    def dense_signed(self) -> list[list[int]]:
        return _dense(self.rows_signed, self.size)


def _dense(rows: list[list[tuple[int, int]]], n: int) -> list[list[int]]:
    out = [[0] * n for _ in range(n)]
    for i, row in enumerate(rows):
        for j, v in row:
            out[i][j] = v
    return out


def build_transfer(base: Region, max_plugs: int = MAX_MATRIX_PLUGS) -> TransferMatrices:
    """Construct A and At for a base region."""
    plugs = enumerate_plugs(base)
    if len(plugs) > max_plugs:
        raise TransferError(
            f"{len(plugs)} plugs exceeds the matrix limit {max_plugs};"
            " use the matrix-free cylinder queries for large bases")
    tables = _base_tables(base)
    full = tables.full
    plugs_np = np.array(plugs, dtype=np.int64)
    blacks = base.black_cells
    whites = base.white_cells
    nb = len(blacks)
    bproj = np.array([tables.project(p, blacks) for p in plugs], dtype=np.int64)
    wproj = np.array([tables.project(p, whites) for p in plugs], dtype=np.int64)
    rows_count: list[list[tuple[int, int]]] = []
    rows_signed: list[list[tuple[int, int]]] = []
    for i, p in enumerate(plugs):
        disjoint = (plugs_np & p) == 0
        cols = np.nonzero(disjoint)[0]
        rest = full ^ (p | plugs_np[cols])
        counts = tables.count_table[rest]
        keep = counts != 0
        cols = cols[keep]
        counts = counts[keep]
        rest = rest[keep]
        rows_count.append(list(zip(cols.tolist(), counts.tolist())))
        signed = tables.signed_table[rest].copy()
        par = (tables.parity_bl[(bproj[i] << nb) | bproj[cols]]
               ^ tables.parity_wh[(wproj[i] << nb) | wproj[cols]])
        signed[par == 1] *= -1
        live = signed != 0
        rows_signed.append(list(zip(cols[live].tolist(), signed[live].tolist())))
    plug_index = {p: i for i, p in enumerate(plugs)}
    return TransferMatrices(base, plugs, plug_index, rows_count, rows_signed)


_TRANSFER_CACHE: dict[Region, TransferMatrices] = {}


def get_transfer(base: Region) -> TransferMatrices:
    tm = _TRANSFER_CACHE.get(base)
    if tm is None:
        tm = build_transfer(base)
        _TRANSFER_CACHE[base] = tm
    return tm


# ---------------------------------------------------------------- floors

def floor_subregion(base: Region, cells_mask: int) -> Region:
    cells = [base.cells[i] for i in range(len(base.cells)) if cells_mask >> i & 1]
    return Region(base.dim, cells)


def floor_tilings(base: Region, p0: int, p1: int) -> list[Tiling]:
    """All tilings of the base minus both plugs; empty when plugs overlap."""
    _check_plug(base, p0)
    _check_plug(base, p1)
    if p0 & p1:
        return []
    full = (1 << len(base.cells)) - 1
    sub = floor_subregion(base, full ^ (p0 | p1))
    if not sub.cells:
        return [Tiling(sub, [])]
    return list(enumerate_tilings(sub, limit=None))


def _check_plug(base: Region, mask: int) -> None:
    nc = len(base.cells)
    if not 0 <= mask < (1 << nc):
        raise TransferError(f"plug mask {mask:#x} out of range for {nc} cells")
    nb = (mask & sum(1 << i for i in base.black_cells)).bit_count()
    if 2 * nb != mask.bit_count():
        raise TransferError(f"plug mask {mask:#x} is not balanced")


def plug_inversions(base: Region, p0: int, p1: int) -> tuple[int, int]:
    """Exact (inv_bl, inv_wh) inversion counts for an ordered plug pair."""
    out = []
    for cells in (base.black_cells, base.white_cells):
        h = [(p1 >> i & 1) - (p0 >> i & 1) for i in cells]
        inv = 0
        for r0 in range(len(h)):
            for r1 in range(r0 + 1, len(h)):
                if h[r0] > h[r1]:
                    inv += 1
        out.append(inv)
    return tuple(out)


def floor_twist_pairs(base: Region, p0: int, p1: int,
                      pairs: list[tuple[int, int]]) -> int:
    """Floor twist from dominoes given as pairs of base cell indices."""
    colors = base.colors
    br = base.black_rank
    wr = base.white_rank
    sigma = []
    neg = 0
    for i, j in pairs:
        if colors[i] < 0:
            i, j = j, i
        sigma.append((br[i], wr[j]))
        if _edge_sign_by_index(base, i, j) < 0:
            neg += 1
    sigma.sort()
    inv_sigma = inversion_count([w for _, w in sigma])
    inv_bl, inv_wh = plug_inversions(base, p0, p1)
    return (neg + inv_sigma + inv_bl + inv_wh) & 1


def floor_twist(base: Region, p0: int, p1: int, f: Tiling) -> int:
    """Twist contribution of one floor (p0 below, f in the plane, p1 above)."""
    _check_plug(base, p0)
    _check_plug(base, p1)
    if p0 & p1:
        raise TransferError("plugs overlap; no floor exists")
    full = (1 << len(base.cells)) - 1
    want = full ^ (p0 | p1)
    got = 0
    index = base.index
    for cell in f.region.cells:
        i = index.get(cell)
        if i is None:
            raise TransferError(f"floor cell {cell} is not a base cell")
        got |= 1 << i
    if got != want:
        raise TransferError("floor tiling does not cover base minus plugs")
    pairs = [(index[v], index[w]) for v, w in f.dominoes()]
    return floor_twist_pairs(base, p0, p1, pairs)


def signed_floor_sum(base: Region, cells_mask: int) -> int:
    """Sum of (-1)^(tk + inv(sigma)) over floor tilings of the mask."""
    return int(_base_tables(base).signed_table[cells_mask])


def signed_floor_sum_by_enumeration(base: Region, cells_mask: int) -> int:
    """Oracle for signed_floor_sum: enumerate and add up signs."""
    full = (1 << len(base.cells)) - 1
    if cells_mask > full:
        raise TransferError("mask out of range")
    sub = floor_subregion(base, cells_mask)
    if not sub.cells:
        return 1
    index = base.index
    total = 0
    for f in enumerate_tilings(sub, limit=None):
        pairs = [(index[v], index[w]) for v, w in f.dominoes()]
        tw = floor_twist_pairs(base, 0, 0, pairs)
        total += 1 - 2 * tw
    return total


# ------------------------------------------------------- powers and counts

def _apply_rows(rows: list[list[tuple[int, int]]], vec: list[int]) -> list[int]:
    out = [0] * len(vec)
    for i, vi in enumerate(vec):
        if vi:
            for j, a in rows[i]:
                out[j] += vi * a
    return out


def power_vector(rows: list[list[tuple[int, int]]], start: int, n: int,
                 size: int) -> list[int]:
    """Row `start` of the n-th power of a sparse matrix, exact integers."""
    vec = [0] * size
    vec[start] = 1
    for _ in range(n):
        vec = _apply_rows(rows, vec)
    return vec


def cylinder_count(base: Region, floors: int) -> int:
    """Number of tilings of base x [0, floors]."""
    if floors < 0:
        raise TransferError("floor count must be nonnegative")
    if len(enumerate_plugs(base)) <= MAX_MATRIX_PLUGS:
        tm = get_transfer(base)
        return power_vector(tm.rows_count, 0, floors, tm.size)[0]
    return _matrix_free_entry(base, floors, signed=False)


def cylinder_defect(base: Region, floors: int) -> int:
    """Twist-0 count minus twist-1 count for base x [0, floors]."""
    if floors < 0:
        raise TransferError("floor count must be nonnegative")
    if len(enumerate_plugs(base)) <= MAX_MATRIX_PLUGS:
        tm = get_transfer(base)
        return power_vector(tm.rows_signed, 0, floors, tm.size)[0]
    return _matrix_free_entry(base, floors, signed=True)


def cork_count(base: Region, floors: int, p0: int, p_top: int) -> int:
    """Tilings of the cylinder with plug p0 removed at the bottom and p_top
    at the top (cells already covered by dominoes of neighboring regions)."""
    _check_plug(base, p0)
    _check_plug(base, p_top)
    tm = get_transfer(base)
    vec = power_vector(tm.rows_count, tm.plug_index[p0], floors, tm.size)
    return vec[tm.plug_index[p_top]]


def twist_split(base: Region, floors: int) -> tuple[int, int]:
    """(twist-0 count, twist-1 count) for base x [0, floors]."""
    total = cylinder_count(base, floors)
    delta = cylinder_defect(base, floors)
    if (total + delta) % 2:
        raise TransferError(
            f"internal error: count {total} and defect {delta} disagree in parity")
    t0 = (total + delta) // 2
    t1 = (total - delta) // 2
    if t0 < 0 or t1 < 0:
        raise TransferError("internal error: negative twist class count")
    return t0, t1


def count_with_few_vertical_floors(base: Region, floors: int, bound: int) -> int:
    """Tilings of base x [0, floors] with fewer than `bound` vertical floors.

    A floor is vertical when its two plugs cover every base cell.  Layered
    powers of the count matrix with vertical transitions split out."""
    if bound <= 0:
        return 0
    tm = get_transfer(base)
    sharp = tm.rows_count_sharp
    full = (1 << len(base.cells)) - 1
    vert_rows = [
        [(j, v) for j, v in row if tm.plugs[i] | tm.plugs[j] == full]
        for i, row in enumerate(tm.rows_count)
    ]
    layers = [[0] * tm.size for _ in range(bound)]
    layers[0][0] = 1
    for _ in range(floors):
        new = []
        for m in range(bound):
            vec = _apply_rows(sharp, layers[m])
            if m > 0:
                up = _apply_rows(vert_rows, layers[m - 1])
                vec = [a + b for a, b in zip(vec, up)]
            new.append(vec)
        layers = new
    return sum(layer[0] for layer in layers)


def _matrix_free_entry(base: Region, floors: int, signed: bool) -> int:
    """(M^floors)[empty][empty] without materializing M, for large plug sets.

    Runs in int64; raises if an overflow bound is hit."""
    plugs = enumerate_plugs(base)
    tables = _base_tables(base)
    full = tables.full
    plugs_np = np.array(plugs, dtype=np.int64)
    value_table = tables.signed_table if signed else tables.count_table
    max_entry = int(np.abs(value_table).max())
    if signed:
        blacks, whites = base.black_cells, base.white_cells
        nb = len(blacks)
        bproj = np.array([tables.project(p, blacks) for p in plugs], dtype=np.int64)
        wproj = np.array([tables.project(p, whites) for p in plugs], dtype=np.int64)
    vec = np.zeros(len(plugs), dtype=np.int64)
    vec[0] = 1
    for _ in range(floors):
        bound = int(np.abs(vec).max()) * max_entry * len(plugs)
        if bound >= 1 << 62:
            raise TransferError(
                "matrix-free power exceeds the int64 budget; reduce floors"
                " or use a base small enough for exact matrix powers")
        new = np.zeros_like(vec)
        for i in np.nonzero(vec)[0]:
            i = int(i)
            p = plugs[i]
            disjoint = (plugs_np & p) == 0
            cols = np.nonzero(disjoint)[0]
            rest = full ^ (p | plugs_np[cols])
            vals = value_table[rest].copy()
            if signed:
                par = (tables.parity_bl[(bproj[i] << nb) | bproj[cols]]
                       ^ tables.parity_wh[(wproj[i] << nb) | wproj[cols]])
                vals[par == 1] *= -1
            new[cols] += vec[i] * vals
        vec = new
    return int(vec[0])


# ---------------------------------------------------------------- spectral

@dataclass
class SpectralReport:
    """Power-iteration estimates; the only floating-point results here."""

    lam: float
    lam_tilde: float
    ratio: float
    residual: float
    residual_tilde: float
    iterations: int
    iterations_tilde: int

    def __iter__(self):
        return iter((self.lam, self.lam_tilde, self.ratio))


def _power_iteration(mat: np.ndarray, tol: float, max_iter: int) -> tuple[float, float, int]:
    n = mat.shape[0]
    v = np.full(n, 1.0 / math.sqrt(n))
    lam = 0.0
    resid = math.inf
    for it in range(1, max_iter + 1):
        w = mat @ v
        lam = float(v @ w)
        resid = float(np.linalg.norm(w - lam * v))
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0, 0.0, it
        v = w / norm
        if resid <= tol * max(1.0, abs(lam)):
            return lam, resid, it
    raise TransferError(
        f"power iteration did not converge in {max_iter} steps;"
        f" residual {resid:.3e}")


def spectral_estimates(base: Region, tol: float = 1e-9,
                       max_iter: int = 200_000) -> SpectralReport:
    """Dominant eigenvalue of A, dominant |eigenvalue| of At, and their ratio.

    At's value comes from power iteration on At @ At followed by a square
    root.  Raises unless the signed value is strictly below the count value.
    """
    tm = get_transfer(base)
    a = np.array(tm.dense_count(), dtype=np.float64)
    at = np.array(tm.dense_signed(), dtype=np.float64)
    lam, resid, iters = _power_iteration(a, tol, max_iter)
    lam2, resid2, iters2 = _power_iteration(at @ at, tol, max_iter)
    lam_tilde = math.sqrt(max(lam2, 0.0))
    if not lam_tilde < lam:
        raise TransferError(
            f"expected the signed spectral value {lam_tilde} to sit strictly"
            f" below the count value {lam}")
    return SpectralReport(lam, lam_tilde, lam_tilde / lam if lam else math.nan,
                          resid, resid2, iters, iters2)


# ------------------------------------------------------------------ export

def transfer_to_json_obj(tm: TransferMatrices) -> dict:
    return {
        "version": CACHE_FORMAT_VERSION,
        "base": region_spec(tm.base),
        "plugs": list(tm.plugs),
        "A": tm.dense_count(),
        "Atilde": tm.dense_signed(),
    }


def save_transfer_cache(tm: TransferMatrices, path: str) -> None:
    """Compact binary cache: zlib-compressed sparse triples."""
    header = json.dumps({
        "format": CACHE_FORMAT_VERSION,
        "base": region_spec(tm.base),
        "plugs": len(tm.plugs),
    }).encode()
    chunks = [struct.pack("<I", len(header)), header]
    chunks.append(struct.pack("<%dq" % len(tm.plugs), *tm.plugs))
    for rows in (tm.rows_count, tm.rows_signed):
        triples = [(i, j, v) for i, row in enumerate(rows) for j, v in row]
        chunks.append(struct.pack("<q", len(triples)))
        for i, j, v in triples:
            chunks.append(struct.pack("<iiq", i, j, v))
    blob = zlib.compress(b"".join(chunks), 6)
    with open(path, "wb") as fh:
        fh.write(b"DTRC" + struct.pack("<I", CACHE_FORMAT_VERSION) + blob)


def load_transfer_cache(path: str, base: Region | None = None) -> TransferMatrices:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != b"DTRC":
        raise TransferError(f"{path}: not a transfer cache file")
    version = struct.unpack("<I", raw[4:8])[0]
    if version != CACHE_FORMAT_VERSION:
        raise TransferError(f"{path}: cache format {version} unsupported")
    data = zlib.decompress(raw[8:])
    off = 4
    hlen = struct.unpack("<I", data[:4])[0]
    header = json.loads(data[off:off + hlen])
    off += hlen
    n = header["plugs"]
    plugs = list(struct.unpack_from("<%dq" % n, data, off))
    off += 8 * n
    if base is not None and header["base"] != region_spec(base):
        raise TransferError(
            f"{path}: cache was built for {header['base']},"
            f" not {region_spec(base)}")
    if base is None:
        from .regions import parse_region_spec
        base = parse_region_spec(header["base"])
    matrices = []
    for _ in range(2):
        count = struct.unpack_from("<q", data, off)[0]
        off += 8
        rows: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for _ in range(count):
            i, j, v = struct.unpack_from("<iiq", data, off)
            off += 16
            rows[i].append((j, v))
        matrices.append(rows)
    plug_index = {p: i for i, p in enumerate(plugs)}
    return TransferMatrices(base, plugs, plug_index, matrices[0], matrices[1])
