from __future__ import annotations

import math

import pytest

from dominotwist.kasteleyn import defect_by_enumeration, twist
from dominotwist.regions import Region, make_box, make_cork, make_cylinder
from dominotwist.tilings import count_tilings, decompose_floors, enumerate_tilings
from dominotwist.transfer import (
    TransferError,
    build_transfer,
    cork_count,
    count_with_few_vertical_floors,
    cylinder_count,
    cylinder_defect,
    enumerate_plugs,
    floor_tilings,
    floor_twist,
    get_transfer,
    load_transfer_cache,
    plug_inversions,
    power_vector,
    save_transfer_cache,
    signed_floor_sum,
    signed_floor_sum_by_enumeration,
    spectral_estimates,
    transfer_to_json_obj,
    twist_split,
)

B222 = make_box((2, 2, 2))
B223 = make_box((2, 2, 3))


def test_enumerate_plugs_counts():
    assert len(enumerate_plugs(make_box((2, 2)))) == 6  # sum C(2,k)^2
    assert len(enumerate_plugs(B222)) == 70  # sum C(4,k)^2
    assert len(enumerate_plugs(B223)) == 924  # sum C(6,k)^2


def test_plugs_sorted_and_balanced():
    plugs = enumerate_plugs(B222)
    assert plugs == sorted(plugs)
    assert plugs[0] == 0
    blacks = sum(1 << i for i in B222.black_cells)
    for p in plugs:
        assert bin(p & blacks).count("1") * 2 == bin(p).count("1")


def test_floor_tilings_match_entries():
    tm = get_transfer(B222)
    plugs = tm.plugs
    for i in (0, 1, 7, 35):
        for j in (0, 2, 11, 69):
            fts = floor_tilings(B222, plugs[i], plugs[j])
            assert len(fts) == tm.entry_count(plugs[i], plugs[j])


def test_entry_zero_when_plugs_overlap():
    tm = get_transfer(B222)
    p = tm.plugs[1]
    assert tm.entry_count(p, p) == 0
    assert tm.entry_signed(p, p) == 0
    assert floor_tilings(B222, p, p) == []


def test_signed_floor_sum_matches_enumeration():
    for mask in (0, 0b11, 0b1111, 0xFF, 0b111100, 0b11000011):
        assert signed_floor_sum(B222, mask) == \
            signed_floor_sum_by_enumeration(B222, mask), bin(mask)


def test_transfer_count_small_cylinders():
    for n in range(5):
        direct = count_tilings(make_cylinder(B222, n))
        assert cylinder_count(B222, n) == direct, n


def test_transfer_matches_frozen_cylinder_counts():
    assert cylinder_count(B222, 2) == 272
    assert cylinder_count(B222, 3) == 6345
    assert cylinder_count(B223, 3) == 862112


def test_defect_transfer_vs_enumeration():
    for n in range(4):
        r = make_cylinder(B222, n)
        assert cylinder_defect(B222, n) == defect_by_enumeration(r), n


def test_cylinder_count_rejects_negative():
    with pytest.raises(TransferError):
        cylinder_count(B222, -1)


def test_twist_split_identities():
    for base, n in ((B222, 3), (B222, 4), (B223, 2)):
        t0, t1 = twist_split(base, n)
        assert t0 + t1 == cylinder_count(base, n)
        assert t0 - t1 == cylinder_defect(base, n)
        assert t0 >= 0 and t1 >= 0


def test_twist_split_2222():
    t0, t1 = twist_split(B222, 2)
    assert (t0, t1) == (264, 8)


def test_atilde_symmetric():
    for base in (B222, B223):
        m = get_transfer(base).dense_signed()
        n = len(m)
        for i in range(n):
            for j in range(i):
                assert m[i][j] == m[j][i]


def test_plug_inversions_identity_disjoint_pairs():
    # inv counts swap-symmetrize to a pure cardinality formula on
    # disjoint plug pairs
    base = make_box((2, 2))
    plugs = enumerate_plugs(base)
    nb = len(base.cells) // 2
    for p0 in plugs:
        for p1 in plugs:
            if p0 & p1:
                continue
            b0 = bin(p0).count("1") // 2
            b1 = bin(p1).count("1") // 2
            lhs = plug_inversions(base, p0, p1)[0] + \
                plug_inversions(base, p1, p0)[0]
            assert lhs == b0 * b1 + (b0 + b1) * (nb - b0 - b1)


def test_floor_twist_sums_to_global_twist():
    # the per-floor twist bookkeeping must add up to the tiling's twist
    r = make_cylinder(B222, 2)
    for t in enumerate_tilings(r):
        fd = decompose_floors(t)
        total = 0
        for k in range(fd.floors):
            sub = [(i, j) for i, j in fd.floor_pairs[k]]
            f = _floor_tiling_of(B222, fd.plugs[k], fd.plugs[k + 1], sub)
            total ^= floor_twist(B222, fd.plugs[k], fd.plugs[k + 1], f)
        assert total == twist(t)


def _floor_tiling_of(base, p0, p1, pairs):
    from dominotwist.tilings import Tiling
    from dominotwist.transfer import floor_subregion
    full = (1 << len(base.cells)) - 1
    sub = floor_subregion(base, full & ~(p0 | p1))
    return Tiling.from_dominoes(
        sub, [(base.cells[i], base.cells[j]) for i, j in pairs])


def test_power_vector_matches_dense_power():
    import numpy as np
    tm = get_transfer(make_box((2, 2)))
    a = np.array(tm.dense_count(), dtype=object)
    vec = power_vector(tm.rows_count, 0, 3, tm.size)
    expect = np.linalg.matrix_power(a, 3)[0]
    assert list(vec) == list(expect)


def test_cork_count_matches_enumeration():
    base = make_box((2, 2))
    plugs = enumerate_plugs(base)
    for p_top in plugs:
        for floors in (1, 2, 3):
            if floors == 1 and p_top:
                continue
            r = make_cork(base, floors, 0, p_top)
            assert cork_count(base, floors, 0, p_top) == count_tilings(r), \
                (floors, p_top)


def test_count_with_few_vertical_floors():
    # strictly fewer than `bound` floors may have their plugs cover the
    # whole base; bound 0 is vacuous, bound > floors is the full count
    assert count_with_few_vertical_floors(B222, 3, 0) == 0
    full3 = cylinder_count(B222, 3)
    assert count_with_few_vertical_floors(B222, 3, 4) == full3
    no_vert = count_with_few_vertical_floors(B222, 3, 1)
    assert 9 ** 3 <= no_vert < full3
    # at N=2 the all-vertical tiling is the unique one with a vertical
    # floor (and it has two of them)
    full2 = cylinder_count(B222, 2)
    assert count_with_few_vertical_floors(B222, 2, 1) == full2 - 1
    assert count_with_few_vertical_floors(B222, 2, 2) == full2 - 1
    assert count_with_few_vertical_floors(B222, 2, 3) == full2


def test_spectral_estimates_values():
    lam, lam_tilde, ratio = spectral_estimates(B222, tol=1e-12)
    assert math.isclose(lam, 24.373194549258, rel_tol=1e-9)
    assert math.isclose(lam_tilde, 22.956439237389, rel_tol=1e-9)
    assert lam_tilde < lam
    assert math.isclose(ratio, lam_tilde / lam, rel_tol=1e-12)


def test_spectral_growth_matches_lambda():
    lam = spectral_estimates(B222, tol=1e-12).lam
    c20, c21 = cylinder_count(B222, 20), cylinder_count(B222, 21)
    assert abs(c21 / c20 - lam) / lam < 1e-3


def test_transfer_json_export_shape():
    tm = get_transfer(make_box((2, 2)))
    obj = transfer_to_json_obj(tm)
    assert obj["version"] == 1
    assert obj["base"] == "box:2,2"
    assert len(obj["plugs"]) == 6 == len(obj["A"]) == len(obj["Atilde"])
    assert obj["A"][0][0] == 2  # one floor of the bare base: two tilings


def test_cache_roundtrip(tmp_path):
    tm = get_transfer(B222)
    path = str(tmp_path / "b222.dtrc")
    save_transfer_cache(tm, path)
    back = load_transfer_cache(path)
    assert back.plugs == tm.plugs
    assert back.dense_count() == tm.dense_count()
    assert back.dense_signed() == tm.dense_signed()


def test_cache_rejects_wrong_base(tmp_path):
    tm = get_transfer(B222)
    path = str(tmp_path / "b222.dtrc")
    save_transfer_cache(tm, path)
    with pytest.raises(TransferError):
        load_transfer_cache(path, base=B223)


def test_cache_rejects_garbage(tmp_path):
    path = tmp_path / "junk.dtrc"
    path.write_bytes(b"NOPE" + b"\0" * 16)
    with pytest.raises(TransferError):
        load_transfer_cache(str(path))


def test_build_transfer_plug_cap():
    with pytest.raises(TransferError):
        build_transfer(B223, max_plugs=10)


@pytest.mark.extended
def test_large_base_matrix_free_route():
    # 3x3x2 base: 48620 plugs, too many for dense matrices; the matrix-free
    # path must agree with direct enumeration at one and two floors
    base = make_box((3, 3, 2))
    for floors in (1, 2):
        r = make_cylinder(base, floors)
        assert cylinder_count(base, floors) == count_tilings(r)
        assert cylinder_defect(base, floors) == defect_by_enumeration(r)
