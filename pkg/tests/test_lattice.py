from collections import Counter

import pytest
from hypothesis import given, strategies as st

from hexice import lattice
from hexice.lattice import DefectClass


def test_site_mask_is_msb_first():
    assert lattice.site_mask(1) == 1 << 11
    assert lattice.site_mask(12) == 1
    assert lattice.parse_ket("|100000000000>") == 1 << 11
    assert lattice.ket(lattice.STATE_B) == "|010101010101>"


def test_edges_and_vortices():
    assert lattice.EDGES == ((1, 2), (3, 4), (5, 6), (7, 8), (9, 10), (11, 12))
    assert lattice.VORTICES[-1] == (12, 1)
    assert lattice.edge_partner(3) == 4 and lattice.vortex_partner(1) == 12


@pytest.mark.parametrize("bad", [0, 13, -1])
def test_bad_site(bad):
    with pytest.raises(ValueError):
        lattice.check_site(bad)


@pytest.mark.parametrize("ket, cls", [
    ("|010101010101>", DefectClass.ICE_RULE),
    ("|101010101010>", DefectClass.ICE_RULE),
    ("|100101010101>", DefectClass.IONIC),
    ("|110000000000>", DefectClass.BJERRUM),
    ("|000000000000>", DefectClass.BJERRUM),
])
def test_classify(ket, cls):
    assert lattice.classify(lattice.parse_ket(ket)) is cls


def test_classification_counts():
    counts = Counter(lattice.classify(s) for s in range(lattice.DIM))
    assert counts == {DefectClass.ICE_RULE: 2, DefectClass.IONIC: 62, DefectClass.BJERRUM: 4032}


@pytest.mark.parametrize("ket, label", [
    ("|010101010101>", (1,) * 6),
    ("|000000000000>", (0,) * 6),
    ("|110000000000>", (2, 0, 0, 0, 0, 0)),
])
def test_sector_of(ket, label):
    assert lattice.sector_of(lattice.parse_ket(ket)) == label


def test_enumerate_sector():
    ice = lattice.enumerate_sector(lattice.ICE_LABEL)
    assert len(ice) == 64
    assert list(ice) == sorted(ice)
    assert Counter(lattice.classify(s) for s in ice) == {DefectClass.ICE_RULE: 2, DefectClass.IONIC: 62}
    assert lattice.enumerate_sector((2,) * 6) == (4095,)


def test_sectors_partition_the_basis():
    labels = lattice.all_sector_labels()
    assert len(labels) == 729
    seen = [s for lab in labels for s in lattice.enumerate_sector(lab)]
    assert sorted(seen) == list(range(lattice.DIM))


@pytest.mark.parametrize("label", [(1, 1, 1), (3, 0, 0, 0, 0, 0), (1, 1, 1, 1, 1, -1)])
def test_bad_label(label):
    with pytest.raises(ValueError):
        lattice.enumerate_sector(label)


@given(st.integers(0, lattice.DIM - 1))
def test_sector_label_sums_to_proton_count(s):
    label = lattice.sector_of(s)
    assert sum(label) == lattice.proton_count(s)
    assert s in lattice.enumerate_sector(label)
    assert lattice.parse_ket(lattice.ket(s)) == s
