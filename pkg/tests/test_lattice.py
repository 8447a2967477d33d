import pytest

from vdperc.lattice import LatticeGeometry, neighbors


def test_corner_wrap_L4():
    geom = LatticeGeometry(4)
    got = neighbors(geom, 0)
    assert got == [(1, (1, 0)), (3, (-1, 0)), (4, (0, 1)), (12, (0, -1))]


def test_degenerate_L2_duplicate_partners():
    geom = LatticeGeometry(2)
    got = neighbors(geom, 0)
    assert len(got) == 4
    assert sorted(nb for nb, _ in got) == [1, 1, 2, 2]
    # duplicated partner ids, but distinct bonds
    assert len({disp for _, disp in got}) == 4


def test_interior_site_L3():
    geom = LatticeGeometry(3)
    assert sorted(nb for nb, _ in neighbors(geom, 4)) == [1, 3, 5, 7]


@pytest.mark.parametrize("L", [2, 3, 4, 7])
def test_neighbor_relation_symmetric(L):
    geom = LatticeGeometry(L)
    for s in range(geom.N):
        for nb, (dx, dy) in neighbors(geom, s):
            back = [(m, d) for m, d in neighbors(geom, nb) if m == s and d == (-dx, -dy)]
            assert back, f"missing reverse bond {nb}->{s}"


def test_every_site_has_four_bonds():
    geom = LatticeGeometry(5)
    assert all(len(neighbors(geom, s)) == 4 for s in range(geom.N))


def test_out_of_range_site_rejected():
    geom = LatticeGeometry(4)
    with pytest.raises(ValueError):
        neighbors(geom, 16)
    with pytest.raises(ValueError):
        neighbors(geom, -1)


def test_tiny_lattice_rejected():
    with pytest.raises(ValueError):
        LatticeGeometry(1)
