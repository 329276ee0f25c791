import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from pfaffnet.bounds import betti_bound
from pfaffnet.chain import compute_format
from pfaffnet.errors import BudgetError, DomainError, ShapeError
from pfaffnet.network import forward_batch, sample_network
from pfaffnet.topology import (
    CubicalComplex,
    SignGrid,
    ZeroSearchOptions,
    _cell_faces,
    betti_z2,
    cell_centers,
    components,
    count_zeros_1d,
    gf2_rank,
    scalar_fixture,
    sign_grid,
    signgrid_from_rle,
    signgrid_to_rle,
    superlevel_intervals_1d,
)

from .helpers import dense_zero_locations, naive_gf2_rank

BOX2 = [(-2.0, 2.0), (-2.0, 2.0)]


# -- zeros ------------------------------------------------------------------------


def test_zeros_tanh():
    zc = count_zeros_1d(np.tanh, (-1.0, 1.0))
    assert zc.count == 1
    assert zc.locations[0] == pytest.approx(0.0, abs=1e-9)
    assert not zc.identically_zero


def test_zeros_shifted_single_neuron():
    net = _head_shifted_tanh()
    zc = count_zeros_1d(lambda t: forward_batch(net, t[:, None]), (-2.0, 2.0))
    assert zc.count == 1
    assert zc.locations[0] == pytest.approx(math.atanh(0.5), abs=1e-8)


def _head_shifted_tanh():
    from pfaffnet.activations import get_activation
    from pfaffnet.network import NetworkSpec

    return NetworkSpec(
        1, 1, (1,), (np.array([[1.0]]),), (np.array([0.0]),), -0.5, np.array([1.0]),
        get_activation("tanh"),
    )


def test_zeros_match_dense_oracle_sample(rng):
    archs = [(2, (4, 3)), (3, (5, 4, 3)), (2, (5, 5)), (1, (5,))]
    for seed in range(15):
        L, widths = archs[seed % len(archs)]
        name = ["tanh", "logistic", "softplus"][seed % 3]
        net = sample_network(1, L, widths, name, seed=seed, scale=4.0)
        f = lambda t: forward_batch(net, t[:, None])
        zc = count_zeros_1d(f, (-4.0, 4.0))
        oracle = dense_zero_locations(f, -4.0, 4.0)
        assert zc.count == len(oracle), (seed, zc.locations, oracle)
        for mine, ref in zip(zc.locations, oracle):
            assert mine == pytest.approx(ref, abs=1e-6)


def test_zeros_identically_zero_flagged():
    zc = count_zeros_1d(lambda t: np.zeros_like(t), (-1.0, 1.0))
    assert zc.identically_zero and zc.count == 0


def test_zeros_tangential_reported_not_counted():
    # t^2 touches zero without a sign change
    zc = count_zeros_1d(lambda t: t * t, (-1.0, 1.0))
    assert zc.count == 0
    assert len(zc.tangential) == 1
    assert zc.tangential[0] == pytest.approx(0.0, abs=1e-3)


def test_zeros_requires_vectorized_evaluator():
    with pytest.raises(ShapeError):
        count_zeros_1d(lambda t: 1.0, (-1.0, 1.0))


def test_superlevel_intervals_tanh():
    ivs = superlevel_intervals_1d(np.tanh, (-1.0, 1.0))
    assert len(ivs) == 1
    lo, hi = ivs[0]
    assert lo == pytest.approx(0.0, abs=1e-9) and hi == 1.0


def test_superlevel_intervals_sign_pattern():
    # x^2 - 0.25 on (-1, 1): signs (+, -, +) around zeros at +/- 0.5
    ivs = superlevel_intervals_1d(lambda t: t * t - 0.25, (-1.0, 1.0))
    assert len(ivs) == 2
    assert ivs[0][0] == -1.0 and ivs[0][1] == pytest.approx(-0.5, abs=1e-8)
    assert ivs[1][0] == pytest.approx(0.5, abs=1e-8) and ivs[1][1] == 1.0


def test_superlevel_identically_zero_whole_interval():
    assert superlevel_intervals_1d(lambda t: np.zeros_like(t), (-1.0, 1.0)) == [(-1.0, 1.0)]


def test_interval_count_bounded_by_zero_count(rng):
    for seed in range(10):
        net = sample_network(1, 2, (4, 3), "tanh", seed=seed, scale=4.0)
        f = lambda t: forward_batch(net, t[:, None])
        zc = count_zeros_1d(f, (-4.0, 4.0))
        ivs = superlevel_intervals_1d(f, (-4.0, 4.0))
        assert len(ivs) <= zc.count + 1


# -- sign grids --------------------------------------------------------------------


def test_sign_grid_disk_area():
    grid = sign_grid(scalar_fixture("disk"), BOX2, 64)
    area = grid.flagged_count() * (4.0 / 64) ** 2
    assert area == pytest.approx(math.pi, rel=0.02)


def test_sign_grid_tau_above_max_empty():
    grid = sign_grid(scalar_fixture("disk"), BOX2, 32, tau=2.0)
    assert grid.flagged_count() == 0


def test_sign_grid_resolution_refinement():
    a = sign_grid(scalar_fixture("disk"), BOX2, 64)
    b = sign_grid(scalar_fixture("disk"), BOX2, 128)
    area_a = a.flagged_count() * (4.0 / 64) ** 2
    area_b = b.flagged_count() * (4.0 / 128) ** 2
    assert abs(area_a - area_b) / area_b < 0.05


def test_sign_grid_budget():
    with pytest.raises(BudgetError):
        sign_grid(scalar_fixture("disk"), BOX2, 4096, cell_budget=1000)


def test_sign_grid_domain_error_carries_cell_index():
    def bad(X):
        out = np.asarray(X[:, 0] * 0.0 + 1.0)
        out[3] = np.nan
        return out

    with pytest.raises(DomainError, match="cell"):
        sign_grid(bad, BOX2, 8)


def test_cell_centers_layout():
    centers = cell_centers([(0.0, 1.0), (0.0, 2.0)], (2, 4))
    assert centers.shape == (8, 2)
    assert centers[0] == pytest.approx([0.25, 0.25])
    assert centers[-1] == pytest.approx([0.75, 1.75])


def test_signgrid_validation():
    with pytest.raises(ShapeError):
        SignGrid(((0, 1),), (1,), np.zeros(1, dtype=bool))
    with pytest.raises(ShapeError):
        SignGrid(((0, 1), (0, 1)), (4, 4), np.zeros((4, 3), dtype=bool))


# -- homology -----------------------------------------------------------------------


@pytest.mark.parametrize(
    "fixture,expect", [("disk", (1, 0)), ("annulus", (1, 1)), ("two_disks", (2, 0))]
)
def test_fixture_homology(fixture, expect):
    for res in (64, 128):
        grid = sign_grid(scalar_fixture(fixture), BOX2, res)
        betti = betti_z2(grid)
        assert betti.b[:2] == expect
        assert betti.b[2] == 0
        assert components(grid) == betti.b[0]


def test_empty_grid():
    grid = SignGrid(BOX2, (8, 8), np.zeros((8, 8), dtype=bool))
    assert betti_z2(grid).b == (0, 0, 0)
    assert components(grid) == 0


def test_full_grid_contractible():
    grid = SignGrid(BOX2, (8, 8), np.ones((8, 8), dtype=bool))
    assert betti_z2(grid).b == (1, 0, 0)


def test_3d_ball_and_shell():
    ball = lambda X: 1.0 - (X**2).sum(axis=1)
    shell = lambda X: np.minimum((X**2).sum(axis=1) - 0.25, 1.0 - (X**2).sum(axis=1))
    box = [(-2.0, 2.0)] * 3
    assert betti_z2(sign_grid(ball, box, 16)).b == (1, 0, 0, 0)
    assert betti_z2(sign_grid(shell, box, 16)).b == (1, 0, 1, 0)


def test_1d_homology_matches_intervals():
    f = lambda t: np.sin(3.0 * t)
    grid = sign_grid(lambda X: f(X[:, 0]), [(-2.0, 2.0)], 256)
    ivs = superlevel_intervals_1d(f, (-2.0, 2.0))
    betti = betti_z2(grid)
    assert betti.b[0] == len(ivs)
    assert components(grid) == len(ivs)


def test_boundary_squared_vanishes(rng):
    grid = sign_grid(scalar_fixture("annulus"), BOX2, 32)
    complex_ = CubicalComplex(grid)
    for cell in complex_.cells[2][:50]:
        counts = {}
        for face in _cell_faces(cell):
            for sub in _cell_faces(face):
                counts[sub] = counts.get(sub, 0) + 1
        assert all(c % 2 == 0 for c in counts.values())


def test_euler_characteristic_consistency():
    for fixture in ("disk", "annulus", "two_disks"):
        grid = sign_grid(scalar_fixture(fixture), BOX2, 48)
        complex_ = CubicalComplex(grid)
        betti = betti_z2(grid)
        chi_cells = complex_.euler_characteristic()
        chi_betti = sum((-1) ** i * b for i, b in enumerate(betti.b))
        assert chi_cells == chi_betti


@given(
    hnp.arrays(dtype=bool, shape=st.tuples(st.integers(2, 9), st.integers(2, 9)))
)
@settings(max_examples=60)
def test_components_equals_b0_random_bitmaps(flags):
    grid = SignGrid(((0.0, 1.0), (0.0, 1.0)), flags.shape, flags)
    assert components(grid) == betti_z2(grid).b[0]


@given(
    hnp.arrays(
        dtype=bool, shape=st.tuples(st.integers(2, 5), st.integers(2, 5), st.integers(2, 5))
    )
)
@settings(max_examples=25)
def test_components_equals_b0_random_3d_bitmaps(flags):
    grid = SignGrid(((0.0, 1.0),) * 3, flags.shape, flags)
    assert components(grid) == betti_z2(grid).b[0]


@given(
    st.integers(1, 10),
    st.integers(1, 10),
    st.data(),
)
def test_gf2_rank_matches_naive(m, n, data):
    bits = data.draw(hnp.arrays(dtype=np.uint8, shape=(m, n), elements=st.integers(0, 1)))
    ri, ci = np.nonzero(bits)
    assert gf2_rank(m, n, ri, ci) == naive_gf2_rank(bits)


def test_random_networks_b0_cross_method(rng):
    # components (union-find) against boundary reduction, 50 seeds, res 128
    for seed in range(50):
        net = sample_network(2, 2, (3, 3), "tanh", seed=seed, scale=1.5)
        grid = sign_grid(lambda X: forward_batch(net, X), BOX2, 128)
        assert components(grid) == betti_z2(grid).b[0], seed


def test_measured_betti_conforms_to_bound(rng):
    fmt = compute_format(2, 2, (3, 3), 0)
    bound = betti_bound(2, fmt.R, 2)
    for seed in range(5):
        net = sample_network(2, 2, (3, 3), "tanh", seed=seed, scale=1.5)
        grid = sign_grid(lambda X: forward_batch(net, X), BOX2, 64)
        total = betti_z2(grid).total
        assert math.log10(max(total, 1)) <= bound.log10


def test_betti_budget():
    grid = SignGrid(BOX2, (64, 64), np.ones((64, 64), dtype=bool))
    with pytest.raises(BudgetError):
        betti_z2(grid, cell_budget=10)


# -- RLE export -------------------------------------------------------------------------


def test_rle_roundtrip(rng):
    flags = rng.uniform(size=(16, 16)) < 0.4
    grid = SignGrid(BOX2, (16, 16), flags)
    text = signgrid_to_rle(grid, {"criterion": "minor", "threshold": 0.5})
    back, meta = signgrid_from_rle(text)
    assert np.array_equal(back.flags, grid.flags)
    assert back.box == grid.box
    assert meta["criterion"] == "minor"


def test_rle_deterministic():
    flags = np.zeros((4, 4), dtype=bool)
    flags[1:3, 1:3] = True
    grid = SignGrid(((0.0, 1.0), (0.0, 1.0)), (4, 4), flags)
    assert signgrid_to_rle(grid) == signgrid_to_rle(grid)
    lines = signgrid_to_rle(grid).splitlines()
    assert lines[0].startswith("# box=")
    assert "offset,length" in lines
