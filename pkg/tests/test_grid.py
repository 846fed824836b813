import numpy as np
import pytest
from hypothesis import given, strategies as st

from spmdgrid.errors import GridError, IndexOutOfRange, InvalidPartitioning
from spmdgrid.grid import (GridSpec, Partition, grid_point, index_points,
                           partition_points, plan_partitions)


def ranges(n, nproc, step=1.0):
    return [(p.start_index, p.end_index)
            for p in plan_partitions(GridSpec(n * step, step), nproc)]


class TestGridSpec:
    def test_point_count(self):
        g = GridSpec(100, 0.001)
        assert g.n == 100000 and g.point_count == 100001

    @pytest.mark.parametrize("maxvalue, step", [(1, 0), (1, -0.1), (0, 0.1), (-1, 0.1),
                                                (1.05, 0.1), (float("inf"), 1.0)])
    def test_rejected(self, maxvalue, step):
        with pytest.raises(GridError):
            GridSpec(maxvalue, step)

    def test_paper_grids_align(self):
        for m in (2, 4, 6):
            assert GridSpec(m * 10000, 0.001).n == m * 10_000_000


class TestPlan:
    def test_four_way(self):
        assert ranges(100, 4) == [(0, 25), (26, 50), (51, 75), (76, 100)]

    def test_single(self):
        assert ranges(100, 1) == [(0, 100)]

    def test_three_way_non_divisible(self):
        assert ranges(10, 3) == [(0, 3), (4, 7), (8, 10)]

    def test_ranks(self):
        assert [p.rank for p in plan_partitions(GridSpec(10, 1), 5)] == list(range(5))

    @pytest.mark.parametrize("nproc", [0, -1, 11])
    def test_invalid(self, nproc):
        with pytest.raises(InvalidPartitioning):
            plan_partitions(GridSpec(10, 1), nproc)

    def test_divisible_sizes(self):
        sizes = [p.size for p in plan_partitions(GridSpec(120, 1), 8)]
        assert sizes == [16] + [15] * 7

    @given(st.integers(1, 5000).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n))))
    def test_cover_and_balance(self, case):
        n, nproc = case
        parts = plan_partitions(GridSpec(float(n), 1.0), nproc)
        assert parts[0].start_index == 0 and parts[-1].end_index == n
        for a, b in zip(parts, parts[1:]):
            assert b.start_index == a.end_index + 1
        sizes = [p.size for p in parts]
        assert max(sizes) - min(sizes) <= 1


class TestPoints:
    def test_origin(self):
        assert grid_point(0, GridSpec(5, 0.1)) == 0.0

    def test_single_multiplication(self):
        assert grid_point(1000, GridSpec(2, 0.001)) == 1.0 == 1000 * 0.001

    def test_half_step(self):
        assert grid_point(3, GridSpec(2, 0.5)) == 1.5

    @pytest.mark.parametrize("k", [-1, 5])
    def test_out_of_range(self, k):
        with pytest.raises(IndexOutOfRange):
            grid_point(k, GridSpec(2, 0.5))

    def test_partition_points_small(self):
        pts = partition_points(Partition(0, 0, 2), GridSpec(2, 0.5))
        assert pts.tolist() == [0.0, 0.5, 1.0]

    def test_partition_points_interior(self):
        grid = GridSpec(0.1, 0.001)
        pts = partition_points(Partition(1, 26, 50), grid)
        assert len(pts) == 25
        assert pts[0] == 26 * 0.001 == pytest.approx(0.026)
        assert pts[-1] == 50 * 0.001

    def test_partition_beyond_grid(self):
        with pytest.raises(IndexOutOfRange):
            partition_points(Partition(0, 0, 3), GridSpec(1, 0.5))

    def test_vectorised_matches_scalar(self):
        grid = GridSpec(12.345, 0.001)
        pts = index_points(0, grid.n, grid.step)
        scalar = np.array([grid_point(k, grid) for k in range(grid.n + 1)])
        assert np.array_equal(pts.view(np.uint64), scalar.view(np.uint64))

    @pytest.mark.parametrize("nproc", [1, 2, 3, 4, 7, 8])
    def test_reassembly_bitwise(self, nproc):
        grid = GridSpec(0.1, 0.001)
        full = np.array([k * grid.step for k in range(grid.n + 1)])
        joined = np.concatenate([partition_points(p, grid) for p in plan_partitions(grid, nproc)])
        assert np.array_equal(full.view(np.uint64), joined.view(np.uint64))
