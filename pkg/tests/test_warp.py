import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rainwarp.errors import ConfigError, CorridorInfeasibleError, InfeasibleBandError, WarpError
from rainwarp.warp import (
    AlignmentPath,
    WarpConfig,
    band_bounds,
    coarsen,
    dtw_exact,
    expand_corridor,
    ims_dtw,
)

from oracles import enumerate_paths_min_cost, intermittent

UNBOUNDED = WarpConfig(band_days=None)

series = st.lists(st.floats(0, 50, allow_nan=False, width=32), min_size=1, max_size=9)


def check_path(path, n, m):
    steps = path.steps
    assert tuple(steps[0]) == (0, 0)
    assert tuple(steps[-1]) == (n - 1, m - 1)
    moves = {tuple(d) for d in np.diff(steps, axis=0)}
    assert moves <= {(1, 0), (0, 1), (1, 1)}


def in_band(path, n, m, band):
    i, j = path.steps[:, 0], path.steps[:, 1]
    return bool(np.all(np.abs(i * m - j * n) <= band * max(n, m)))


# -- dtw_exact ---------------------------------------------------------------


def test_identity_path_is_diagonal():
    p = dtw_exact([0, 1, 2, 0], [0, 1, 2, 0])
    assert p.total_cost == 0
    assert p.pairs() == [(0, 0), (1, 1), (2, 2), (3, 3)]


def test_exact_warp_found():
    p = dtw_exact([0, 5], [0, 0, 5], UNBOUNDED)
    assert p.total_cost == 0
    assert p.pairs() == [(0, 0), (0, 1), (1, 2)]


def test_small_case_matches_enumeration():
    # enumeration over the 5 monotone paths gives 1.0, reached only via (1,1)
    oracle, n_paths = enumerate_paths_min_cost([1, 3, 2], [1, 2])
    assert (oracle, n_paths) == (1.0, 5)
    p = dtw_exact([1, 3, 2], [1, 2], UNBOUNDED)
    assert p.total_cost == oracle
    assert p.pairs() == [(0, 0), (1, 1), (2, 1)]


def test_normalization_divides_by_path_length():
    p = dtw_exact([1, 3, 2], [1, 2], UNBOUNDED)
    assert p.normalized_cost == p.total_cost / 3
    raw = dtw_exact([1, 3, 2], [1, 2], WarpConfig(band_days=None, normalize=False))
    assert raw.normalized_cost == raw.total_cost


def test_tie_break_prefers_diagonal_then_advance_i():
    # every cell costs 0, so all predecessors tie
    p = dtw_exact([0, 0, 0], [0, 0], UNBOUNDED)
    assert p.pairs() == [(0, 0), (1, 0), (2, 1)]
    p = dtw_exact([0, 0], [0, 0, 0], UNBOUNDED)
    assert p.pairs() == [(0, 0), (0, 1), (1, 2)]


def test_squared_cost():
    p = dtw_exact([0.0, 3.0], [0.0, 1.0], WarpConfig(band_days=None, cost_exponent=2))
    assert p.total_cost == 4.0


@settings(max_examples=150, deadline=None)
@given(series, series, st.sampled_from([1, 2]))
def test_matches_brute_force(a, b, exponent):
    expected, _ = enumerate_paths_min_cost(a, b, exponent)
    p = dtw_exact(a, b, WarpConfig(band_days=None, cost_exponent=exponent))
    assert p.total_cost == expected
    check_path(p, len(a), len(b))


@settings(max_examples=100, deadline=None)
@given(series, series, st.integers(1, 4))
def test_banded_matches_banded_brute_force(a, b, band):
    expected, _ = enumerate_paths_min_cost(a, b, band=band)
    p = dtw_exact(a, b, WarpConfig(band_days=band))
    assert p.total_cost == expected
    assert in_band(p, len(a), len(b), band)


def test_band_zero_requires_equal_lengths():
    assert dtw_exact([1, 2, 3], [3, 2, 1], WarpConfig(band_days=0)).pairs() == [(0, 0), (1, 1), (2, 2)]
    with pytest.raises(InfeasibleBandError):
        dtw_exact([1, 2, 3], [1, 2], WarpConfig(band_days=0))


@pytest.mark.parametrize("bad", [[], [1.0, -1.0], [np.nan], [np.inf]])
def test_rejects_bad_input(bad):
    with pytest.raises(WarpError):
        dtw_exact(bad, [1.0])


def test_band_bounds_equal_lengths():
    lo, hi = band_bounds(5, 5, 1)
    assert lo.tolist() == [0, 0, 1, 2, 3]
    assert hi.tolist() == [1, 2, 3, 4, 4]


def test_band_bounds_symmetric_under_transpose():
    n, m, band = 365, 366, 14
    lo, hi = band_bounds(n, m, band)
    mask = np.zeros((n, m), bool)
    for i in range(n):
        mask[i, lo[i] : hi[i] + 1] = True
    lo2, hi2 = band_bounds(m, n, band)
    mask2 = np.zeros((m, n), bool)
    for j in range(m):
        mask2[j, lo2[j] : hi2[j] + 1] = True
    assert np.array_equal(mask, mask2.T)


# -- coarsen -------------------------------------------------------------------


@pytest.mark.parametrize(
    "a, factor, expected",
    [([1, 3, 2, 4], 2, [2, 3]), ([1, 3, 2], 2, [2, 2]), ([5], 2, [5]), ([1, 2, 3, 4, 5, 6, 7], 3, [2, 5, 7])],
)
def test_coarsen(a, factor, expected):
    assert coarsen(a, factor).tolist() == expected


@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=50), st.integers(2, 6))
def test_coarsen_length_and_mass(a, factor):
    out = coarsen(a, factor)
    assert len(out) == -(-len(a) // factor)
    sizes = [min(factor, len(a) - k * factor) for k in range(len(out))]
    assert np.isclose(np.dot(out, sizes), np.sum(a))


# -- expand_corridor -----------------------------------------------------------


def test_corridor_single_block():
    mask = expand_corridor(np.array([[0, 0]]), 2, 0, 2, 2)
    assert mask.all()


def test_corridor_dilation_clipped():
    mask = expand_corridor(np.array([[0, 0]]), 2, 1, 4, 4)
    expected = np.zeros((4, 4), bool)
    expected[:3, :3] = True
    assert np.array_equal(mask, expected)


def test_corridor_saturates():
    path = AlignmentPath(np.array([[0, 0], [1, 1], [2, 1]]), 0.0, 0.0)
    assert expand_corridor(path, 2, 6, 6, 3).all()


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(2, 3), st.integers(0, 3), st.randoms(use_true_random=False))
def test_corridor_covers_blocks_and_rows_are_intervals(cn, cm, factor, radius, rnd):
    # random monotone coarse path
    steps = [(0, 0)]
    while steps[-1] != (cn - 1, cm - 1):
        i, j = steps[-1]
        moves = [(i + di, j + dj) for di, dj in ((1, 0), (0, 1), (1, 1)) if i + di < cn and j + dj < cm]
        steps.append(rnd.choice(moves))
    n = rnd.randint((cn - 1) * factor + 1, cn * factor)
    m = rnd.randint((cm - 1) * factor + 1, cm * factor)
    mask = expand_corridor(np.array(steps), factor, radius, n, m)
    # brute-force definition
    ref = np.zeros((n, m), bool)
    for ci, cj in steps:
        for x in range(ci * factor - radius, (ci + 1) * factor + radius):
            for y in range(cj * factor - radius, (cj + 1) * factor + radius):
                if 0 <= x < n and 0 <= y < m:
                    ref[x, y] = True
    assert np.array_equal(mask, ref)


# -- ims_dtw -------------------------------------------------------------------


def test_identity_scores_zero(rng):
    a = intermittent(rng, 365)
    score, path = ims_dtw(a, a)
    assert score == 0
    assert path.pairs() == [(k, k) for k in range(365)]


def test_saturated_corridor_equals_exact(rng):
    for _ in range(20):
        a = rng.random(rng.integers(1, 65))
        b = rng.random(rng.integers(1, 65))
        cfg = WarpConfig(band_days=None, radius=64)
        assert ims_dtw(a, b, cfg)[1].total_cost == dtw_exact(a, b, cfg).total_cost


def test_upper_bound_and_band(rng):
    cfg = WarpConfig()
    for n, m in [(365, 365), (365, 366), (366, 365)]:
        a, b = intermittent(rng, n), intermittent(rng, m)
        _, path = ims_dtw(a, b, cfg)
        check_path(path, n, m)
        assert in_band(path, n, m, cfg.band_days)
        assert path.total_cost >= dtw_exact(a, b, cfg).total_cost


def test_symmetric_scores_and_transposed_paths(rng):
    for _ in range(30):
        a, b = intermittent(rng, 365), intermittent(rng, 366)
        s1, p1 = ims_dtw(a, b)
        s2, p2 = ims_dtw(b, a)
        assert s1 == s2
        assert np.array_equal(p1.steps, p2.steps[:, ::-1])


def test_shift_recovery(rng):
    base = intermittent(rng, 365)
    base[:20] = 0
    base[-25:] = 0
    shifted = np.concatenate([np.zeros(7), base[:-7]])
    _, path = ims_dtw(base, shifted, WarpConfig(band_days=14))
    assert path.max_offset() == 7
    assert path.total_cost == 0


def test_deterministic(rng):
    a, b = intermittent(rng, 366), intermittent(rng, 365)
    s1, p1 = ims_dtw(a, b)
    s2, p2 = ims_dtw(a.copy(), b.copy())
    assert s1 == s2 and np.array_equal(p1.steps, p2.steps)


def test_short_series_skip_pyramid():
    a, b = [0.0, 1.0, 0.0], [1.0, 0.0]
    assert ims_dtw(a, b, UNBOUNDED)[1].total_cost == dtw_exact(a, b, UNBOUNDED).total_cost


def test_corridor_infeasible_is_reported(rng):
    a, b = rng.random(193), rng.random(165)
    with pytest.raises(CorridorInfeasibleError, match="radius"):
        ims_dtw(a, b, WarpConfig(band_days=1, radius=0))


def test_infeasible_band_in_ims():
    with pytest.raises(InfeasibleBandError):
        ims_dtw(np.ones(40), np.ones(41), WarpConfig(band_days=0))


# -- config / serialization ----------------------------------------------------


def test_config_json_round_trip(tmp_path):
    cfg = WarpConfig(band_days=10, radius=3, cost_exponent=2)
    path = tmp_path / "warp.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert WarpConfig.load(path) == cfg
    assert set(cfg.to_dict()) == {"band_days", "coarsen_factor", "min_coarse_len", "radius", "cost_exponent", "normalize"}


@pytest.mark.parametrize(
    "bad",
    [{"band_days": -1}, {"coarsen_factor": 1}, {"min_coarse_len": 1}, {"radius": -1}, {"cost_exponent": 3}, {"extra": 1}],
)
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        WarpConfig.from_dict(bad)


def test_alignment_json_round_trip():
    p = dtw_exact([1, 3, 2], [1, 2], UNBOUNDED)
    q = AlignmentPath.from_dict(json.loads(json.dumps(p.to_dict())))
    assert q.pairs() == p.pairs() and q.total_cost == p.total_cost
