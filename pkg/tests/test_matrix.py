import numpy as np
import pytest

from rainwarp.errors import InputError, MatrixFormatError, WarpError
from rainwarp.ingest import HydroYear, hydro_year_length
from rainwarp.matrix import DissimMatrix, build_matrix, load_matrix, rank_outliers, read_provenance, save_matrix
from rainwarp.warp import WarpConfig, ims_dtw

from oracles import intermittent


def make_years(rng, first, n):
    return [HydroYear(y, intermittent(rng, hydro_year_length(y))) for y in range(first, first + n)]


def test_single_year():
    m = build_matrix([HydroYear(1900, np.ones(365))])
    assert m.labels == (1900,) and m.values.tolist() == [[0.0]]


def test_identical_years_score_zero(rng):
    v = intermittent(rng, 365)
    m = build_matrix([HydroYear(1900, v), HydroYear(1901, v.copy())])
    assert m.values.tolist() == [[0.0, 0.0], [0.0, 0.0]]


def test_pair_count_and_progress(rng):
    years = make_years(rng, 1900, 7)
    calls = []
    build_matrix(years, progress=lambda done, total: calls.append((done, total)))
    assert calls[-1] == (21, 21)
    assert [c[0] for c in calls] == sorted(c[0] for c in calls)


def test_entries_match_independent_pair_evaluation(rng):
    years = make_years(rng, 1900, 6)
    m = build_matrix(years)
    pairs = [(i, j) for i in range(6) for j in range(6) if i != j]
    rng.shuffle(pairs)
    for i, j in pairs:
        # either orientation gives the same score
        assert m.values[i, j] == ims_dtw(years[i].values, years[j].values)[0]


def test_workers_bitwise_equal(rng):
    years = make_years(rng, 1900, 9)
    serial = build_matrix(years, workers=1)
    assert build_matrix(years, workers=4) == serial
    assert np.array_equal(serial.values, serial.values.T)


def test_warp_error_names_pair():
    years = [HydroYear(1899, np.zeros(365)), HydroYear(1903, np.zeros(366))]
    with pytest.raises(WarpError, match="1899 and 1903"):
        build_matrix(years, WarpConfig(band_days=0))


def test_empty_input():
    with pytest.raises(InputError):
        build_matrix([])


# -- outliers ------------------------------------------------------------------


@pytest.mark.parametrize(
    "values, top, expected",
    [
        ([[0, 1], [1, 0]], 1, [(1900, 1.0)]),
        ([[0, 1, 1], [1, 0, 4], [1, 4, 0]], 1, [(1901, 2.5)]),
        ([[0, 1, 1], [1, 0, 4], [1, 4, 0]], 3, [(1901, 2.5), (1902, 2.5), (1900, 1.0)]),
        ([[0, 0, 0], [0, 0, 0], [0, 0, 0]], 2, [(1900, 0.0), (1901, 0.0)]),
    ],
)
def test_rank_outliers(values, top, expected):
    m = DissimMatrix(tuple(range(1900, 1900 + len(values))), np.array(values, float))
    assert rank_outliers(m, top) == expected


def test_rank_outliers_top_too_large():
    with pytest.raises(InputError):
        rank_outliers(DissimMatrix((1,), np.zeros((1, 1))), 2)


# -- validation and persistence -----------------------------------------------


@pytest.mark.parametrize(
    "labels, values, message",
    [
        ((1, 2), [[0, 1], [1.1, 0]], "not symmetric"),
        ((1, 2), [[1, 1], [1, 0]], "diagonal"),
        ((2, 1), [[0, 1], [1, 0]], "increasing"),
        ((1, 2), [[0, -1], [-1, 0]], "non-negative"),
        ((1, 2, 3), [[0, 1], [1, 0]], "shape"),
    ],
)
def test_matrix_validation(labels, values, message):
    with pytest.raises(MatrixFormatError, match=message):
        DissimMatrix(labels, np.array(values, float))


def test_tiny_asymmetry_tolerated():
    DissimMatrix((1, 2), np.array([[0, 1.0], [1.0 + 1e-12, 0]]))


@pytest.mark.parametrize("suffix", [".csv", ".json"])
def test_round_trip_lossless(tmp_path, rng, suffix):
    a = rng.random((5, 5)) * 1e-3
    a = a + a.T
    np.fill_diagonal(a, 0)
    m = DissimMatrix((1873, 1874, 1900, 1950, 2018), a)
    path = tmp_path / f"m{suffix}"
    save_matrix(m, path, {"stage": "dissim"})
    assert load_matrix(path) == m
    assert read_provenance(path) == {"stage": "dissim"}


def test_load_asymmetric_file(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("year,1,2\n1,0,1\n2,1.5,0\n")
    with pytest.raises(MatrixFormatError, match="not symmetric"):
        load_matrix(path)


def test_load_shape_mismatch(tmp_path):
    labels = list(range(1873, 1873 + 145))
    rows = [",".join(["0"] * 146) for _ in range(146)]
    path = tmp_path / "m.csv"
    path.write_text("year," + ",".join(map(str, labels)) + "\n" + "\n".join(f"{1873 + k},{r}" for k, r in enumerate(rows)))
    with pytest.raises(MatrixFormatError, match="shape mismatch"):
        load_matrix(path)


@pytest.mark.parametrize("text", ["", "year,1\n1,abc\n", "nonsense\n"])
def test_load_corrupt(tmp_path, text):
    path = tmp_path / "m.csv"
    path.write_text(text)
    with pytest.raises(MatrixFormatError, match=str(path)):
        load_matrix(path)
