import csv
import io
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from rainwarp.clustering import Clustering
from rainwarp.errors import InputError, TrendError
from rainwarp.trend import WindowSpec, frequency_table, gradient, make_windows, uncovered_years

from oracles import ls_slope


def clustering(labels, assignments, k):
    assignments = np.asarray(assignments)
    medoids = np.array([int(np.flatnonzero(assignments == c)[0]) if np.any(assignments == c) else 0 for c in range(k)])
    return Clustering(k, tuple(labels), assignments, medoids, 0, 1, 0.0)


# -- windows -------------------------------------------------------------------


def test_default_windows_1873_to_2018():
    w = make_windows(WindowSpec(1873, 26, 19, True), 2018)
    assert [s for s, _ in w] == [1873, 1892, 1911, 1930, 1949, 1968, 1987]
    assert w[0] == (1873, 1898) and w[-1] == (1987, 2018)
    assert uncovered_years(w, 1873, 2018) == []


def test_without_extension_tail_is_uncovered():
    w = make_windows(WindowSpec(1873, 26, 19, False), 2018)
    assert w[-1] == (1987, 2012)
    assert uncovered_years(w, 1873, 2018) == list(range(2013, 2019))


def test_unit_windows():
    assert make_windows(WindowSpec(0, 1, 1), 2) == [(0, 0), (1, 1), (2, 2)]


def test_gaps_reported():
    w = make_windows(WindowSpec(0, 2, 3, False), 10)
    assert w == [(0, 1), (3, 4), (6, 7), (9, 10)]
    assert uncovered_years(w, 0, 10) == [2, 5, 8]


def test_too_short_domain():
    with pytest.raises(TrendError):
        make_windows(WindowSpec(1873, 26, 19), 1897)


def test_bad_spec():
    with pytest.raises(InputError):
        WindowSpec(0, 0, 1)


# -- frequency table -----------------------------------------------------------


def test_half_half_construction():
    years = list(range(2000, 2020))
    c = clustering(years, [0] * 10 + [1] * 10, 2)
    t = frequency_table(c, [(2000, 2009), (2010, 2019)])
    assert t.exact == [[100, 0], [0, 100]]
    t = frequency_table(c, [(2000, 2009), (2005, 2014), (2010, 2019)])
    assert t.exact == [[100, 0], [50, 50], [0, 100]]
    col = frequency_table(c, [(2000, 2009), (2005, 2014), (2010, 2019)], normalization="column")
    assert col.exact == [[Fraction(200, 3), 0], [Fraction(100, 3), Fraction(100, 3)], [0, Fraction(200, 3)]]


def test_single_window_is_cluster_share():
    c = clustering(range(7), [0, 0, 1, 2, 2, 2, 0], 3)
    t = frequency_table(c, [(0, 6)])
    assert t.exact == [[Fraction(300, 7), Fraction(100, 7), Fraction(300, 7)]]
    assert t.rounded().tolist() == [[42.9, 14.3, 42.9]]


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(5, 60), st.integers(1, 10), st.integers(1, 10), st.data())
def test_row_sums_and_relabeling(k, n, length, step, data):
    assignments = data.draw(st.lists(st.integers(0, k - 1), min_size=n, max_size=n))
    labels = list(range(1900, 1900 + n))
    windows = make_windows(WindowSpec(1900, min(length, n), step), 1900 + n - 1)
    t = frequency_table(clustering(labels, assignments, k), windows)
    assert all(sum(row) == 100 for row in t.exact)
    assert np.all(np.abs(t.rounded().sum(axis=1) - 100) <= 0.5)
    assert np.all(t.rows >= 0)
    perm = data.draw(st.permutations(range(k)))
    relabeled = frequency_table(clustering(labels, [perm[a] for a in assignments], k), windows)
    for c in range(k):
        assert relabeled.column(perm[c]).tolist() == t.column(c).tolist()


def test_duplicate_window_rows_identical(rng):
    c = clustering(range(30), rng.integers(0, 3, 30), 3)
    t = frequency_table(c, [(0, 9), (5, 14), (0, 9)])
    assert t.exact[0] == t.exact[2]


def test_missing_assignment():
    c = clustering([1, 2, 4], [0, 1, 0], 2)
    with pytest.raises(TrendError, match="year 3"):
        frequency_table(c, [(1, 4)])
    t = frequency_table(c, [(1, 4)], strict=False)
    assert t.skipped == [3]
    assert t.counts.tolist() == [[2, 1]]


def test_bad_normalization():
    with pytest.raises(InputError):
        frequency_table(clustering([1], [0], 1), [(1, 1)], normalization="total")


def test_csv_export():
    years = list(range(2000, 2020))
    t = frequency_table(clustering(years, [0] * 10 + [1] * 10, 2), [(2000, 2009), (2005, 2014), (2010, 2019)])
    rows = list(csv.reader(io.StringIO(t.to_csv({"stage": "trend"}))))
    rows = [r for r in rows if not r[0].startswith("#")]
    assert rows[0] == ["window_start", "window_end", "cluster_0", "cluster_1"]
    assert rows[2] == ["2005", "2014", "50.0", "50.0"]
    assert rows[-1] == ["gradient", "", "down", "up"]


# -- gradient ------------------------------------------------------------------


@pytest.mark.parametrize(
    "column, expected",
    [
        ([30, 25, 20, 15], "down"),
        ([10, 10, 10], "flat"),
        ([1, 2, 3, 4, 5], "up"),
        ([0, 10, 20, 10, 0], "up-down"),
        ([20, 10, 0, 10, 20], "down-up"),
        ([5, 7], "up"),
        ([10, 10.4], "flat"),
    ],
)
def test_gradient_examples(column, expected):
    assert gradient(column) == expected


def test_decreasing_column_with_bump():
    column = [29, 21, 18, 18, 21, 18, 9]
    # the two halves share the middle window
    assert ls_slope(column[:4]) == pytest.approx(-3.6)
    assert ls_slope(column[3:]) == pytest.approx(-3.0)
    assert gradient(column) == "down"


def test_one_flat_half_takes_the_other_sign():
    assert gradient([10, 10, 10, 5, 0]) == "down"
    assert gradient([0, 5, 10, 10, 10]) == "up"


def test_too_short():
    with pytest.raises(TrendError):
        gradient([5])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 100), min_size=2, max_size=12), st.integers(-50, 50))
def test_gradient_shift_invariant(column, shift):
    assert gradient(column) == gradient([x + shift for x in column])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 20), min_size=2, max_size=12))
def test_strictly_increasing_is_up(steps):
    assert gradient(np.cumsum(steps)) == "up"


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-30, 30), min_size=2, max_size=12))
def test_gradient_matches_reference_slopes(column):
    h = max(2, -(-len(column) // 2))
    s1, s2 = ls_slope(column[:h]), ls_slope(column[-h:])
    # the two slope formulas may round differently right at the dead-band edge
    assume(all(abs(abs(s) - 0.5) > 1e-9 for s in (s1, s2)))
    sign = [0 if abs(s) <= 0.5 else (1 if s > 0 else -1) for s in (s1, s2)]
    got = gradient(column)
    if sign == [0, 0]:
        assert got == "flat"
    elif 0 in sign:
        nz = sign[0] or sign[1]
        assert got == ("up" if nz > 0 else "down")
    else:
        assert got == {(-1, -1): "down", (-1, 1): "down-up", (1, -1): "up-down", (1, 1): "up"}[tuple(sign)]
