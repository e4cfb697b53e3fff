"""Data layer: parsing, conversion, alignment, and their invariants."""

from __future__ import annotations

import datetime as dt

import numpy as np
import pytest

from termspread.data import (
    AlignedDataset,
    MaturityLabel,
    Month,
    RecessionSeries,
    SplitConfig,
    YieldPanel,
    align_dataset,
    discount_to_bond_equivalent,
    load_recession_series,
    load_yield_panel,
    monthly_average,
    split_views,
    write_yield_panel,
)
from termspread.errors import (
    CoverageError,
    DomainError,
    EmptyInput,
    GapInDates,
    HorizonTooLong,
    MalformedRow,
    MissingSeries,
)


# --- Month / MaturityLabel ---------------------------------------------------

def test_month_arithmetic_and_order():
    m = Month.parse("1994-12")
    assert m + 12 == Month(1995, 12)
    assert Month(1995, 12) - m == 12
    assert Month(1961, 6) < Month(1961, 7) < Month(1962, 1)
    assert str(Month(2020, 7)) == "2020-07"


def test_month_rejects_bad_tokens():
    with pytest.raises(ValueError):
        Month.parse("1994/12")
    with pytest.raises(ValueError):
        Month(2000, 13)


def test_maturity_code_month_bijection():
    codes = ["3m", "6m", "1y", "2y", "3y", "5y", "7y", "10y", "20y", "30y"]
    months = [3, 6, 12, 24, 36, 60, 84, 120, 240, 360]
    seen = set()
    for code, m in zip(codes, months):
        lab = MaturityLabel.from_code(code)
        assert lab.months == m
        assert lab.code == code
        seen.add(lab.months)
    assert len(seen) == len(codes)
    with pytest.raises(ValueError):
        MaturityLabel.from_code("4y")
    with pytest.raises(ValueError):
        MaturityLabel(months=6, code="3m")


# --- loading -----------------------------------------------------------------

def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def test_load_single_maturity_identity(tmp_path):
    path = write(tmp_path, "one.csv", "date,10y\n2001-01,5.25\n2001-02,5.5\n2001-03,5\n")
    panel = load_yield_panel([path], ["10y"])
    assert panel.codes == ("10y",)
    assert panel.values[:, 0].tolist() == [5.25, 5.5, 5.0]
    assert [str(d) for d in panel.dates] == ["2001-01", "2001-02", "2001-03"]


def test_load_full_width(tmp_path, market, data_files):
    panel, _ = market
    loaded = load_yield_panel([data_files["yields"]], panel.codes)
    assert loaded.values.shape == (710, 9)
    assert loaded.dates[0] == Month(1961, 6)
    assert loaded.dates[-1] == Month(2020, 7)
    assert "lead_idx" in loaded.extras


def test_load_missing_month_names_the_gap(tmp_path):
    path = write(
        tmp_path, "gap.csv", "date,10y\n1975-01,5.0\n1975-02,5.1\n1975-04,5.2\n"
    )
    with pytest.raises(GapInDates, match="1975-03"):
        load_yield_panel([path], ["10y"])


def test_load_missing_series(tmp_path):
    path = write(tmp_path, "m.csv", "date,10y\n2001-01,5.0\n")
    with pytest.raises(MissingSeries):
        load_yield_panel([path], ["10y", "3m"])


def test_load_malformed_cell(tmp_path):
    path = write(tmp_path, "bad.csv", "date,10y\n2001-01,5.0\n2001-02,oops\n")
    with pytest.raises(MalformedRow, match="2001-02|bad.csv:3"):
        load_yield_panel([path], ["10y"])


def test_load_merges_files_on_date_intersection(tmp_path):
    a = write(tmp_path, "a.csv", "date,10y\n2001-01,5.0\n2001-02,5.1\n2001-03,5.2\n")
    b = write(tmp_path, "b.csv", "date,3m\n2001-02,3.0\n2001-03,3.1\n2001-04,3.2\n")
    panel = load_yield_panel([a, b], ["10y", "3m"])
    assert [str(d) for d in panel.dates] == ["2001-02", "2001-03"]
    assert panel.values.tolist() == [[5.1, 3.0], [5.2, 3.1]]


def test_panel_round_trip_is_bit_exact(tmp_path, market):
    panel, _ = market
    out = tmp_path / "rt.csv"
    write_yield_panel(panel, str(out))
    reloaded = load_yield_panel([str(out)], panel.codes)
    assert np.array_equal(reloaded.values, panel.values)
    assert np.array_equal(reloaded.extras["lead_idx"], panel.extras["lead_idx"])
    assert reloaded.dates == panel.dates


def test_recession_loader_validates_values(tmp_path):
    ok = write(tmp_path, "r.csv", "date,recession\n2001-01,0\n2001-02,1\n")
    series = load_recession_series(ok)
    assert series.indicator.tolist() == [0.0, 1.0]
    bad = write(tmp_path, "rb.csv", "date,recession\n2001-01,2\n")
    with pytest.raises(MalformedRow):
        load_recession_series(bad)


# --- monthly averaging --------------------------------------------------------

def test_monthly_average_two_point_mean():
    months, vals = monthly_average(
        [dt.date(2001, 1, 2), dt.date(2001, 1, 15)], [4.0, 6.0]
    )
    assert months == (Month(2001, 1),)
    assert vals.tolist() == [5.0]


def test_monthly_average_single_day_identity():
    months, vals = monthly_average([dt.date(2001, 3, 9)], [3.7])
    assert months == (Month(2001, 3),) and vals.tolist() == [3.7]


def test_monthly_average_constant_series():
    days = [dt.date(2001, 7, d) for d in range(2, 23)]
    months, vals = monthly_average(days, [3.25] * 21)
    assert months == (Month(2001, 7),) and vals.tolist() == [3.25]


def test_monthly_average_empty_input():
    with pytest.raises(EmptyInput):
        monthly_average([], [])


def test_monthly_average_permutation_invariant():
    rng = np.random.default_rng(0)
    days = [dt.date(2001, 5, 1 + int(i)) for i in rng.integers(0, 28, 40)]
    values = rng.normal(5.0, 2.0, 40)
    base = monthly_average(days, values)[1]
    for perm_seed in range(5):
        order = np.random.default_rng(perm_seed).permutation(40)
        permuted = monthly_average([days[i] for i in order], values[order])[1]
        assert np.array_equal(base, permuted)


# --- discount -> bond-equivalent ----------------------------------------------

def test_bond_equivalent_known_values():
    assert discount_to_bond_equivalent(0.0, 91) == 0.0
    # direct evaluation of 100 * 365d / (360 - d*t)
    assert discount_to_bond_equivalent(5.0, 91) == pytest.approx(5.1343, abs=5e-5)
    assert discount_to_bond_equivalent(5.0, 182) == pytest.approx(5.2009, abs=5e-5)


def test_bond_equivalent_domain_checks():
    with pytest.raises(DomainError):
        discount_to_bond_equivalent(5.0, 120)
    with pytest.raises(DomainError):
        discount_to_bond_equivalent(-0.1, 91)
    with pytest.raises(DomainError):
        discount_to_bond_equivalent(100.0, 91)


def test_bond_equivalent_monotone_and_dominating():
    for days in (91, 182):
        rates = np.linspace(0.01, 30.0, 200)
        outs = [discount_to_bond_equivalent(r, days) for r in rates]
        assert all(b > a for a, b in zip(outs, outs[1:]))
        assert all(out >= r for out, r in zip(outs, rates))


# --- alignment -----------------------------------------------------------------

def test_align_paper_style_split(market, split95):
    panel, recessions = market
    ds = align_dataset(panel, recessions, 12, split95)
    # train targets end 1995-12, so train predictors end 1994-12
    assert str(ds.predictor_dates[ds.split_index - 1]) == "1994-12"
    assert str(ds.predictor_dates[ds.split_index]) == "1995-01"
    # rows: predictors 1961-06 .. 2019-07 (targets through 2020-07)
    assert ds.n_rows == 698
    assert ds.split_index == 403


def test_align_rows_match_brute_force(market, split95):
    panel, recessions = market
    ds = align_dataset(panel, recessions, 12, split95)
    start = panel.dates[0]
    for i in range(0, ds.n_rows, 37):
        t = ds.predictor_dates[i]
        assert np.array_equal(ds.features[i], panel.values[t - start])
        assert ds.targets[i] == recessions.at(t + 12)
    for t, date in enumerate(ds.predictor_dates):
        assert (date + 12 <= split95.train_end) == (t < ds.split_index)


def test_align_one_month_horizon_minimal():
    dates = (Month(2001, 1), Month(2001, 2), Month(2001, 3))
    panel = YieldPanel(
        dates=dates,
        maturities=(MaturityLabel.from_code("10y"),),
        values=np.array([[5.0], [5.1], [5.2]]),
    )
    recs = RecessionSeries(dates=dates, indicator=np.array([0.0, 1.0, 0.0]))
    split = SplitConfig(
        train_end=Month(2001, 2), sample_start=Month(2001, 1), sample_end=Month(2001, 3)
    )
    ds = align_dataset(panel, recs, 1, split)
    assert ds.n_rows == 2  # Jan->Feb, Feb->Mar
    assert ds.targets.tolist() == [1.0, 0.0]
    assert ds.split_index == 1


def test_align_horizon_too_long(market, split95):
    panel, recessions = market
    with pytest.raises(HorizonTooLong):
        align_dataset(panel, recessions, 2000, split95)


def test_align_coverage_error(market):
    panel, recessions = market
    short = RecessionSeries(
        dates=recessions.dates[:200], indicator=recessions.indicator[:200]
    )
    split = SplitConfig(
        train_end=Month(1995, 12),
        sample_start=Month(1961, 6),
        sample_end=Month(2020, 7),
    )
    with pytest.raises(CoverageError):
        align_dataset(panel, short, 12, split)


def test_split_views_partition(market, split95):
    panel, recessions = market
    ds = align_dataset(panel, recessions, 12, split95)
    train, test = split_views(ds)
    assert len(train.predictor_dates) + len(test.predictor_dates) == ds.n_rows
    assert set(train.predictor_dates).isdisjoint(test.predictor_dates)
    joined = np.vstack([train.features, test.features])
    assert np.array_equal(joined, ds.features)


def test_split_views_arithmetic_matches_stated_counts():
    # 710 rows split at 414 -> 414 train, 296 test
    dates = tuple(Month(1961, 6) + i for i in range(710))
    values = np.linspace(1.0, 2.0, 710)[:, None]
    ds = AlignedDataset(
        horizon_months=1,
        predictor_dates=dates,
        features=values,
        targets=np.array([1.0] + [0.0] * 709),
        split_index=414,
        feature_names=("10y",),
    )
    train, test = split_views(ds)
    assert len(train.predictor_dates) == 414
    assert len(test.predictor_dates) == 296


def test_split_views_single_row_test_boundary():
    dates = tuple(Month(2000, 1) + i for i in range(5))
    ds = AlignedDataset(
        horizon_months=1,
        predictor_dates=dates,
        features=np.arange(5.0)[:, None],
        targets=np.array([0.0, 1.0, 0.0, 0.0, 1.0]),
        split_index=4,
        feature_names=("10y",),
    )
    _, test = split_views(ds)
    assert len(test.predictor_dates) == 1


def test_dataset_rejects_empty_partitions():
    dates = tuple(Month(2000, 1) + i for i in range(3))
    with pytest.raises(ValueError):
        AlignedDataset(
            horizon_months=1,
            predictor_dates=dates,
            features=np.zeros((3, 1)),
            targets=np.array([0.0, 1.0, 0.0]),
            split_index=3,
            feature_names=("10y",),
        )
