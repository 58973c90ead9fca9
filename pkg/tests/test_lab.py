import csv
import io
import math

import pytest

from approxcount import lab
from approxcount.approxcounter import CounterParams, schedule_for
from approxcount.lab import (
    FIGURE1_HEADER,
    TRIAL_HEADER,
    InfeasibleBudget,
    figure1,
    fit_budget,
    percentile_curve,
    run_trial,
    run_trials,
    trials_csv,
)
from approxcount.morris import MorrisParams, bits

HALF_10_4 = CounterParams(1, 1, 10, 4)


def test_trials_are_reproducible():
    a = trials_csv(run_trials("nycount", HALF_10_4, (1000, 50_000), 40, seed=3))
    b = trials_csv(run_trials("nycount", HALF_10_4, (1000, 50_000), 40, seed=3))
    assert a == b


def test_workers_do_not_change_output():
    one = trials_csv(run_trials("morris", MorrisParams(0.01), (1000, 9000), 30, seed=4))
    two = trials_csv(run_trials("morris", MorrisParams(0.01), (1000, 9000), 30, seed=4, workers=2))
    assert one == two


def test_trial_rows_stand_alone():
    rows = run_trials("nycount", HALF_10_4, (100, 5000), 10, seed=5)
    assert run_trial("nycount", HALF_10_4, (100, 5000), 5, 7) == rows[7]


def test_paired_trials_share_n():
    m = run_trials("morris", MorrisParams(0.01), (100, 10**6), 20, seed=6)
    y = run_trials("nycount", HALF_10_4, (100, 10**6), 20, seed=6)
    assert [r.n for r in m] == [r.n for r in y]
    assert len({r.n for r in m}) > 1


def test_csv_layout():
    text = trials_csv(run_trials("morrisplus", MorrisParams(0.01), 500, 3, seed=1))
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == TRIAL_HEADER
    assert len(rows) == 4
    assert rows[1][0] == "0" and rows[1][1] == "morrisplus" and rows[1][2] == "a=0.01"
    # morris+ is exact up to its switch point
    assert rows[1][4] == "500" and rows[1][5] == "0"
    assert rows[1][7] == "0/1"  # trial 0, counter slot 1


def test_first_epoch_trial_has_no_error():
    r = run_trial("nycount", HALF_10_4, 200, 0, 0)
    assert (r.estimate, r.rel_err, r.bits) == (200, 0.0, bits(14) + bits(200) + bits(0))


def test_zero_count_trial():
    assert run_trial("morris", MorrisParams(0.5), 0, 0, 0).rel_err == 0.0


@pytest.mark.parametrize("kwargs", [dict(trials=0), dict(n_spec=(10, 5)), dict(n_spec=-1),
                                    dict(algo="hll")])
def test_run_trials_rejects_bad_input(kwargs):
    args = dict(algo="morris", params=MorrisParams(0.5), n_spec=10, trials=2, seed=0)
    args.update(kwargs)
    with pytest.raises(ValueError):
        run_trials(**args)


def test_percentile_curve_nearest_rank():
    errs = list(range(1, 11))
    curve = percentile_curve(errs)
    assert len(curve) == 100
    assert curve[0] == 1 and curve[9] == 1 and curve[10] == 2 and curve[99] == 10


def test_fit_budget_morris_17_bits():
    b = fit_budget("morris", 17, 999_999)
    assert b.params.a == 2.0**-15
    assert b.bound <= 17
    finer = MorrisParams(2.0**-16)
    assert bits(lab.morris_level_bound(finer.a, 999_999)) > 17


def test_fit_budget_morris_plus_pays_for_exact_counter():
    b = fit_budget("morrisplus", 24, 999_999)
    assert b.bound == bits(lab.morris_level_bound(b.params.a, 999_999)) + bits(b.params.n_a + 1)
    assert b.bound <= 24


def test_fit_budget_nycount_large_budget_picks_finest():
    b = fit_budget("nycount", 64, 999_999)
    assert b.params.eps == lab.EPS_GRID[-1]
    assert b.bound == schedule_for(b.params).bound_bits(999_999)


def test_fit_budget_nycount_picks_smallest_fitting_eps():
    b = fit_budget("nycount", 24, 999_999)
    assert b.bound <= 24
    finer = [e for e in lab.EPS_GRID if e < b.params.eps]
    for e in finer:
        p = CounterParams.from_fraction(e, 10)
        assert schedule_for(p).bound_bits(999_999) > 24


def test_fit_budget_nycount_17_bits_is_infeasible():
    with pytest.raises(InfeasibleBudget):
        fit_budget("nycount", 17, 999_999)


def test_fit_budget_domain():
    with pytest.raises(ValueError):
        fit_budget("morris", 4, 1000)
    with pytest.raises(ValueError):
        fit_budget("hll", 20, 1000)


def test_bound_bits_covers_simulated_states():
    p = CounterParams.from_fraction(lab.EPS_GRID[4], 10)
    bound = schedule_for(p).bound_bits(200_000)
    for r in run_trials("nycount", p, (100_000, 200_000), 200, seed=8):
        assert r.bits <= bound


def test_figure1_small():
    res = figure1(trials=60, nmin=20_000, nmax=40_000, budget=17, seed=2, nycount_budget=26)
    rows = list(csv.reader(io.StringIO(res.csv())))
    assert tuple(rows[0]) == FIGURE1_HEADER
    assert len(rows) == 101 and all(len(r) == 3 for r in rows)
    assert [int(r[0]) for r in rows[1:]] == list(range(1, 101))
    m = [float(r[1]) for r in rows[1:]]
    assert m == sorted(m)
    assert res.header().startswith("# morris: a=")
    assert len(res.decile_gaps()) == 10
    again = figure1(trials=60, nmin=20_000, nmax=40_000, budget=17, seed=2, nycount_budget=26)
    assert again.csv() == res.csv()


def test_figure1_default_budget_is_infeasible_for_nycount():
    with pytest.raises(InfeasibleBudget):
        figure1(trials=10)


def test_fmt_is_positional():
    assert lab.fmt(1e-7) == "0.0000001"
    assert lab.fmt(3) == "3"
    assert not math.isnan(float(lab.fmt(2.5)))
