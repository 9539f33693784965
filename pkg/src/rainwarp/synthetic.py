"""Synthetic daily gauge record for demos and end-to-end tests.

Years are drawn from three regimes (dry, normal, stormy) whose mix drifts
over the record, so the trend stage has something to find. Daily occurrence
follows a two-state Markov chain with a seasonal cycle; amounts are gamma
distributed. Values are written in mm/day at 0.1 mm resolution.

Run ``python -m rainwarp.synthetic --out gauge.csv`` to regenerate the
bundled file.
"""
from __future__ import annotations

import argparse
import csv
from datetime import date, timedelta

import numpy as np

DEFAULT_SEED = 20190831
REGIMES = ("dry", "normal", "stormy")

# p(wet | dry yesterday), p(wet | wet yesterday), gamma shape, gamma scale (mm/day)
_PARAMS = {
    "dry": (0.12, 0.45, 0.7, 3.0),
    "normal": (0.25, 0.60, 0.8, 4.5),
    "stormy": (0.25, 0.60, 0.7, 6.0),
}


def regime_probabilities(t):
    """Regime mix at relative position ``t`` in [0, 1] of the record."""
    dry = 0.40 - 0.30 * t
    stormy = 0.10 + 0.30 * t
    return np.array([dry, 1.0 - dry - stormy, stormy])


def _year(rng, regime, n_days, first_day):
    p01, p11, shape, scale = _PARAMS[regime]
    doy = np.array([(first_day + timedelta(days=k)).timetuple().tm_yday for k in range(n_days)])
    # wetter in autumn/winter
    season = 1.0 + 0.3 * np.cos(2 * np.pi * (doy - 330) / 365.25)
    wet = np.zeros(n_days, dtype=bool)
    state = False
    for k in range(n_days):
        p = (p11 if state else p01) * season[k]
        state = rng.random() < min(p, 0.95)
        wet[k] = state
    amount = np.where(wet, rng.gamma(shape, scale, n_days), 0.0)
    if regime == "stormy":
        summer = np.flatnonzero((doy >= 152) & (doy <= 243))
        hits = rng.choice(summer, size=rng.integers(3, 7), replace=False)
        amount[hits] = rng.uniform(25.0, 70.0, len(hits))
    return np.round(amount, 1)


def generate(first_year=1980, n_years=40, seed=DEFAULT_SEED, missing_rate=0.002, gappy_year=12):
    """Return ``(dates, mm_per_day, regimes)``; NaN marks missing days.

    ``gappy_year`` (index into the record, or None) receives a 30-day gap so
    the ingest exclusion path is exercised.
    """
    rng = np.random.default_rng(seed)
    dates, values, regimes = [], [], []
    for y in range(n_years):
        start = date(first_year + y, 9, 1)
        n_days = (date(first_year + y + 1, 9, 1) - start).days
        regime = REGIMES[rng.choice(3, p=regime_probabilities(y / max(n_years - 1, 1)))]
        amount = _year(rng, regime, n_days, start)
        amount[rng.random(n_days) < missing_rate] = np.nan
        if gappy_year is not None and y == gappy_year:
            amount[100:130] = np.nan
        regimes.append(regime)
        dates.extend(start + timedelta(days=k) for k in range(n_days))
        values.extend(amount.tolist())
    return dates, np.array(values), regimes


def write_csv(path, dates, values):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "precip_mm_day"])
        for d, v in zip(dates, values):
            w.writerow([d.isoformat(), "-9999" if np.isnan(v) else f"{v:.1f}"])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True)
    ap.add_argument("--first-year", type=int, default=1980)
    ap.add_argument("--years", type=int, default=40)
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    args = ap.parse_args(argv)
    dates, values, regimes = generate(args.first_year, args.years, args.seed)
    write_csv(args.out, dates, values)
    for y, r in enumerate(regimes):
        print(args.first_year + y, r)


if __name__ == "__main__":
    main()
