#!/usr/bin/env python3
"""Generate the bundled index CSV: a seeded synthetic approximation of the
Dow Jones Industrial Average path from 2005-01-03 to 2022-01-31.

The real daily series is not redistributable, so the repository ships a
stand-in built from public landmark levels (bubble peak 2007, 2009 trough,
2018 and 2020 drawdowns, 2021 highs) joined by log-space Brownian bridges
with volatility scaled up inside crisis windows. Row count and value range
match the real series closely enough for the walk-forward harness.

Usage: python3 scripts/make_index_csv.py [out.csv] [seed]
"""
import sys
import datetime as dt
import numpy as np

ANCHORS = [
    ("2005-01-03", 10783.0),
    ("2006-01-03", 10847.0),
    ("2007-10-09", 14164.0),
    ("2008-09-12", 11422.0),
    ("2009-03-09", 6547.0),
    ("2010-04-23", 11204.0),
    ("2011-04-29", 12810.0),
    ("2011-10-03", 10655.0),
    ("2013-01-02", 13412.0),
    ("2014-12-26", 18053.0),
    ("2015-05-19", 18312.0),
    ("2016-02-11", 15660.0),
    ("2017-01-25", 20068.0),
    ("2018-01-26", 26616.0),
    ("2018-12-24", 21792.0),
    ("2019-07-15", 27359.0),
    ("2020-02-12", 29551.0),
    ("2020-03-23", 18592.0),
    ("2020-11-24", 30046.0),
    ("2021-07-02", 34786.0),
    ("2021-12-31", 36338.0),
    ("2022-01-31", 35131.0),
]

# (start, end, daily log-vol) — elevated inside drawdown/crisis windows
VOL_WINDOWS = [
    ("2008-09-01", "2009-04-30", 0.028),
    ("2011-07-01", "2011-10-31", 0.016),
    ("2015-08-01", "2016-02-29", 0.013),
    ("2018-10-01", "2018-12-31", 0.015),
    ("2020-02-20", "2020-04-30", 0.035),
]
BASE_VOL = 0.0075


def easter(year):
    a = year % 19
    b, c = divmod(year, 100)
    d, e = divmod(b, 4)
    f = (b + 8) // 25
    g = (b - f + 1) // 3
    h = (19 * a + b - d - g + 15) % 30
    i, k = divmod(c, 4)
    l = (32 + 2 * e + 2 * i - h - k) % 7
    m = (a + 11 * h + 22 * l) // 451
    month, day = divmod(h + l - 7 * m + 114, 31)
    return dt.date(year, month, day + 1)


def nth_weekday(year, month, weekday, n):
    d = dt.date(year, month, 1)
    offset = (weekday - d.weekday()) % 7
    return d + dt.timedelta(days=offset + 7 * (n - 1))


def last_weekday(year, month, weekday):
    d = dt.date(year, month + 1, 1) - dt.timedelta(days=1) if month < 12 else dt.date(year, 12, 31)
    return d - dt.timedelta(days=(d.weekday() - weekday) % 7)


def observed(d):
    if d.weekday() == 5:
        return d - dt.timedelta(days=1)
    if d.weekday() == 6:
        return d + dt.timedelta(days=1)
    return d


def market_holidays(year):
    hol = {
        observed(dt.date(year, 1, 1)),
        nth_weekday(year, 1, 0, 3),          # MLK day
        nth_weekday(year, 2, 0, 3),          # Presidents day
        easter(year) - dt.timedelta(days=2), # Good Friday
        last_weekday(year, 5, 0),            # Memorial day
        observed(dt.date(year, 7, 4)),
        nth_weekday(year, 9, 0, 1),          # Labor day
        nth_weekday(year, 11, 3, 4),         # Thanksgiving
        observed(dt.date(year, 12, 25)),
    }
    return hol


def trading_days(first, last):
    days = []
    hol = {}
    d = first
    while d <= last:
        if d.weekday() < 5:
            if d.year not in hol:
                hol[d.year] = market_holidays(d.year)
            if d not in hol[d.year]:
                days.append(d)
        d += dt.timedelta(days=1)
    return days


def daily_vol(d):
    for start, end, vol in VOL_WINDOWS:
        if dt.date.fromisoformat(start) <= d <= dt.date.fromisoformat(end):
            return vol
    return BASE_VOL


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "data/dow_jones_2005_2022.csv"
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 20050103
    rng = np.random.default_rng(seed)

    anchors = [(dt.date.fromisoformat(d), np.log(v)) for d, v in ANCHORS]
    days = trading_days(anchors[0][0], anchors[-1][0])
    idx = {d: i for i, d in enumerate(days)}
    # snap anchors to nearest trading day
    apos = []
    for d, lv in anchors:
        while d not in idx:
            d += dt.timedelta(days=1)
        apos.append((idx[d], lv))

    n = len(days)
    logp = np.empty(n)
    sig = np.array([daily_vol(d) for d in days])
    for (i0, lv0), (i1, lv1) in zip(apos, apos[1:]):
        span = i1 - i0
        t = np.arange(span + 1) / span
        trend = lv0 + (lv1 - lv0) * t
        steps = rng.standard_normal(span) * sig[i0 + 1:i1 + 1]
        walk = np.concatenate([[0.0], np.cumsum(steps)])
        var = np.concatenate([[0.0], np.cumsum(sig[i0 + 1:i1 + 1] ** 2)])
        frac = var / var[-1] if var[-1] > 0 else t
        bridge = walk - frac * walk[-1]
        logp[i0:i1 + 1] = trend + bridge
    logp[apos[0][0]] = apos[0][1]

    values = np.exp(logp)
    with open(out, "w") as f:
        f.write("date,value\n")
        for d, v in zip(days, values):
            f.write(f"{d.isoformat()},{v:.2f}\n")
    print(f"{out}: {n} rows, {n // 120} full sessions, "
          f"min {values.min():.0f}, max {values.max():.0f}")


if __name__ == "__main__":
    main()
