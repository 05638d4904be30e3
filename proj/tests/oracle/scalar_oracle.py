#!/usr/bin/env python3
"""Scalar reference trajectories for the 1-D threshold family.

Writes tests/data/*.csv. Each file is one run: a header line and then x_n
for n = 0, 1, ... (17 significant digits). Regenerate with

    python3 tests/oracle/scalar_oracle.py tests/data
"""

import math
import sys
from pathlib import Path


def family(count):
    t = [i / (count + 1) for i in range(1, count + 1)]
    return t, [1 + ti for ti in t]


def threshold(t, s, x):
    return 0.0 if x <= t else s * (x - t)


def power(t, s, x, p):
    for _ in range(p):
        nxt = threshold(t, s, x)
        if nxt == x:
            break
        x = nxt
    return x


SCHEDULES = {
    "reciprocal": lambda n: 1.0 / n,
    "log-reciprocal": lambda n: 1.0 / (math.log(n) + 2.0),
    "power-of-ten": lambda n: 10.0 ** (-n),
}


def mann_midpoint(count, schedule, steps, iterated=False):
    """x_{n+1} = (x_n + ybar_n) / 2 with ybar the farthest Mann point."""
    ts, ss = family(count)
    alpha = SCHEDULES[schedule]
    x = 1.0
    out = [x]
    for n in range(steps):
        a = alpha(n + 1)
        p = n + 1 if iterated else 1
        ybar = min(a * x + (1 - a) * power(t, s, x, p) for t, s in zip(ts, ss))
        x = min(x, 0.5 * (x + ybar))
        out.append(x)
    return out


def halpern_interval(count, schedule, steps):
    """Projection of x0 onto [0, 1] cut by every Halpern half-line so far."""
    ts, ss = family(count)
    alpha = SCHEDULES[schedule]
    x0 = 1.0
    x = x0
    lo, hi = 0.0, 1.0
    out = [x]
    for n in range(steps):
        a = alpha(n + 1)
        best, ybar = -1.0, x
        for t, s in zip(ts, ss):
            y = a * x0 + (1 - a) * threshold(t, s, x)
            if abs(y - x) > best:
                best, ybar = abs(y - x), y
        coef = 2 * (a * x0 + (1 - a) * x - ybar)
        rhs = a * x0 * x0 + (1 - a) * x * x - ybar * ybar
        if coef > 0:
            hi = min(hi, rhs / coef)
        elif coef < 0:
            lo = max(lo, rhs / coef)
        x = min(max(x0, lo), hi)
        out.append(x)
    return out


def liu(count, schedule, steps):
    """Liu's cyclic closed form, map j = n mod N."""
    ts, ss = family(count)
    alpha = SCHEDULES[schedule]
    x0 = 1.0
    x = x0
    out = [x]
    for n in range(steps):
        a = alpha(n + 1)
        j = n % count
        tx = threshold(ts[j], ss[j], x)
        y = a * x0 + (1 - a) * tx
        den = 2 * (a * x0 + (1 - a) * x - y)
        if abs(den) > 1e-14:
            x = min(x, (a * x0 * x0 + (1 - a) * x * x - y * y) / den)
        out.append(x)
    return out


def write(path, rows):
    with open(path, "w") as f:
        f.write("x\n")
        for v in rows:
            f.write(f"{v:.17g}\n")


def main():
    outdir = Path(sys.argv[1] if len(sys.argv) > 1 else "tests/data")
    outdir.mkdir(parents=True, exist_ok=True)
    for count in (1, 3, 5, 100):
        for name in SCHEDULES:
            write(outdir / f"mann_N{count}_{name}.csv", mann_midpoint(count, name, 200))
    write(outdir / "mann_iterated_N5_reciprocal.csv", mann_midpoint(5, "reciprocal", 200, True))
    write(outdir / "halpern_N3_reciprocal.csv", halpern_interval(3, "reciprocal", 200))
    write(outdir / "liu_N5_reciprocal.csv", liu(5, "reciprocal", 200))


if __name__ == "__main__":
    main()
