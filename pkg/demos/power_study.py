"""A small power study: AR against the EDF baselines under a scale change.

The null is t(3) with scale 2.5 and the data come from t(3) at other scales.
Replications are kept low so the script finishes in about a minute; the
builtin grids use 1000.
"""

from artest import power_lab as pl

base = {s.name: s for s in pl.builtin_scenarios(replications=200, M=499)}
cache = {}
for sigma in ("1.5", "2.5", "4"):
    res = pl.run_scenario(base[f"fig5-n50-sigma{sigma}"], cache, workers=2)
    row = "  ".join(f"{t} {res.power[t]:.3f}" for t in res.power)
    print(f"sigma = {sigma:<4} {row}")
