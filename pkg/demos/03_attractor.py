"""Approach to the two-parameter attractor for the cubic equation.

For p = 3 the late-time solution is closer to an exact self-similar family
than to any finite power series. Fitting (a, b) and subtracting the
attractor leaves a residual that decays like t^-4, two powers faster than
the tail itself.
"""

from pathlib import Path

import numpy as np

from tailwave.analysis import approach_rate, attractor_from_report, default_window, fit_attractor
from tailwave.asymptotics import attractor_eval, match_attractor
from tailwave.config import load_config
from tailwave.pipeline import evolve_config, predict

ROOT = Path(__file__).resolve().parents[1]

cfg = load_config(ROOT / "configs" / "reference.json")
pred = predict(cfg)
guess = match_attractor(pred["A"][0], pred["A"][1])
print(f"attractor matched to the predicted tail: a={guess.a:.4e} b={guess.b:.4e}")

run = evolve_config(cfg, resolution_factor=0.5)
r = 1.0
u = run.observer(r)
w = default_window(r, cfg.support_radius, cfg.t_final)
rep = fit_attractor(run.times, u, r, w)
params = attractor_from_report(rep)
print(f"attractor fitted to the run:            a={params.a:.4e} b={params.b:.4e}")

late = run.times > w.t_lo
resid = u[late] - attractor_eval(params, run.times[late], r)
for t_probe in (30.0, 60.0, 100.0):
    i = np.argmin(np.abs(run.times[late] - t_probe))
    print(f"t={t_probe:5.0f}  u={u[late][i]:.4e}  u - attractor={resid[i]:+.3e}")

rate = approach_rate(run.times, u, r, params, w.last_decade())
print(f"local exponent of the residual: {rate.plateau:.3f} (expected -4)")
