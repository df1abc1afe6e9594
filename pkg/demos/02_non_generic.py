"""When the leading moment vanishes the tail decays one power faster.

Pure position data give an odd h, so every even-order moment vanishes and
the t^-2 term is absent. The observed exponent drops to -3 and the first
surviving coefficient is the one multiplying the t^-3 basis function.
"""

from pathlib import Path

from tailwave.analysis import default_window, fit_tail, local_exponent
from tailwave.config import load_config
from tailwave.pipeline import evolve_config, predict

ROOT = Path(__file__).resolve().parents[1]

cfg = load_config(ROOT / "configs" / "nongeneric.json")
pred = predict(cfg)
print("nonGeneric:", pred["nonGeneric"])
print("predicted A:", ["%.4e" % a for a in pred["A"]])

run = evolve_config(cfg, resolution_factor=0.5)
for r in cfg.observers:
    w = default_window(r, cfg.support_radius, cfg.t_final)
    u = run.observer(r)
    sigma = local_exponent(run.times, u, w).plateau
    A = fit_tail(run.times, u, r, 2, w).values["A"]
    print(f"r={r:<4g} exponent {sigma:+.3f}  A0 {A[0]:+.2e}  A1 {A[1]:+.4e}")
