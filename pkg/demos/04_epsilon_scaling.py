"""Cubic scaling of the remainder with the amplitude of the data.

The remainder w = u - eps u0 starts at order eps^3, so doubling eps should
multiply the late tail by 8. The sweep also reports how close each run is
to the scaled-limit profile. A small grid keeps the demo quick; use the
``sweep`` subcommand on configs/sweep.json for the full study.
"""

import numpy as np

from tailwave.config import parse_config
from tailwave.pipeline import evolve_config

cfg = parse_config({
    "epsilon": [0.05, 0.1, 0.2],
    "profiles": {"g": {"family": "poly_bump", "m": 3}},
    "grid": {"N": 1500},
    "t_final": 40.0,
    "observers": [1.0],
})

tails = {}
for eps in cfg.epsilon:
    run = evolve_config(cfg, epsilon=eps)
    w = run.remainder(1.0)
    tails[eps] = np.abs(w[run.times > 20.0]).max()
    print(f"eps={eps:<5} max |w| for t>20: {tails[eps]:.4e}  divided by eps^3: {tails[eps] / eps**3:.5e}")

eps = list(tails)
for e1, e2 in zip(eps, eps[1:]):
    power = np.log(tails[e2] / tails[e1]) / np.log(e2 / e1)
    print(f"observed power between {e1} and {e2}: {power:.4f}")
