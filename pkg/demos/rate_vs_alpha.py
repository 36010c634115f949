"""Closed-form ergodic rates across the overlap parameter.

Reference deployment: 3 BS/km^2, 5 W BSs, channel-inversion UL power
control with rho = -75 dBm and a 2 W cap, beta_d = -75 dB, perfect SI
cancellation at the BS. Runs in about a minute.
"""

import numpy as np

from alphaduplex.analytic import evaluate, make_context
from alphaduplex.geometry import db_to_linear, reference_config

cfg = reference_config()
print(f"{'alpha':>6} | {'2NT DL':>9} {'3NT DL':>9} | {'UL':>9} | {'2NT out':>7} {'3NT out':>7} {'UL out':>7}   (Mbit/s, outage at 1 Mbit/s)")
for alpha in np.linspace(0.0, 1.0, 11):
    m2 = evaluate(make_context(cfg, "2NT", alpha))
    m3 = evaluate(make_context(cfg, "3NT", alpha))
    print(f"{alpha:6.2f} | {m2.rate_dl / 1e6:9.4f} {m3.rate_dl / 1e6:9.4f} | {m3.rate_ul / 1e6:9.4f} | "
          f"{m2.outage_dl:7.4f} {m3.outage_dl:7.4f} {m3.outage_ul:7.4f}")

# Full overlap, sweeping the user's SI attenuation: 2NT wins while its users
# cancel SI well, 3NT wins once the residual SI dominates the intra-cell
# co-user interference.
from alphaduplex.analytic import rate_dl

r3 = rate_dl(make_context(cfg, "3NT", 1.0))[0]
print("\nalpha = 1, DL rate ratio 2NT / 3NT")
for beta in (-110, -100, -95, -90, -75, -50):
    r2 = rate_dl(make_context(cfg.replace(beta_dl=db_to_linear(beta)), "2NT", 1.0))[0]
    print(f"  beta_d = {beta:5d} dB: {r2 / r3:.3f}")
