"""How partial overlap trades bandwidth for cross-mode leakage.

Each link widens by alpha (1 + eps) B as alpha goes from 0 (separate
channels with a guard band) to 1 (both links on the same band). The
printed factors are the fractions of an interferer's energy that pass the
victim's matched filter: i_* for same-direction interferers and c_* for
opposite-direction ones.
"""

import numpy as np

from alphaduplex.spectrum import PulseKind, make_band_plan, spectral_factors

EPS = 0.03134

print(f"{'alpha':>8} {'B_dl MHz':>9} {'df MHz':>8} {'i_dl':>8} {'i_ul':>8} {'c_dl':>10} {'c_ul':>10}")
for alpha in [0.0, 0.1, 0.2, 0.25, 0.28859, 0.3, 0.4, 0.5, 0.75, 1.0]:
    plan = make_band_plan(1e6, 1e6, EPS, alpha)
    f = spectral_factors(plan, PulseKind.RECTANGULAR, PulseKind.TRIANGULAR)
    print(f"{alpha:8.5g} {plan.bw_dl / 1e6:9.4f} {plan.delta_f / 1e6:8.4f} {f.i_dl:8.5f} {f.i_ul:8.5f} {f.c_dl:10.3e} {f.c_ul:10.3e}")

# The UL cross factor is not monotone: the rectangular DL spectrum has nulls,
# and at one overlap the triangular UL filter is orthogonal to it.
alphas = np.linspace(0.0, 1.0, 2001)
c_ul = [spectral_factors(make_band_plan(1e6, 1e6, EPS, a), PulseKind.RECTANGULAR, PulseKind.TRIANGULAR).c_ul for a in alphas]
k = int(np.argmin(c_ul[1:])) + 1
print(f"\nUL cross factor reaches {c_ul[k]:.2e} at alpha = {alphas[k]:.4f}")
