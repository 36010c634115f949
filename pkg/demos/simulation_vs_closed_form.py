"""Monte Carlo against the closed form at a few overlaps.

The simulator drops a PPP of BSs on a 20 x 20 km square, schedules users
per Voronoi cell and measures SINR at receivers in the central 2 x 2 km.
Pass the number of realizations as the first argument (default 40; the
acceptance suite uses 200, about 10 s per point on one core).
"""

import sys
from dataclasses import replace

from alphaduplex.analytic import evaluate, make_context
from alphaduplex.geometry import reference_config
from alphaduplex.simulate import SimSpec, collect_samples, metrics_from_samples

n = int(sys.argv[1]) if len(sys.argv) > 1 else 40
cfg = reference_config()
sim = replace(SimSpec(), realizations=n)

print(f"{n} realizations, seed {sim.seed}")
for topology in ("2NT", "3NT"):
    for alpha in (0.0, 0.28859, 1.0):
        ctx = make_context(cfg, topology, alpha)
        a = evaluate(ctx)
        mc = metrics_from_samples(collect_samples(cfg, topology, ctx.factors, sim), ctx.plan, 1e6, 1e6)
        print(f"{topology} alpha={alpha:<7}"
              f" DL {a.rate_dl / 1e6:.4f} vs {mc.rate_dl / 1e6:.4f} +- {mc.rate_dl_se / 1e6:.4f} Mbit/s"
              f"  UL {a.rate_ul / 1e6:.4f} vs {mc.rate_ul / 1e6:.4f} +- {mc.rate_ul_se / 1e6:.4f} Mbit/s")

# The closed form treats each interferer field as independent of the
# receiver's own cell. The simulator does not, so the UL runs a few percent
# high wherever the cross factor is small but nonzero.
