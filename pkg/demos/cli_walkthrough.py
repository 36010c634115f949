"""Drive the command-line tool from a JSON config.

Equivalent shell session:

    alphaduplex factors --alpha 0.5
    alphaduplex sweep --config beta.json --out beta.csv
    python3 beta_plot.py        # needs matplotlib
    alphaduplex validate --config check.json
"""

import json
import tempfile
from pathlib import Path

from alphaduplex.cli import main

work = Path(tempfile.mkdtemp(prefix="alphaduplex-"))

main(["factors", "--alpha", "0.5"])

# DL rate against the user's SI attenuation at three overlaps
beta = {
    "network": {"lambda_bs_per_km2": 3, "rho_dbm": -75, "noise_dbm": -90},
    "duplex": {"alpha": [0, 0.28859, 1], "topologies": ["2NT", "3NT"]},
    "sweep": {"axis": "beta_dl", "range": {"start": -110, "stop": -50, "num": 7}},
}
(work / "beta.json").write_text(json.dumps(beta, indent=2))
main(["sweep", "--config", str(work / "beta.json"), "--out", str(work / "beta.csv")])
print(f"wrote {work / 'beta.csv'} and {work / 'beta_plot.py'}")

# A quick cross-check at reduced scale; exit status 3 means some check failed
check = {
    "engines": "both",
    "sweep": {"values": [0.5]},
    "sim": {"region_half_width_m": 5000, "observation_half_width_m": 1000, "realizations": 20},
    "validation": {"lt_alpha": 0.5},
}
(work / "check.json").write_text(json.dumps(check, indent=2))
status = main(["validate", "--config", str(work / "check.json"), "--out", str(work / "report.json")])
print(f"validate exit status {status}")
