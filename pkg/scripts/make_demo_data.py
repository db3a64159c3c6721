"""Regenerate the bundled synthetic demonstration dataset.

The series are simulated from the three-stage model with published Stage-3
parameters; they are not real data.
"""

from pathlib import Path

import numpy as np

from rstar_mue.data_ingest import Quarter, RawMacroSeries, moving_average, write_csv
from rstar_mue.reference import STAGE3_HLW
from rstar_mue.simulation import ArmaModel, SystemInits, simulate_hlw_system

FIRST = Quarter(1958, 1)
DROP = 4
N = 233 + DROP
SEED = 20170331

r_process = ArmaModel(ar=(0.9,), ma=(), intercept=2.0, sigma=0.6)
inits = SystemInits((2.0, 2.1, 1.9, 2.0), tuple(750.0 + 0.8 * k for k in range(4)))
sim = simulate_hlw_system(STAGE3_HLW, N, with_z=True, r_process=r_process, seed=SEED, inits=inits)
ds = sim.dataset
pe = moving_average(ds.pi, [0, 1, 2, 3])
dates = tuple(FIRST.shift(k) for k in range(N))[DROP:]
raw = RawMacroSeries(dates, np.exp(ds.y / 100.0)[DROP:], ds.pi[DROP:], (ds.real_rate + pe)[DROP:])
out = Path(__file__).resolve().parents[1] / "src" / "rstar_mue" / "data" / "synthetic_demo.csv"
write_csv(out, raw)
print(f"wrote {out} ({len(dates)} rows, {dates[0]}..{dates[-1]})")
