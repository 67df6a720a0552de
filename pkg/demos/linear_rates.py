"""Convergence of a priori Tikhonov on the integration benchmark.

Solves ``J f = g`` for seven noise levels with ``alpha`` chosen from the
rate function, then fits the log-log slope of the error against ``delta``.
The Hoelder index ``gamma = 1`` with ``a = 1, s = 0, u = 1`` predicts 1/2.

Run with ``python demos/linear_rates.py [out_dir]``.
"""

import sys
from pathlib import Path

from hscale_tikhonov.harness import ExperimentConfig, run_rate_experiment

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(".")
report = run_rate_experiment(ExperimentConfig())
print(report.summary())
report.to_csv(out / "linear_rates.csv")
report.plot(out / "linear_rates.svg")
print(f"wrote {out / 'linear_rates.csv'} and {out / 'linear_rates.svg'}")
