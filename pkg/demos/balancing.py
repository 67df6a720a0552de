"""Balancing principle on the same benchmark.

For every noise level the rule scans a geometric grid of ``alpha`` and keeps
the largest candidate consistent with all smaller ones.  The table shows how
far the selected error is from the best error on the grid; the guaranteed
factor is ``3 r``.
"""

from hscale_tikhonov.harness import ExperimentConfig, RuleSpec, run_lepskij_experiment

r = 2.0
report = run_lepskij_experiment(ExperimentConfig(rule=RuleSpec(name="lepskij", r=r)))
print(report.summary())
print(f"{'delta':>8}  {'selected':>8}  {'best':>4}  ratio (bound {3 * r:g})")
for tr in report.trace:
    print(f"{tr.delta:8.0e}  {tr.selected + 1:8d}  {tr.best + 1:4d}  {tr.ratio:.3f}")
