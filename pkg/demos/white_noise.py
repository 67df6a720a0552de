"""Mixed deterministic and white-noise data.

Fixes a tiny deterministic level and sweeps the white-noise amplitude.
Twenty replications per level share their noise streams across levels, so
the medians are directly comparable.  The fitted exponent is compared with
the one predicted for ``theta = 1/2``.
"""

from hscale_tikhonov.harness import ExperimentConfig, NoisePlan, RuleSpec, run_stochastic_experiment

cfg = ExperimentConfig(rule=RuleSpec(name="apriori-stoch", theta=0.5),
                       noise=NoisePlan(deltas=[1e-8], sigmas=[1e-2, 1e-3, 1e-4], replications=20))
report = run_stochastic_experiment(cfg)
print(report.summary())
for sigma, med in zip(*report.level_medians()):
    print(f"sigma {sigma:7.0e}: median error {med:.4f}")
