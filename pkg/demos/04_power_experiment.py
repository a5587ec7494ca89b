"""Desk-scale power study: how often is the right model selected?

Sweeps the transmission strength s at fixed conformity f = 3 and counts
how often each candidate wins on AICc across simulated replicates.
Power to pick the frequency-dependent model should climb with s, while
at s = 0 the asocial model should win most of the time.

Small rep counts keep this demo quick; scale `reps` up for smoother
curves (the experiment CLI runs the same harness from a JSON spec).
"""

import os

from contagionfit import (
    ExperimentConfig,
    FitConfig,
    GeneratorConfig,
    asocial_rule,
    expand_grid,
    frequency_dependent_rule,
    generate_network,  # noqa: F401  (handy when poking at cells interactively)
    proportional_rule,
    run_selection_experiment,
    simple_rule,
    write_selection_csv,
)

rule = frequency_dependent_rule()
config = ExperimentConfig(
    generator=GeneratorConfig(n=100, sparsity_threshold=0.7, multiplier_max=3.0),
    true_rule=rule,
    grid=expand_grid(rule, {"s": [0.0, 5.0, 30.0], "f": [3.0]}),
    candidates=(
        asocial_rule(),
        simple_rule(),
        proportional_rule(),
        frequency_dependent_rule(),
    ),
    reps=40,
    base_seed=7,
    fit=FitConfig(restarts=0),  # one fit per candidate from its default start
)

result = run_selection_experiment(config)

print("cell            winner proportions")
cells = sorted({tuple(r.cell.items()) for r in result.rows})
for cell in cells:
    cell = dict(cell)
    parts = []
    for row in result.rows:
        if row.cell == cell:
            parts.append(f"{row.rule_kind} {row.proportion:.2f}")
    label = ", ".join(f"{k}={v:g}" for k, v in cell.items())
    print(f"  {label:14s} {'  '.join(parts)}")

out = os.path.join(os.path.dirname(__file__), "selection_demo.csv")
write_selection_csv(result, out)
print("\nfull table written to", out)
print(f"runtime {result.runtime_s:.1f}s for {config.reps} reps per cell")
