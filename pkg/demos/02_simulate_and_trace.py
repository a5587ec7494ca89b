"""Simulate a conformity-driven contagion and inspect its event trace.

Generates a 40-individual network, runs one frequency-dependent
diffusion, and prints the per-event acquisition probabilities for the
first few events.  The trace CSV written next to this script is the
same format the command line tool produces.
"""

import os

import numpy as np

from contagionfit import (
    GeneratorConfig,
    frequency_dependent_rule,
    generate_network,
    simulate_diffusion,
    write_trace_csv,
)

network = generate_network(
    GeneratorConfig(n=40, sparsity_threshold=0.7, multiplier_max=3.0, seed=5)
)
rule = frequency_dependent_rule()
params = [10.0, 3.0]  # strong transmission, cubic conformity

data, trace = simulate_diffusion(network, rule, params, seed=5)

order_1based = [i + 1 for i in data.order]
print("acquisition order:", ", ".join(str(i) for i in order_1based[:12]), "...")

# Each trace row holds every naive individual's probability of being the
# next acquirer; informed individuals are NaN.
for event in range(4):
    row = trace.probabilities[event]
    top = int(np.nanargmax(row))
    print(
        f"event {event + 1}: max prob {np.nanmax(row):.3f} at individual {top + 1}, "
        f"{int(np.isnan(row).sum())} already informed"
    )

out = os.path.join(os.path.dirname(__file__), "trace_demo.csv")
write_trace_csv(trace, out)
print("full trace written to", out)
print("early events are near-uniform; once a visible majority forms the")
print("conformist rule concentrates probability on well-connected naives.")
