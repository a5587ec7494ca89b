"""Check and repair a profile interval with a parametric bootstrap.

Profile intervals lean on the chi-square approximation to the
likelihood-ratio statistic.  For transmission-strength parameters that
approximation can run narrow.  `calibrate_ci` simulates replicate
diffusions at the fitted value, measures the actual statistic's 95th
percentile, and re-derives the interval from that cutoff: if the model
is well behaved the interval barely moves, otherwise it widens.
"""

from contagionfit import (
    FitConfig,
    GeneratorConfig,
    calibrate_ci,
    fit_oada,
    generate_network,
    simple_rule,
    simulate_diffusion,
)

network = generate_network(GeneratorConfig(n=30, seed=14))
rule = simple_rule()
data, _ = simulate_diffusion(network, rule, [1.0], seed=114)

fit = fit_oada(data, rule, FitConfig(seed=2))
print(f"fitted s = {fit.mle[0]:.3f} (true 1.0), nll = {fit.nll:.3f}")

result = calibrate_ci(fit, 0, reps=200, seed=3, fit_config=FitConfig(restarts=2))

u, a = result.unadjusted, result.adjusted


def fmt(ci):
    upper = "inf" if ci.upper_open else f"{ci.upper:.3f}"
    return f"[{ci.lower:.3f}, {upper}] (cutoff {ci.cutoff:.3f})"


print("unadjusted:", fmt(u))
print("adjusted  :", fmt(a))
print(f"bootstrap reps {result.reps}, failures {result.n_failed}")
if result.cutoff <= 1.93:
    print("cutoff stayed at the asymptotic 1.92: the chi-square approximation")
    print("holds here and calibration changes nothing material.")
else:
    print("the empirical statistic runs hotter than chi-square, so the")
    print("adjusted interval is wider, restoring 95% coverage.")
