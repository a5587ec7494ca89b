"""Profile-likelihood confidence intervals.

The interval for one parameter is the set of pinned values whose profile
NLL (NLL minimized over all other parameters) stays within ``cutoff`` of the
fit NLL.  The default cutoff 1.92 is half the 0.95 quantile of a chi-square
with one degree of freedom, giving asymptotic 95% intervals; `experiments`
can replace it with a bootstrap-calibrated value.

Endpoint search: geometric bracket expansion away from the MLE (factor 2,
initial offset 10% of |MLE| with a 1e-3 floor) followed by bisection to a
1e-4 relative tolerance.  A side that reaches the parameter's box bound
while still inside the region is truncated there and flagged
``at_*_bound``; a side that reaches the search ceiling (1e6 x max(1, |MLE|))
without crossing is reported as *open*.  If the scan sees several sign
changes (a non-monotone profile), the outermost crossing wins and a
diagnostic records it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fit import FitResult, minimize_multistart, nll_objective
from .oada import DiffusionData, EventTable, build_event_table
from .rules import TransmissionRule

__all__ = [
    "ProfileCI",
    "ProfileConfig",
    "profile_nll",
    "profile_ci",
    "profile_interval",
    "DEFAULT_CUTOFF",
]

DEFAULT_CUTOFF = 1.92


@dataclass(frozen=True)
class ProfileConfig:
    cutoff: float = DEFAULT_CUTOFF
    bracket_factor: float = 2.0
    first_offset_frac: float = 0.1
    first_offset_floor: float = 1e-3
    ceiling_scale: float = 1e6
    rel_tol: float = 1e-4
    inner_restarts: int = 2
    inner_max_evals: int = 4000
    tolerance: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.cutoff <= 0:
            raise ValueError("cutoff must be > 0")
        if self.bracket_factor <= 1:
            raise ValueError("bracket_factor must be > 1")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be > 0")
        if self.first_offset_floor <= 0 or self.first_offset_frac <= 0:
            raise ValueError("first offset settings must be > 0")


@dataclass(frozen=True, eq=False)
class ProfileCI:
    """One parameter's profile-likelihood interval.

    ``lower_open``/``upper_open`` mean the search hit its ceiling without
    leaving the confidence region, so that side is effectively unbounded.
    ``at_lower_bound``/``at_upper_bound`` mean the region is truncated at
    the parameter's box bound (the bound itself is included).
    ``profile_points`` records every (value, profile NLL) the search
    evaluated, for plotting and debugging.
    """

    param_index: int
    param_name: str
    mle_value: float
    lower: float
    upper: float
    lower_open: bool
    upper_open: bool
    at_lower_bound: bool
    at_upper_bound: bool
    cutoff: float
    profile_points: tuple[tuple[float, float], ...]
    diagnostics: tuple[str, ...] = ()

    def contains(self, value: float) -> bool:
        """Open sides count as unbounded; bound-truncated sides include the bound."""
        lo_ok = True if self.lower_open else value >= self.lower
        hi_ok = True if self.upper_open else value <= self.upper
        return bool(lo_ok and hi_ok)

    @property
    def width(self) -> float:
        if self.lower_open or self.upper_open:
            return math.inf
        return self.upper - self.lower

    def report_dict(self) -> dict:
        return {
            "param": self.param_name,
            "mle": float(self.mle_value),
            "lower": float(self.lower),
            "upper": float(self.upper),
            "lower_open": self.lower_open,
            "upper_open": self.upper_open,
            "at_lower_bound": self.at_lower_bound,
            "at_upper_bound": self.at_upper_bound,
            "cutoff": float(self.cutoff),
            "diagnostics": list(self.diagnostics),
        }


def _pin(full_k: int, index: int, value: float, free: np.ndarray) -> np.ndarray:
    params = np.empty(full_k)
    params[index] = value
    params[np.arange(full_k) != index] = free
    return params


def profile_nll(
    data: DiffusionData | EventTable,
    rule: TransmissionRule,
    param_index: int,
    value: float,
    fit: FitResult | None = None,
    config: ProfileConfig | None = None,
    start_free=None,
) -> float:
    """NLL minimized over all parameters except the pinned one.

    For single-parameter rules this is just the NLL at the pinned value.
    The inner optimizer starts from ``start_free`` (default: the fit MLE's
    free components) and is itself multi-started; +inf with a raised
    ValueError is reserved for pins outside the parameter box.
    """
    table = data if isinstance(data, EventTable) else build_event_table(data)
    cfg = config or ProfileConfig()
    k = rule.n_params
    if not 0 <= param_index < k:
        raise ValueError(f"param_index {param_index} out of range for k={k}")
    lo, hi = rule.lower[param_index], rule.upper[param_index]
    if not (lo <= value <= hi):
        raise ValueError(
            f"pinned value {value} outside bounds [{lo}, {hi}] "
            f"for {rule.param_names[param_index]}"
        )
    objective = nll_objective(rule, table)
    if k == 1:
        v = objective(np.array([value]))
        return v if math.isfinite(v) else math.inf

    free_idx = [i for i in range(k) if i != param_index]
    if start_free is not None:
        start = np.asarray(start_free, dtype=float)
    elif fit is not None:
        start = fit.mle[free_idx]
    else:
        start = np.asarray(rule.default_start, dtype=float)[free_idx]
    lower = [rule.lower[i] for i in free_idx]
    upper = [rule.upper[i] for i in free_idx]
    ms = minimize_multistart(
        lambda free: objective(_pin(k, param_index, value, free)),
        start,
        lower,
        upper,
        restarts=cfg.inner_restarts,
        tolerance=cfg.tolerance,
        max_evals=cfg.inner_max_evals,
        seed=np.random.SeedSequence([cfg.seed, param_index]),
    )
    return ms.fun


class _ProfileSide:
    """Stateful profile evaluator with warm starts along one search path."""

    def __init__(self, table, rule, param_index, fit, cfg):
        self.rule = rule
        self.param_index = param_index
        self.cfg = cfg
        self.k = rule.n_params
        self.objective = nll_objective(rule, table)
        if self.k > 1:
            free_idx = [i for i in range(self.k) if i != param_index]
            self.start_free = fit.mle[free_idx].copy()
            self.lower = [rule.lower[i] for i in free_idx]
            self.upper = [rule.upper[i] for i in free_idx]

    def __call__(self, value: float) -> float:
        if self.k == 1:
            v = self.objective(np.array([value]))
            return v if math.isfinite(v) else math.inf
        ms = minimize_multistart(
            lambda free: self.objective(_pin(self.k, self.param_index, value, free)),
            self.start_free,
            self.lower,
            self.upper,
            restarts=self.cfg.inner_restarts,
            tolerance=self.cfg.tolerance,
            max_evals=self.cfg.inner_max_evals,
            seed=np.random.SeedSequence([self.cfg.seed, self.param_index]),
        )
        if math.isfinite(ms.fun):
            self.start_free = ms.x  # warm start for the next pin
        return ms.fun


def _search_side(
    pnll: Callable[[float], float],
    direction: int,
    mle: float,
    nll_min: float,
    bound: float,
    cfg: ProfileConfig,
    diagnostics: list[str],
):
    """Find one interval endpoint.  Returns (endpoint, open_flag, at_bound)."""
    target = nll_min + cfg.cutoff
    ceiling_span = cfg.ceiling_scale * max(1.0, abs(mle))
    limit = mle + direction * ceiling_span
    limited_by_bound = False
    if direction > 0 and bound < limit:
        limit, limited_by_bound = bound, True
    if direction < 0 and bound > limit:
        limit, limited_by_bound = bound, True

    if direction * (limit - mle) <= 0:  # MLE already sits on the bound
        return limit, False, True

    step = max(cfg.first_offset_frac * abs(mle), cfg.first_offset_floor)
    xs = [mle]
    fs = [nll_min]
    exits = 0
    x = mle + direction * step
    while True:
        if direction * (x - limit) >= 0:
            x = limit
        fs.append(pnll(x))
        xs.append(x)
        if x == limit:
            break
        if fs[-1] > target:
            exits += 1
            if exits >= 2:  # one lookahead point past the first exit
                break
        step *= cfg.bracket_factor
        x = mle + direction * step

    inside = [f <= target for f in fs]
    crossings = sum(1 for a, b in zip(inside, inside[1:]) if a != b)
    if crossings > 1:
        diagnostics.append(
            f"non-monotone profile on the {'upper' if direction > 0 else 'lower'} "
            f"side; outermost crossing used"
        )
    if inside[-1]:
        # the scan ended (at the box bound or the ceiling) still inside the
        # confidence region
        if limited_by_bound:
            return limit, False, True  # truncated at the box bound
        return limit, True, False  # open: ceiling reached inside the region

    last_in = max(i for i, ok in enumerate(inside) if ok)
    first_out_after = next(i for i in range(last_in + 1, len(xs)) if not inside[i])
    lo_in, hi_out = xs[last_in], xs[first_out_after]
    while abs(hi_out - lo_in) > cfg.rel_tol * max(1.0, abs(lo_in), abs(hi_out)):
        mid = 0.5 * (lo_in + hi_out)
        if pnll(mid) <= target:
            lo_in = mid
        else:
            hi_out = mid
    return 0.5 * (lo_in + hi_out), False, False


def profile_interval(
    pnll: Callable[[float], float],
    mle_value: float,
    nll_min: float,
    lower_bound: float = -math.inf,
    upper_bound: float = math.inf,
    cutoff: float | None = None,
    config: ProfileConfig | None = None,
    param_index: int = 0,
    param_name: str = "x",
    pnll_upper: Callable[[float], float] | None = None,
) -> ProfileCI:
    """Interval machinery over an arbitrary profile-NLL callable.

    This is the engine behind `profile_ci`; it is exposed so synthetic
    objectives (e.g. exact quadratics) can exercise the search directly.
    ``pnll_upper`` optionally serves the upper side with its own evaluator
    (used to keep warm starts local to each search direction).
    """
    cfg = config or ProfileConfig()
    if cutoff is not None:
        cfg = ProfileConfig(**{**cfg.__dict__, "cutoff": cutoff})
    points: list[tuple[float, float]] = []

    def record(fn):
        def wrapped(v):
            f = float(fn(v))
            points.append((float(v), f))
            return f
        return wrapped

    diagnostics: list[str] = []
    lo, lo_open, lo_at_bound = _search_side(
        record(pnll), -1, mle_value, nll_min, lower_bound, cfg, diagnostics
    )
    hi, hi_open, hi_at_bound = _search_side(
        record(pnll_upper if pnll_upper is not None else pnll),
        +1, mle_value, nll_min, upper_bound, cfg, diagnostics,
    )
    points.sort()
    return ProfileCI(
        param_index=param_index,
        param_name=param_name,
        mle_value=float(mle_value),
        lower=float(lo),
        upper=float(hi),
        lower_open=lo_open,
        upper_open=hi_open,
        at_lower_bound=lo_at_bound,
        at_upper_bound=hi_at_bound,
        cutoff=cfg.cutoff,
        profile_points=tuple(points),
        diagnostics=tuple(diagnostics),
    )


def profile_ci(
    fit: FitResult,
    param_index: int,
    cutoff: float | None = None,
    config: ProfileConfig | None = None,
) -> ProfileCI:
    """Profile-likelihood interval for one parameter of a fitted rule."""
    cfg = config or ProfileConfig()
    if cutoff is not None:
        cfg = ProfileConfig(**{**cfg.__dict__, "cutoff": cutoff})
    rule = fit.rule
    k = rule.n_params
    if k == 0:
        raise ValueError("the asocial rule has no parameters to profile")
    if not 0 <= param_index < k:
        raise ValueError(f"param_index {param_index} out of range for k={k}")

    lower_side = _ProfileSide(fit.table, rule, param_index, fit, cfg)
    upper_side = _ProfileSide(fit.table, rule, param_index, fit, cfg)
    mle_value = float(fit.mle[param_index])
    ci = profile_interval(
        lower_side,
        mle_value,
        fit.nll,
        lower_bound=rule.lower[param_index],
        upper_bound=rule.upper[param_index],
        config=cfg,
        param_index=param_index,
        param_name=rule.param_names[param_index],
        pnll_upper=upper_side,
    )
    extra = list(ci.diagnostics)
    observed = [f for _, f in ci.profile_points if math.isfinite(f)]
    if observed and min(observed) < fit.nll - 1e-6:
        extra.append(
            "profile found a lower NLL than the fit; the fit may not be the "
            "global optimum"
        )
    if extra != list(ci.diagnostics):
        ci = ProfileCI(**{**ci.__dict__, "diagnostics": tuple(extra)})
    return ci
