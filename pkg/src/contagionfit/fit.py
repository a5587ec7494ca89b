"""Maximum-likelihood fitting of transmission rules to acquisition orders.

The optimizer is derivative-free (Nelder-Mead) and runs on a smooth
reparameterization of the box-constrained parameter space: one-sided bounds
map through log, two-sided bounds through a scaled logit, unbounded
coordinates pass through.  A fit is the user-supplied (or default) start
plus ``restarts`` jittered restarts; the best end point wins, with ties
broken toward the earlier start so results are reproducible.

Standard errors come from a central finite-difference Hessian of the NLL at
the MLE and are reported only when that Hessian is positive definite and no
parameter sits on a bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from .oada import DiffusionData, EventTable, _nll_from_sums, _nll_generic, aicc, build_event_table
from .rules import TransmissionRule

__all__ = [
    "FitConfig",
    "FitResult",
    "fit_oada",
    "compare_models",
    "ComparisonRow",
    "standard_errors",
    "hessian_standard_errors",
    "minimize_multistart",
    "MultistartResult",
    "BoxTransform",
    "nll_objective",
]

# unbounded parameters larger than this get a diagnostic note on the fit
CEILING_NOTE_AT = 1e8
# relative closeness to a finite bound that counts as "at the bound"
BOUND_TOL = 1e-7


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings.

    ``start``/``lower``/``upper`` default to the rule's own values.  The
    jitter applied to restarts is multiplicative U[0.25, 4] on the distance
    from one-sided bounds (additive in the transformed space) and is drawn
    from a generator seeded by ``seed``, so a fit is a pure function of
    (data, rule, config).
    """

    start: tuple[float, ...] | None = None
    lower: tuple[float, ...] | None = None
    upper: tuple[float, ...] | None = None
    restarts: int = 8
    tolerance: float = 1e-8
    max_evals: int = 20000
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 0:
            raise ValueError("restarts must be >= 0")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.max_evals < 10:
            raise ValueError("max_evals must be >= 10")


@dataclass(frozen=True, eq=False)
class FitResult:
    """Outcome of one maximum-likelihood fit."""

    rule: TransmissionRule
    table: EventTable
    mle: np.ndarray
    nll: float
    se: np.ndarray | None
    aicc: float
    converged: bool
    n_evals: int
    boundary_flags: tuple[bool, ...]
    notes: tuple[str, ...] = ()
    config: FitConfig | None = None

    @property
    def data(self) -> DiffusionData:
        return self.table.data

    @property
    def k(self) -> int:
        return self.rule.n_params

    @property
    def param_names(self) -> tuple[str, ...]:
        return self.rule.param_names

    def report_dict(self) -> dict:
        """JSON-ready summary (used by the CLI fit report)."""
        return {
            "rule": self.rule.kind,
            "param_names": list(self.param_names),
            "mle": [float(v) for v in self.mle],
            "se": None if self.se is None else [float(v) for v in self.se],
            "nll": float(self.nll),
            "aicc": float(self.aicc) if math.isfinite(self.aicc) else "inf",
            "n_params": self.k,
            "n_events": self.table.n_events,
            "converged": bool(self.converged),
            "boundary_flags": [bool(b) for b in self.boundary_flags],
            "n_evals": int(self.n_evals),
            "fixed": {k: float(v) for k, v in self.rule.fixed.items()},
            "notes": list(self.notes),
        }


class BoxTransform:
    """Smooth bijection between a box and all of R^k (per coordinate)."""

    _FREE, _LOWER, _UPPER, _BOTH = range(4)

    def __init__(self, lower, upper):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if self.lower.shape != self.upper.shape:
            raise ValueError("bound length mismatch")
        if np.any(self.lower >= self.upper):
            raise ValueError("each lower bound must be strictly below its upper bound")
        kinds = []
        for lo, hi in zip(self.lower, self.upper):
            lo_f, hi_f = math.isfinite(lo), math.isfinite(hi)
            kinds.append(
                self._BOTH if (lo_f and hi_f)
                else self._LOWER if lo_f
                else self._UPPER if hi_f
                else self._FREE
            )
        self.kinds = kinds

    @property
    def k(self) -> int:
        return self.lower.size

    def to_internal(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        z = np.empty_like(x)
        for i, kind in enumerate(self.kinds):
            lo, hi = self.lower[i], self.upper[i]
            if kind == self._FREE:
                z[i] = x[i]
            elif kind == self._LOWER:
                z[i] = math.log(max(x[i] - lo, 1e-300))
            elif kind == self._UPPER:
                z[i] = math.log(max(hi - x[i], 1e-300))
            else:
                p = min(max((x[i] - lo) / (hi - lo), 1e-12), 1.0 - 1e-12)
                z[i] = logit(p)
        return z

    def to_external(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        x = np.empty_like(z)
        for i, kind in enumerate(self.kinds):
            lo, hi = self.lower[i], self.upper[i]
            if kind == self._FREE:
                x[i] = z[i]
            elif kind == self._LOWER:
                x[i] = lo + math.exp(min(z[i], 700.0))
            elif kind == self._UPPER:
                x[i] = hi - math.exp(min(z[i], 700.0))
            else:
                x[i] = lo + (hi - lo) * expit(z[i])
        return x

    def nudge_inside(self, x) -> np.ndarray:
        """Move points sitting on (or outside) a bound strictly inside."""
        x = np.asarray(x, dtype=float).copy()
        for i, kind in enumerate(self.kinds):
            lo, hi = self.lower[i], self.upper[i]
            if kind in (self._LOWER, self._BOTH) and x[i] <= lo:
                width = (hi - lo) if kind == self._BOTH else 1.0
                x[i] = lo + 1e-3 * width
            if kind in (self._UPPER, self._BOTH) and x[i] >= hi:
                width = (hi - lo) if kind == self._BOTH else 1.0
                x[i] = hi - 1e-3 * width
        return x


@dataclass(frozen=True)
class MultistartResult:
    x: np.ndarray
    fun: float
    converged: bool
    n_evals: int
    start_values: tuple[float, ...]  # objective at each start, diagnostics


def _safe(objective: Callable[[np.ndarray], float]) -> Callable[[np.ndarray], float]:
    def wrapped(x):
        try:
            v = float(objective(x))
        except (ValueError, FloatingPointError, OverflowError, ZeroDivisionError):
            return math.inf
        return v if not math.isnan(v) else math.inf
    return wrapped


def minimize_multistart(
    objective: Callable[[np.ndarray], float],
    start,
    lower,
    upper,
    restarts: int = 8,
    tolerance: float = 1e-8,
    max_evals: int = 20000,
    seed: int | np.random.SeedSequence = 0,
) -> MultistartResult:
    """Nelder-Mead from ``start`` plus jittered restarts, on transformed space.

    The accepted answer of each start never has a higher objective than the
    start point itself (the start is kept when a run goes astray), and the
    overall winner is the lowest final value, earliest start on exact ties.
    """
    transform = BoxTransform(lower, upper)
    obj = _safe(objective)
    x0 = transform.nudge_inside(np.asarray(start, dtype=float))
    z0 = transform.to_internal(x0)
    k = z0.size
    if k == 0:
        v = obj(np.zeros(0))
        return MultistartResult(np.zeros(0), v, True, 1, (v,))

    rng = np.random.default_rng(seed)
    z_starts = [z0]
    if restarts > 0:
        jitter = np.log(rng.uniform(0.25, 4.0, size=(restarts, k)))
        z_starts.extend(z0 + jitter[r] for r in range(restarts))

    best_x: np.ndarray | None = None
    best_f = math.inf
    best_ok = False
    total_evals = 0
    start_vals = []
    for z_init in z_starts:
        f_init = obj(transform.to_external(z_init))
        start_vals.append(f_init)
        total_evals += 1
        simplex = np.vstack([z_init] + [z_init + 0.25 * np.eye(k)[i] for i in range(k)])
        res = minimize(
            lambda z: obj(transform.to_external(z)),
            z_init,
            method="Nelder-Mead",
            options={
                "fatol": tolerance,
                "xatol": 1e-6,
                "maxfev": max_evals,
                "initial_simplex": simplex,
            },
        )
        total_evals += res.nfev
        cand_x = transform.to_external(res.x)
        cand_f = float(res.fun)
        cand_ok = bool(res.success)
        if cand_f > f_init:  # keep the monotone-improvement guarantee
            cand_x, cand_f, cand_ok = transform.to_external(z_init), f_init, False
        if cand_f < best_f:
            best_x, best_f, best_ok = cand_x, cand_f, cand_ok
    return MultistartResult(best_x, best_f, best_ok, total_evals, tuple(start_vals))


def nll_objective(rule: TransmissionRule, table: EventTable) -> Callable[[np.ndarray], float]:
    """NLL as a plain params -> float callable (no bounds checks)."""
    if rule.sums_rate is not None:
        return lambda p: _nll_from_sums(rule, np.asarray(p, dtype=float), table)

    def obj(p):
        return _nll_generic(rule, np.asarray(p, dtype=float), table)

    return obj


def hessian_standard_errors(
    objective: Callable[[np.ndarray], float],
    x,
    lower=None,
    upper=None,
    rel_step: float = 1e-4,
    abs_floor: float = 1e-6,
) -> np.ndarray | None:
    """SEs from a central finite-difference Hessian; None when unusable.

    Unusable means: a difference step would leave the feasible box, the
    Hessian is not positive definite, or the resulting variances are not
    finite and positive.
    """
    x = np.asarray(x, dtype=float)
    k = x.size
    if k == 0:
        return np.zeros(0)
    h = np.maximum(rel_step * np.abs(x), abs_floor)
    if lower is not None and np.any(x - h < np.asarray(lower, dtype=float)):
        return None
    if upper is not None and np.any(x + h > np.asarray(upper, dtype=float)):
        return None

    obj = _safe(objective)
    f0 = obj(x)
    hess = np.empty((k, k))
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h[i]
        hess[i, i] = (obj(x + ei) - 2.0 * f0 + obj(x - ei)) / h[i] ** 2
    for i in range(k):
        for j in range(i + 1, k):
            ei = np.zeros(k)
            ej = np.zeros(k)
            ei[i] = h[i]
            ej[j] = h[j]
            fpp = obj(x + ei + ej)
            fpm = obj(x + ei - ej)
            fmp = obj(x - ei + ej)
            fmm = obj(x - ei - ej)
            hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j])
    if not np.isfinite(hess).all():
        return None
    try:
        np.linalg.cholesky(hess)
    except np.linalg.LinAlgError:
        return None
    cov = np.linalg.inv(hess)
    var = np.diagonal(cov)
    if np.any(var <= 0) or not np.isfinite(var).all():
        return None
    return np.sqrt(var)


def standard_errors(fit: FitResult, rel_step: float = 1e-4, abs_floor: float = 1e-6):
    """Recompute SEs for a fit (None at a bound or with an unusable Hessian)."""
    if any(fit.boundary_flags):
        return None
    lower = fit.config.lower if fit.config and fit.config.lower else fit.rule.lower
    upper = fit.config.upper if fit.config and fit.config.upper else fit.rule.upper
    return hessian_standard_errors(
        nll_objective(fit.rule, fit.table), fit.mle, lower, upper, rel_step, abs_floor
    )


def _resolve_box(rule: TransmissionRule, cfg: FitConfig):
    lower = tuple(cfg.lower) if cfg.lower is not None else rule.lower
    upper = tuple(cfg.upper) if cfg.upper is not None else rule.upper
    k = rule.n_params
    if len(lower) != k or len(upper) != k:
        raise ValueError(f"bounds must have {k} entries for rule {rule.kind!r}")
    start = tuple(cfg.start) if cfg.start is not None else rule.default_start
    if len(start) != k:
        raise ValueError(f"start must have {k} entries for rule {rule.kind!r}")
    return np.asarray(start, float), np.asarray(lower, float), np.asarray(upper, float)


def fit_oada(
    data: DiffusionData | EventTable,
    rule: TransmissionRule,
    config: FitConfig | None = None,
) -> FitResult:
    """Maximum-likelihood fit of ``rule`` to an observed acquisition order.

    Accepts a `DiffusionData` or a prebuilt `EventTable`.  Deterministic for
    fixed inputs and config.  A rule with no free parameters (asocial) is
    evaluated in closed form.
    """
    table = data if isinstance(data, EventTable) else build_event_table(data)
    cfg = config or FitConfig()
    d = table.n_events

    if rule.n_params == 0:
        # no optimization needed; for the asocial rule this is sum(log naive sizes)
        nll = _safe(nll_objective(rule, table))(np.zeros(0))
        return FitResult(
            rule=rule,
            table=table,
            mle=np.zeros(0),
            nll=nll,
            se=np.zeros(0),
            aicc=aicc(nll, 0, d),
            converged=True,
            n_evals=1,
            boundary_flags=(),
            notes=(),
            config=cfg,
        )

    start, lower, upper = _resolve_box(rule, cfg)
    objective = nll_objective(rule, table)
    ms = minimize_multistart(
        objective,
        start,
        lower,
        upper,
        restarts=cfg.restarts,
        tolerance=cfg.tolerance,
        max_evals=cfg.max_evals,
        seed=np.random.SeedSequence([cfg.seed]),
    )
    mle = ms.x
    flags = []
    notes = []
    for i, name in enumerate(rule.param_names):
        lo, hi = lower[i], upper[i]
        at_lo = math.isfinite(lo) and (mle[i] - lo) <= BOUND_TOL * max(1.0, abs(lo), abs(mle[i]))
        at_hi = math.isfinite(hi) and (hi - mle[i]) <= BOUND_TOL * max(1.0, abs(hi), abs(mle[i]))
        flags.append(bool(at_lo or at_hi))
        if not math.isfinite(hi) and mle[i] > CEILING_NOTE_AT:
            notes.append(
                f"{name} is extremely large ({mle[i]:.4g}); the likelihood is "
                "likely flat in that direction"
            )
    se = None
    if not any(flags):
        se = hessian_standard_errors(objective, mle, lower, upper)
    if se is None and not any(flags):
        notes.append("standard errors unavailable (Hessian not positive definite)")
    elif any(flags):
        notes.append("standard errors unavailable (MLE at a parameter bound)")

    return FitResult(
        rule=rule,
        table=table,
        mle=mle,
        nll=ms.fun,
        se=se,
        aicc=aicc(ms.fun, rule.n_params, d),
        converged=ms.converged,
        n_evals=ms.n_evals,
        boundary_flags=tuple(flags),
        notes=tuple(notes),
        config=cfg,
    )


@dataclass(frozen=True)
class ComparisonRow:
    rule_kind: str
    k: int
    nll: float
    aicc_value: float
    delta_aicc: float
    favored: bool


def compare_models(fits: Sequence[FitResult]) -> list[ComparisonRow]:
    """Rank fits of different rules to the *same* data by AICc.

    Rows come back sorted by ascending AICc.  Exactly one row is favored:
    the strictly lowest AICc, with exact ties broken by fewer parameters
    and then by the order the fits were passed in.
    """
    fits = list(fits)
    if not fits:
        raise ValueError("compare_models needs at least one fit")
    first = fits[0].data
    for f in fits[1:]:
        if not (f.data is first or f.data == first):
            raise ValueError("all fits must be on the same diffusion data")

    order = sorted(range(len(fits)), key=lambda i: (fits[i].aicc, fits[i].k, i))
    winner = order[0]
    best = fits[winner].aicc
    rows = []
    for i in order:
        f = fits[i]
        rows.append(
            ComparisonRow(
                rule_kind=f.rule.kind,
                k=f.k,
                nll=f.nll,
                aicc_value=f.aicc,
                delta_aicc=f.aicc - best,
                favored=(i == winner),
            )
        )
    return rows
