"""Transmission rules: how a naive individual's social rate depends on its
informed neighbours.

A rule maps (parameters, connection row ``a_i``, status vector ``z``) to a
non-negative social transmission rate ``T``.  The acquisition likelihood and
the simulator both use the relative rate ``T + 1`` (the baseline asocial
hazard is normalized to 1 and cancels from order-of-acquisition
probabilities).

Every built-in rule depends on the connections only through two sums:
``w_informed = sum_j a_ij z_j`` (connection to informed individuals) and
``total = sum_j a_ij``.  Such rules carry a vectorized ``sums_rate`` fast
path which lets the likelihood engine evaluate a whole diffusion from a
cached table in a few array operations.  Custom rules may instead supply a
plain per-individual ``full_rate(params, a_i, z)``.

Built-ins
---------
asocial        T = 0
simple         T = s * w_informed                      (standard linear rate)
proportional   T = s * w_informed / total              (0 when total = 0)
freqdep        T = s * w_inf^f / (w_inf^f + w_uninf^f) (0 when total = 0,
               s when all connections informed; f = 1 recovers proportional)
threshold      sigmoid in w_informed, exactly 0 at w_informed = 0, upper
               asymptote c, half-rise near the location parameter a,
               sharpness b (fixed at 3.0 unless estimated)
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.special import expit

__all__ = [
    "TransmissionRule",
    "asocial_rule",
    "simple_rule",
    "proportional_rule",
    "frequency_dependent_rule",
    "threshold_rule",
    "custom_rule",
    "rule_from_name",
    "eval_rate",
    "rate_simple",
    "rate_proportional",
    "rate_frequency_dependent",
    "rate_threshold",
    "BUILTIN_RULE_NAMES",
    "DEFAULT_SHARPNESS",
]

DEFAULT_SHARPNESS = 3.0

# (params, w_informed, total) -> rates; must accept ndarrays elementwise
SumsRate = Callable[..., np.ndarray]
# (params, connections, status) -> scalar rate
FullRate = Callable[[np.ndarray, np.ndarray, np.ndarray], float]


@dataclass(frozen=True)
class TransmissionRule:
    """A named transmission rule with parameter box constraints.

    Fields
    ------
    kind : canonical rule name (appears in reports and tables)
    param_names : free parameter names, in the order params vectors use
    lower, upper : box bounds, one entry per free parameter
    fixed : name -> value for constants baked into the rule (e.g. b)
    sums_rate : vectorized fast path, present when the rate depends on the
        connections only through (w_informed, total)
    full_rate : general evaluator used when no fast path exists
    size_param : name of the parameter that switches social learning off at
        0; other parameters are non-identifiable when it is truly 0
    default_start : optimizer starting point used when the caller gives none
    """

    kind: str
    param_names: tuple[str, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    fixed: Mapping[str, float] = field(default_factory=dict)
    sums_rate: SumsRate | None = None
    full_rate: FullRate | None = None
    size_param: str | None = None
    default_start: tuple[float, ...] = ()

    def __post_init__(self):
        k = len(self.param_names)
        if len(self.lower) != k or len(self.upper) != k:
            raise ValueError("lower/upper must match param_names in length")
        if self.sums_rate is None and self.full_rate is None:
            raise ValueError("a rule needs sums_rate or full_rate")
        if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("lower bound above upper bound")
        if not self.default_start:
            object.__setattr__(
                self,
                "default_start",
                tuple(min(max(1.0, lo), hi) for lo, hi in zip(self.lower, self.upper)),
            )

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    def check_params(self, params) -> np.ndarray:
        p = np.atleast_1d(np.asarray(params, dtype=float))
        if p.shape != (self.n_params,):
            raise ValueError(
                f"rule {self.kind!r} takes {self.n_params} parameter(s) "
                f"{self.param_names}, got {p.size}"
            )
        for name, v, lo, hi in zip(self.param_names, p, self.lower, self.upper):
            if not np.isfinite(v) or v < lo or v > hi:
                raise ValueError(
                    f"parameter {name}={v} outside bounds [{lo}, {hi}]"
                )
        return p

    def rate(self, params, connections, status) -> float:
        """Social rate for one naive individual (no bounds checking)."""
        a = np.asarray(connections, dtype=float)
        z = np.asarray(status, dtype=float)
        if self.sums_rate is not None:
            w = float(a @ z)
            tot = float(a.sum())
            r = self.sums_rate(np.asarray(params, float), w, tot)
            return float(np.asarray(r).ravel()[0])
        return float(self.full_rate(np.asarray(params, float), a, z))

    def rates_from_sums(self, params, w_informed, total) -> np.ndarray:
        """Vectorized rates from cached sums; only when sums_rate exists."""
        if self.sums_rate is None:
            raise ValueError(f"rule {self.kind!r} has no sums fast path")
        return self.sums_rate(np.asarray(params, float), w_informed, total)


# --- built-in rate kernels (module-level so rules pickle cleanly) ---

def _asocial_sums(params, w, tot):
    return np.zeros_like(np.asarray(w, dtype=float))


def _simple_sums(params, w, tot):
    return params[0] * np.asarray(w, dtype=float)


def _proportional_sums(params, w, tot):
    w = np.asarray(w, dtype=float)
    tot = np.asarray(tot, dtype=float)
    out = np.zeros(np.broadcast(w, tot).shape)
    np.divide(w, tot, out=out, where=tot > 0)
    return params[0] * out


def _freqdep_sums(params, w, tot):
    s, f = params
    w = np.atleast_1d(np.asarray(w, dtype=float))
    tot = np.atleast_1d(np.asarray(tot, dtype=float))
    w_un = tot - w
    out = np.zeros(np.broadcast(w, tot).shape)
    saturated = (w > 0) & (w_un <= 0)
    out[saturated] = s
    mixed = (w > 0) & (w_un > 0)
    if np.any(mixed):
        # s / (1 + (w_un/w)^f), computed through expit to survive huge f
        log_ratio = np.log(w_un[mixed]) - np.log(w[mixed])
        out[mixed] = s * expit(-f * log_ratio)
    return out


def _threshold_sums(params, w, tot, *, sharpness=None):
    if sharpness is None:
        a, c, b = params
    else:
        a, c = params
        b = sharpness
    w = np.asarray(w, dtype=float)
    # eps anchors the curve so the rate is exactly 0 at w = 0
    eps = expit(-b * a)
    return (c / (1.0 - eps)) * (expit(b * (w - a)) - eps)


def asocial_rule() -> TransmissionRule:
    """No social transmission; every naive individual has relative rate 1."""
    return TransmissionRule(
        kind="asocial",
        param_names=(),
        lower=(),
        upper=(),
        sums_rate=_asocial_sums,
        default_start=(),
    )


def simple_rule() -> TransmissionRule:
    """Linear in connection to informed individuals (the standard rate)."""
    return TransmissionRule(
        kind="simple",
        param_names=("s",),
        lower=(0.0,),
        upper=(np.inf,),
        sums_rate=_simple_sums,
        size_param="s",
        default_start=(1.0,),
    )


def proportional_rule() -> TransmissionRule:
    """Linear in the informed *fraction* of total connection strength."""
    return TransmissionRule(
        kind="proportional",
        param_names=("s",),
        lower=(0.0,),
        upper=(np.inf,),
        sums_rate=_proportional_sums,
        size_param="s",
        default_start=(1.0,),
    )


def frequency_dependent_rule(f_lower: float = 0.2) -> TransmissionRule:
    """Conformity-weighted fraction: f > 1 overweights the local majority,
    f < 1 overweights the minority, f = 1 recovers the proportional rule."""
    return TransmissionRule(
        kind="freqdep",
        param_names=("s", "f"),
        lower=(0.0, f_lower),
        upper=(np.inf, np.inf),
        sums_rate=_freqdep_sums,
        size_param="s",
        default_start=(1.0, 1.0),
    )


def threshold_rule(
    sharpness: float = DEFAULT_SHARPNESS, estimate_sharpness: bool = False
) -> TransmissionRule:
    """Sigmoid threshold on absolute informed connection strength.

    The rate rises from exactly 0 (at w_informed = 0) towards the asymptote
    ``c``, with the steep part centred near ``a``.  ``sharpness`` (b) is a
    fixed constant by default; pass ``estimate_sharpness=True`` to fit it as
    a third free parameter.
    """
    if sharpness <= 0:
        raise ValueError(f"sharpness must be positive, got {sharpness}")
    if estimate_sharpness:
        return TransmissionRule(
            kind="threshold",
            param_names=("a", "c", "b"),
            lower=(0.0, 0.0, 0.0),
            upper=(np.inf, np.inf, np.inf),
            sums_rate=_threshold_sums,
            size_param="c",
            default_start=(1.0, 1.0, sharpness),
        )
    return TransmissionRule(
        kind="threshold",
        param_names=("a", "c"),
        lower=(0.0, 0.0),
        upper=(np.inf, np.inf),
        fixed={"b": sharpness},
        sums_rate=functools.partial(_threshold_sums, sharpness=sharpness),
        size_param="c",
        default_start=(1.0, 1.0),
    )


def custom_rule(
    kind: str,
    param_names,
    rate: FullRate | None = None,
    sums_rate: SumsRate | None = None,
    lower=None,
    upper=None,
    fixed: Mapping[str, float] | None = None,
    size_param: str | None = None,
    default_start=None,
) -> TransmissionRule:
    """Wrap a user-supplied rate function as a rule usable everywhere.

    Provide ``sums_rate(params, w_informed, total)`` when the rate depends
    on the connections only through those sums (enables the cached fast
    path), else ``rate(params, connections, status)``.
    """
    names = tuple(param_names)
    k = len(names)
    lo = tuple(float(x) for x in (lower if lower is not None else (0.0,) * k))
    hi = tuple(float(x) for x in (upper if upper is not None else (np.inf,) * k))
    return TransmissionRule(
        kind=kind,
        param_names=names,
        lower=lo,
        upper=hi,
        fixed=dict(fixed or {}),
        sums_rate=sums_rate,
        full_rate=rate,
        size_param=size_param,
        default_start=tuple(default_start) if default_start is not None else (),
    )


# CLI / config names.  "standard" is a common alias for the simple rule.
BUILTIN_RULE_NAMES = ("asocial", "simple", "proportional", "freqdep", "threshold")

_FACTORIES: dict[str, Callable[..., TransmissionRule]] = {
    "asocial": asocial_rule,
    "simple": simple_rule,
    "standard": simple_rule,
    "proportional": proportional_rule,
    "freqdep": frequency_dependent_rule,
    "threshold": threshold_rule,
}


def rule_from_name(name: str, **kwargs) -> TransmissionRule:
    """Build a built-in rule from its CLI name (or the alias 'standard')."""
    try:
        factory = _FACTORIES[name.strip().lower()]
    except KeyError:
        known = ", ".join(sorted(_FACTORIES))
        raise ValueError(f"unknown rule {name!r}; known rules: {known}") from None
    return factory(**kwargs)


def eval_rate(rule: TransmissionRule, params, connections, status) -> float:
    """Validated single-individual rate evaluation.

    Checks parameter arity and bounds, array lengths, and that ``status``
    is a 0/1 vector; raises ValueError on any violation, including a
    non-finite or negative rate coming back from a custom rule.
    """
    p = rule.check_params(params)
    a = np.asarray(connections, dtype=float)
    z = np.asarray(status, dtype=float)
    if a.ndim != 1 or z.shape != a.shape:
        raise ValueError(
            f"connections and status must be equal-length vectors, "
            f"got shapes {a.shape} and {z.shape}"
        )
    if not np.isin(z, (0.0, 1.0)).all():
        raise ValueError("status entries must be 0 or 1")
    r = rule.rate(p, a, z)
    if not np.isfinite(r) or r < 0:
        raise ValueError(f"rule {rule.kind!r} produced invalid rate {r}")
    return r


# --- spec-level convenience wrappers with explicit signatures ---

def rate_simple(s: float, connections, status) -> float:
    return eval_rate(simple_rule(), [s], connections, status)


def rate_proportional(s: float, connections, status) -> float:
    return eval_rate(proportional_rule(), [s], connections, status)


def rate_frequency_dependent(s: float, f: float, connections, status) -> float:
    # direct kernel call: f below the fitting box (but > 0) is still a
    # mathematically valid rate
    if s < 0 or f <= 0:
        raise ValueError("requires s >= 0 and f > 0")
    a = np.asarray(connections, dtype=float)
    z = np.asarray(status, dtype=float)
    w = float(a @ z)
    return float(_freqdep_sums(np.array([s, f]), w, float(a.sum())).ravel()[0])


def rate_threshold(
    a_loc: float, c_max: float, connections, status, sharpness: float = DEFAULT_SHARPNESS
) -> float:
    if a_loc < 0 or c_max < 0 or sharpness <= 0:
        raise ValueError("requires a >= 0, c >= 0 and sharpness > 0")
    conn = np.asarray(connections, dtype=float)
    z = np.asarray(status, dtype=float)
    w = float(conn @ z)
    return float(
        _threshold_sums(np.array([a_loc, c_max]), w, float(conn.sum()), sharpness=sharpness)
    )
