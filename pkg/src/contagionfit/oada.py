"""Order-of-acquisition likelihood for contagion spread on a network.

Only the *order* in which individuals acquire the behaviour enters the
likelihood, so any shared time-varying baseline rate cancels.  At the k-th
acquisition event the probability that naive individual ``i`` is the one
acquiring is::

    P(i | history) = R_i / sum_{j naive} R_j,     R_j = T_j + 1

where ``T_j`` is the social transmission rate of rule under evaluation and
the constant 1 is the normalized asocial baseline.  The negative
log-likelihood is the sum of ``-log P`` over observed events.

Partial diffusions (fewer events than individuals) are handled by plain
conditioning: the likelihood is the product over observed events only, with
no censoring term for individuals that never acquired.

`EventTable` freezes everything the likelihood needs into flat arrays (one
block of naive individuals per event, with cached informed-connection and
total-connection sums), so one evaluation is a handful of vectorized
operations regardless of how many optimizer iterations follow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .network import Network, require_valid
from .rules import TransmissionRule

__all__ = [
    "DiffusionData",
    "EventTable",
    "build_event_table",
    "negative_log_likelihood",
    "asocial_nll",
    "aicc",
    "parse_order_text",
    "load_order_file",
    "write_order_file",
]


@dataclass(frozen=True)
class DiffusionData:
    """A network plus the observed acquisition order (0-based indices)."""

    network: Network
    order: np.ndarray
    label: str = ""

    def __post_init__(self):
        order = np.asarray(self.order, dtype=np.int64).copy()
        if order.ndim != 1 or order.size < 1:
            raise ValueError("order must be a non-empty 1-d index sequence")
        n = self.network.n
        if order.min() < 0 or order.max() >= n:
            bad = order[(order < 0) | (order >= n)][0]
            raise ValueError(
                f"order references individual {bad + 1} (1-based) but the "
                f"network has {n} individuals"
            )
        uniq, counts = np.unique(order, return_counts=True)
        if (counts > 1).any():
            dup = uniq[counts > 1][0]
            raise ValueError(
                f"individual {dup + 1} (1-based) appears more than once in order"
            )
        order.setflags(write=False)
        object.__setattr__(self, "order", order)

    @property
    def n_events(self) -> int:
        return self.order.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffusionData):
            return NotImplemented
        return bool(np.array_equal(self.order, other.order)) and self.network == other.network

    def __hash__(self):
        return hash((self.network, self.order.tobytes()))


@dataclass(frozen=True)
class EventTable:
    """Flattened per-event likelihood ingredients.

    Block ``k`` (acquisition event k) spans ``flat_start[k]:flat_start[k+1]``
    in the flat arrays and lists every individual still naive just before
    that event.  ``acquirer_slot[k]`` indexes the acquirer's position inside
    the flat arrays.
    """

    data: DiffusionData
    naive_flat: np.ndarray        # individual index per (event, naive) slot
    w_informed_flat: np.ndarray   # sum of connections to informed, per slot
    total_flat: np.ndarray        # total connection strength, per slot
    flat_start: np.ndarray        # (D+1,) block offsets
    acquirer_slot: np.ndarray     # (D,) flat index of each event's acquirer

    @property
    def n_events(self) -> int:
        return self.data.n_events


def build_event_table(data: DiffusionData) -> EventTable:
    """Precompute the flat likelihood table for one diffusion."""
    require_valid(data.network)
    w = data.network.weights
    n = w.shape[0]
    order = data.order
    d = order.size

    totals = w.sum(axis=1)
    w_informed = np.zeros(n)          # running sum_j a_ij z_j for everyone
    naive_mask = np.ones(n, dtype=bool)

    sizes = n - np.arange(d)
    total_slots = int(sizes.sum())
    naive_flat = np.empty(total_slots, dtype=np.int64)
    w_flat = np.empty(total_slots)
    tot_flat = np.empty(total_slots)
    starts = np.zeros(d + 1, dtype=np.int64)
    acq_slot = np.empty(d, dtype=np.int64)

    pos = 0
    for k, acq in enumerate(order):
        idx = np.flatnonzero(naive_mask)
        m = idx.size
        naive_flat[pos : pos + m] = idx
        w_flat[pos : pos + m] = w_informed[idx]
        tot_flat[pos : pos + m] = totals[idx]
        where = np.searchsorted(idx, acq)
        acq_slot[k] = pos + where
        starts[k + 1] = pos + m
        pos += m
        naive_mask[acq] = False
        w_informed += w[:, acq]

    for arr in (naive_flat, w_flat, tot_flat, starts, acq_slot):
        arr.setflags(write=False)
    return EventTable(
        data=data,
        naive_flat=naive_flat,
        w_informed_flat=w_flat,
        total_flat=tot_flat,
        flat_start=starts,
        acquirer_slot=acq_slot,
    )


def _nll_from_sums(rule: TransmissionRule, params: np.ndarray, table: EventTable) -> float:
    """Fast path: vectorized over the whole flat table, no validation.

    Returns +inf instead of nan when rates overflow, so optimizers always
    see an ordered objective.
    """
    t = rule.sums_rate(params, table.w_informed_flat, table.total_flat)
    r = np.asarray(t, dtype=float) + 1.0
    denom = np.add.reduceat(r, table.flat_start[:-1])
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        val = float(np.log(denom).sum() - np.log(r[table.acquirer_slot]).sum())
    return val if math.isfinite(val) else math.inf


def _nll_generic(rule: TransmissionRule, params: np.ndarray, table: EventTable) -> float:
    """General path for rules that need the full (connections, status) view."""
    w = table.data.network.weights
    n = w.shape[0]
    z = np.zeros(n)
    nll = 0.0
    for k, acq in enumerate(table.data.order):
        lo, hi = table.flat_start[k], table.flat_start[k + 1]
        rates = np.empty(hi - lo)
        for slot in range(lo, hi):
            i = table.naive_flat[slot]
            rates[slot - lo] = rule.full_rate(params, w[i], z)
        r = rates + 1.0
        nll += math.log(r.sum()) - math.log(r[table.acquirer_slot[k] - lo])
        z[acq] = 1.0
    return nll


def negative_log_likelihood(rule: TransmissionRule, params, table: EventTable) -> float:
    """Exact NLL of the observed acquisition order under ``rule``.

    Parameters are validated against the rule's box bounds.  Raises
    ValueError if the rule produces a non-finite or negative rate anywhere
    in the table.
    """
    p = rule.check_params(params)
    if rule.sums_rate is not None:
        t = np.asarray(rule.sums_rate(p, table.w_informed_flat, table.total_flat), dtype=float)
        if not np.isfinite(t).all() or (t < 0).any():
            bad = t[~np.isfinite(t) | (t < 0)][0]
            raise ValueError(f"rule {rule.kind!r} produced invalid rate {bad}")
        r = t + 1.0
        denom = np.add.reduceat(r, table.flat_start[:-1])
        return float(np.log(denom).sum() - np.log(r[table.acquirer_slot]).sum())
    nll = _nll_generic(rule, p, table)
    if not np.isfinite(nll):
        raise ValueError(f"rule {rule.kind!r} produced a non-finite likelihood")
    return nll


def asocial_nll(table: EventTable) -> float:
    """Closed form: sum of log naive-set sizes.

    Equals log(n!) for a complete diffusion on n individuals.
    """
    sizes = np.diff(table.flat_start)
    return float(np.log(sizes.astype(float)).sum())


def aicc(nll: float, k: int, n_events: int) -> float:
    """Small-sample-corrected AIC; sample size is the event count.

    Returns ``+inf`` when the correction denominator ``n - k - 1`` is not
    positive (too few events to score a model with k parameters).
    """
    if k < 0 or n_events < 1:
        raise ValueError("need k >= 0 and n_events >= 1")
    if n_events - k - 1 <= 0:
        return math.inf
    return 2.0 * k + 2.0 * nll + 2.0 * k * (k + 1) / (n_events - k - 1)


# --- order-file I/O (1-based on disk, 0-based in memory) ---

def parse_order_text(text: str) -> np.ndarray:
    """Parse 1-based acquisition order: comma-separated and/or one per line."""
    tokens: list[str] = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        tokens.extend(tok.strip() for tok in line.split(",") if tok.strip())
    if not tokens:
        raise ValueError("order is empty")
    values = []
    for tok in tokens:
        try:
            v = int(tok)
        except ValueError:
            raise ValueError(f"order entry {tok!r} is not an integer") from None
        if v < 1:
            raise ValueError(f"order entry {v} must be a 1-based index (>= 1)")
        values.append(v - 1)
    return np.asarray(values, dtype=np.int64)


def load_order_file(path: str) -> np.ndarray:
    with open(path) as fh:
        return parse_order_text(fh.read())


def write_order_file(order: np.ndarray, path: str) -> None:
    """Write one 1-based index per line."""
    with open(path, "w") as fh:
        for i in np.asarray(order, dtype=np.int64):
            fh.write(f"{int(i) + 1}\n")
