"""Weighted directed social networks: container, validation, random generator.

Connection weights are held as a dense (n, n) float array.  ``weights[i, j]``
is the strength of the connection *from j to i*, i.e. how strongly individual
``i`` attends to ``j``.  Row ``i`` therefore collects everything that can
influence ``i``.  All indices in this package are 0-based; file formats and
the command line use 1-based labels (see `load_network_csv` / the CLI docs).

Networks are immutable once constructed: the weight array is copied and
marked read-only, so one network can safely be shared across fits, simulator
runs and worker processes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Network",
    "GeneratorConfig",
    "NetworkFormatError",
    "validate",
    "total_connection",
    "generate_network",
    "load_network_csv",
    "write_network_csv",
]


class NetworkFormatError(ValueError):
    """Raised when a network file cannot be parsed; carries the line number."""


@dataclass(frozen=True)
class Network:
    """A weighted directed network on ``n`` individuals.

    Parameters
    ----------
    weights : array-like, shape (n, n)
        Non-negative connection strengths, zero diagonal.  Asymmetry is
        allowed and meaningful.
    label : str
        Free-form name used in reports.
    """

    weights: np.ndarray
    label: str = ""

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weights must be square, got shape {w.shape}")
        if w.shape[0] < 2:
            raise ValueError("a network needs at least 2 individuals")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return self.weights.shape == other.weights.shape and bool(
            np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.weights.shape, self.weights.tobytes()))


@dataclass(frozen=True)
class GeneratorConfig:
    """Settings for `generate_network`.

    ``sparsity_threshold`` is the probability mass removed: uniform draws
    below it become zero, so the expected fraction of absent connections
    equals the threshold.  ``multiplier_max`` scales whole rows by one
    uniform draw from [0, multiplier_max] per row, giving individuals
    heterogeneous overall connectedness; 0 disables the multiplier stage.
    """

    n: int = 100
    sparsity_threshold: float = 0.7
    multiplier_max: float = 3.0
    seed: int | np.random.SeedSequence = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not 0.0 <= self.sparsity_threshold <= 1.0:
            raise ValueError("sparsity_threshold must lie in [0, 1]")
        if self.multiplier_max < 0:
            raise ValueError("multiplier_max must be >= 0")


def validate(network: Network) -> list[str]:
    """Check network invariants and return human-readable violations.

    Returns an empty list when the network is valid.  Each violation names
    the offending entries (1-based, as a user would see them in a file).
    """
    w = network.weights
    problems: list[str] = []
    bad = ~np.isfinite(w)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        problems.append(
            f"non-finite weight at row {i + 1}, column {j + 1} "
            f"({np.count_nonzero(bad)} entries affected)"
        )
    neg = w < 0
    if neg.any():
        i, j = np.argwhere(neg)[0]
        problems.append(
            f"negative weight at row {i + 1}, column {j + 1} "
            f"({np.count_nonzero(neg)} entries affected)"
        )
    diag = np.diagonal(w)
    nz = np.flatnonzero(np.nan_to_num(diag, nan=1.0) != 0.0)
    if nz.size:
        problems.append(
            f"nonzero diagonal (self-connection) for individual {nz[0] + 1} "
            f"({nz.size} entries affected)"
        )
    return problems


def require_valid(network: Network) -> None:
    """Raise ValueError listing all invariant violations, if any."""
    problems = validate(network)
    if problems:
        raise ValueError("invalid network: " + "; ".join(problems))


def total_connection(network: Network, i: int) -> float:
    """Total incoming connection strength of individual ``i`` (0-based)."""
    if not 0 <= i < network.n:
        raise IndexError(f"individual index {i} out of range for n={network.n}")
    return float(network.weights[i].sum())


def total_connections(network: Network) -> np.ndarray:
    """Row sums for every individual, shape (n,)."""
    return network.weights.sum(axis=1)


def generate_network(config: GeneratorConfig) -> Network:
    """Draw a random weighted directed network.

    Construction: every off-diagonal entry is uniform on [0, 1); entries
    below ``sparsity_threshold`` are set to zero; when ``multiplier_max > 0``
    each row is then scaled by its own uniform draw from
    [0, multiplier_max].  The diagonal is exactly zero.  Deterministic for
    a given ``config.seed``.
    """
    rng = np.random.default_rng(config.seed)
    n = config.n
    w = rng.uniform(0.0, 1.0, size=(n, n))
    w[w < config.sparsity_threshold] = 0.0
    if config.multiplier_max > 0:
        # one draw per row: heterogeneous overall connectedness
        row_scale = rng.uniform(0.0, config.multiplier_max, size=n)
        w *= row_scale[:, None]
    np.fill_diagonal(w, 0.0)
    return Network(w, label=f"generated(n={n}, seed={config.seed})")


def _parse_float(text: str, line_no: int, path: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise NetworkFormatError(
            f"{path}, line {line_no}: {text!r} is not a number"
        ) from None


def load_network_csv(path: str, header: bool = False, label: str = "") -> Network:
    """Read a square comma-separated weight matrix.

    Parameters
    ----------
    path : str
        CSV file, one row per line.  Blank lines are ignored.
    header : bool
        Skip a single leading header row.
    label : str
        Label for the resulting network; defaults to the file path.

    Raises
    ------
    NetworkFormatError
        Naming the offending line for ragged rows, non-numeric cells, or a
        non-square result.
    """
    rows: list[list[float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for line_no, row in enumerate(reader, start=1):
            if header and line_no == 1:
                continue
            cells = [c.strip() for c in row]
            if not any(cells):
                continue
            values = []
            for c in cells:
                if c == "":
                    raise NetworkFormatError(
                        f"{path}, line {line_no}: empty cell in matrix row"
                    )
                values.append(_parse_float(c, line_no, path))
            if rows and len(values) != len(rows[0]):
                raise NetworkFormatError(
                    f"{path}, line {line_no}: row has {len(values)} entries, "
                    f"expected {len(rows[0])}"
                )
            rows.append(values)
    if not rows:
        raise NetworkFormatError(f"{path}: no data rows")
    if len(rows) != len(rows[0]):
        raise NetworkFormatError(
            f"{path}: matrix is {len(rows)}x{len(rows[0])}, expected square"
        )
    return Network(np.array(rows, dtype=float), label=label or path)


def write_network_csv(network: Network, path: str) -> None:
    """Write the weight matrix as plain CSV (no header)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in network.weights:
            writer.writerow([repr(float(v)) for v in row])
