"""Problem generators, gradient oracles, and reference optima.

Two problem classes are supported: synthetic strongly convex quadratics
``f_i(x) = (1/2) x^T Q_i x + v_i^T x`` and l2-regularized binary logistic
regression over LIBSVM-format data. Oracles expose per-node gradients plus a
max per-node Lipschitz constant and a global strong-convexity constant.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit


class NonConvergenceError(RuntimeError):
    """Raised when the reference gradient-descent solve exhausts its cap."""


class LibsvmParseError(ValueError):
    """Malformed LIBSVM input; the message names the offending line."""


# ---------------------------------------------------------------------------
# Oracles


class GradientOracle:
    """Per-node evaluation contract.

    Subclasses provide ``local_gradient``/``local_value`` along with
    ``lipschitz`` (max per-node gradient Lipschitz constant) and
    ``strong_convexity`` (for the global average objective).
    """

    n: int
    d: int
    lipschitz: float
    strong_convexity: float

    def local_gradient(self, i: int, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def local_value(self, i: int, x: np.ndarray) -> float:
        raise NotImplementedError

    def stacked_gradient(self, xs: np.ndarray) -> np.ndarray:
        """Gradients of all nodes at their own rows of ``xs`` (n x d)."""
        return np.stack([self.local_gradient(i, xs[i]) for i in range(self.n)])

    def global_gradient(self, x: np.ndarray) -> np.ndarray:
        return np.mean([self.local_gradient(i, x) for i in range(self.n)], axis=0)

    def global_value(self, x: np.ndarray) -> float:
        return float(np.mean([self.local_value(i, x) for i in range(self.n)]))


# ---------------------------------------------------------------------------
# Quadratic problems


@dataclass(frozen=True)
class QuadraticProblem:
    """Per-node quadratics with symmetric positive definite curvature."""

    qs: np.ndarray  # (n, d, d)
    vs: np.ndarray  # (n, d)
    kappa_target: float
    kappa_achieved: float

    @property
    def n(self) -> int:
        return self.qs.shape[0]

    @property
    def d(self) -> int:
        return self.qs.shape[1]


def generate_quadratic(
    n: int, d: int, kappa_target: float, seed: int, scale: float = 1.0
) -> QuadraticProblem:
    """Sample a quadratic instance whose global condition number hits the target.

    Curvatures are diagonal with log-uniform spectra on
    ``[scale, scale * kappa_target]``. The first and last coordinates are
    pinned to the interval endpoints at every node (for d >= 2), which makes
    the averaged curvature attain the extremes exactly, so
    ``kappa_achieved == kappa_target``. Linear terms are standard normal.
    Deterministic in ``seed``.
    """
    if n < 1 or d < 1:
        raise ValueError(f"n and d must be positive, got n={n}, d={d}")
    if kappa_target < 1.0:
        raise ValueError(f"kappa_target must be >= 1, got {kappa_target}")
    if scale <= 0.0:
        raise ValueError(f"scale must be positive, got {scale}")
    rng = np.random.default_rng(seed)
    exponents = rng.uniform(0.0, np.log10(kappa_target), size=(n, d))
    diag = scale * 10.0**exponents
    if d >= 2:
        diag[:, 0] = scale
        diag[:, -1] = scale * kappa_target
    qs = np.zeros((n, d, d))
    idx = np.arange(d)
    qs[:, idx, idx] = diag
    vs = rng.standard_normal((n, d))
    mean_diag = diag.mean(axis=0)
    kappa_achieved = float(mean_diag.max() / mean_diag.min())
    return QuadraticProblem(
        qs=qs, vs=vs, kappa_target=float(kappa_target), kappa_achieved=kappa_achieved
    )


class QuadraticOracle(GradientOracle):
    def __init__(self, problem: QuadraticProblem):
        self.problem = problem
        self.n = problem.n
        self.d = problem.d
        per_node_eigs = np.linalg.eigvalsh(problem.qs)
        if np.any(per_node_eigs[:, 0] <= 0.0):
            raise ValueError("every per-node curvature must be positive definite")
        self.lipschitz = float(per_node_eigs[:, -1].max())
        mean_eigs = np.linalg.eigvalsh(problem.qs.mean(axis=0))
        self.strong_convexity = float(mean_eigs[0])

    def local_gradient(self, i: int, x: np.ndarray) -> np.ndarray:
        return self.problem.qs[i] @ x + self.problem.vs[i]

    def local_value(self, i: int, x: np.ndarray) -> float:
        return float(0.5 * x @ self.problem.qs[i] @ x + self.problem.vs[i] @ x)

    def stacked_gradient(self, xs: np.ndarray) -> np.ndarray:
        return np.einsum("nij,nj->ni", self.problem.qs, xs) + self.problem.vs


def quadratic_optimum(problem: QuadraticProblem) -> np.ndarray:
    """Minimizer of the averaged quadratic via a direct linear solve."""
    mean_q = problem.qs.mean(axis=0)
    mean_v = problem.vs.mean(axis=0)
    try:
        x_star = np.linalg.solve(mean_q, -mean_v)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - excluded by SPD invariant
        raise ValueError("averaged curvature matrix is singular") from exc
    return x_star


# ---------------------------------------------------------------------------
# LIBSVM ingestion and logistic regression


@dataclass(frozen=True)
class Dataset:
    """Dense feature matrix with +-1 labels, rows in file order."""

    features: np.ndarray  # (size, d)
    labels: np.ndarray  # (size,) in {-1, +1}

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class DatasetPartition:
    """Contiguous per-node row ranges covering a dataset."""

    ranges: tuple[tuple[int, int], ...]

    @property
    def n(self) -> int:
        return len(self.ranges)

    def sizes(self) -> list[int]:
        return [stop - start for start, stop in self.ranges]


_LABEL_MAP = {"+1": 1.0, "1": 1.0, "-1": -1.0, "0": -1.0}


def parse_libsvm(source, declared_dim: int | None = None) -> Dataset:
    """Parse LIBSVM text (`<label> <idx>:<val> ...`) into a dense Dataset.

    Labels must be one of ``+1``, ``1``, ``-1``, ``0`` (0 maps to -1).
    Feature indices are 1-based and strictly increasing per line. Blank lines
    are skipped; comments are not supported. ``declared_dim`` overrides the
    inferred dimension (max index seen) so datasets with absent top features
    keep their nominal width.
    """
    if isinstance(source, (str, Path)):
        with open(source, "rb") as handle:
            return parse_libsvm(handle, declared_dim)
    raw = source.read()
    if isinstance(raw, bytes):
        text = raw.decode("utf-8")
    else:
        text = raw

    labels: list[float] = []
    rows: list[list[tuple[int, float]]] = []
    max_index = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        tokens = line.split()
        label = _LABEL_MAP.get(tokens[0])
        if label is None:
            raise LibsvmParseError(f"line {lineno}: unparseable label {tokens[0]!r}")
        entries: list[tuple[int, float]] = []
        prev_index = 0
        for token in tokens[1:]:
            idx_text, sep, val_text = token.partition(":")
            if not sep:
                raise LibsvmParseError(f"line {lineno}: malformed token {token!r}")
            try:
                index = int(idx_text)
                value = float(val_text)
            except ValueError:
                raise LibsvmParseError(f"line {lineno}: malformed token {token!r}") from None
            if index < 1:
                raise LibsvmParseError(f"line {lineno}: feature index {index} < 1")
            if index <= prev_index:
                raise LibsvmParseError(
                    f"line {lineno}: feature index {index} not strictly increasing"
                )
            if declared_dim is not None and index > declared_dim:
                raise LibsvmParseError(
                    f"line {lineno}: feature index {index} exceeds declared dimension "
                    f"{declared_dim}"
                )
            prev_index = index
            entries.append((index, value))
        labels.append(label)
        rows.append(entries)
        if entries:
            max_index = max(max_index, entries[-1][0])

    d = declared_dim if declared_dim is not None else max_index
    features = np.zeros((len(rows), d))
    for r, entries in enumerate(rows):
        for index, value in entries:
            features[r, index - 1] = value
    return Dataset(features=features, labels=np.asarray(labels))


def partition(dataset: Dataset, n: int) -> DatasetPartition:
    """Split rows into n contiguous blocks whose sizes differ by at most one.

    The first ``size mod n`` nodes receive the larger block.
    """
    size = dataset.size
    if n < 1:
        raise ValueError(f"node count must be positive, got {n}")
    if n > size:
        raise ValueError(f"cannot partition {size} rows across {n} nodes")
    base, extra = divmod(size, n)
    ranges = []
    start = 0
    for i in range(n):
        stop = start + base + (1 if i < extra else 0)
        ranges.append((start, stop))
        start = stop
    return DatasetPartition(ranges=tuple(ranges))


@dataclass(frozen=True)
class LogisticProblem:
    """Per-node data blocks for l2-regularized binary logistic regression.

    Node i holds samples ``(A_i, b_i)`` and the local objective
    ``f_i(x) = (1/n_i) [sum_s log(1 + exp(-b_s a_s^T x))] + (1/n_i) ||x||^2``.
    """

    blocks: tuple[np.ndarray, ...]
    labels: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        for i, b in enumerate(self.labels):
            if not np.all(np.isin(b, (-1.0, 1.0))):
                raise ValueError(f"node {i} has labels outside {{-1, +1}}")

    @property
    def n(self) -> int:
        return len(self.blocks)

    @property
    def d(self) -> int:
        return self.blocks[0].shape[1]

    @property
    def sample_counts(self) -> list[int]:
        return [block.shape[0] for block in self.blocks]

    @classmethod
    def from_dataset(cls, dataset: Dataset, part: DatasetPartition) -> "LogisticProblem":
        total = sum(stop - start for start, stop in part.ranges)
        if total != dataset.size:
            raise ValueError("partition does not cover the dataset")
        blocks = tuple(dataset.features[start:stop] for start, stop in part.ranges)
        labels = tuple(dataset.labels[start:stop] for start, stop in part.ranges)
        return cls(blocks=blocks, labels=labels)


class LogisticOracle(GradientOracle):
    def __init__(self, problem: LogisticProblem):
        self.problem = problem
        self.n = problem.n
        self.d = problem.d
        counts = np.asarray(problem.sample_counts, dtype=float)
        lips = []
        for block, n_i in zip(problem.blocks, counts):
            gram_top = float(np.linalg.eigvalsh(block.T @ block)[-1])
            lips.append(gram_top / (4.0 * n_i) + 2.0 / n_i)
        self.lipschitz = float(max(lips))
        self.strong_convexity = float(np.mean(2.0 / counts))
        # Concatenated view for fast whole-dataset evaluations.
        self._all_features = np.vstack(problem.blocks)
        self._all_labels = np.concatenate(problem.labels)
        self._row_weights = np.concatenate(
            [np.full(int(n_i), 1.0 / (self.n * n_i)) for n_i in counts]
        )

    def local_gradient(self, i: int, x: np.ndarray) -> np.ndarray:
        block = self.problem.blocks[i]
        b = self.problem.labels[i]
        n_i = block.shape[0]
        sig = expit(-b * (block @ x))
        return (-(block.T @ (b * sig)) + 2.0 * x) / n_i

    def local_value(self, i: int, x: np.ndarray) -> float:
        block = self.problem.blocks[i]
        b = self.problem.labels[i]
        n_i = block.shape[0]
        losses = np.logaddexp(0.0, -b * (block @ x))
        return float((losses.sum() + x @ x) / n_i)

    def global_gradient(self, x: np.ndarray) -> np.ndarray:
        b = self._all_labels
        sig = expit(-b * (self._all_features @ x))
        reg = self.strong_convexity * x
        return -(self._all_features.T @ (self._row_weights * b * sig)) + reg


def logistic_oracle(problem: LogisticProblem) -> LogisticOracle:
    """Gradient oracle for a logistic problem (numerically stable for any margin)."""
    return LogisticOracle(problem)


def quadratic_oracle(problem: QuadraticProblem) -> QuadraticOracle:
    """Gradient oracle for a quadratic problem."""
    return QuadraticOracle(problem)


# ---------------------------------------------------------------------------
# Reference optimum and persistence


def centralized_optimum(
    oracle: GradientOracle, tol: float = 1e-12, max_iterations: int = 10**8
) -> np.ndarray:
    """Gradient descent with step 1/L from zero until the gradient norm hits tol."""
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    x = np.zeros(oracle.d)
    step = 1.0 / oracle.lipschitz
    for _ in range(max_iterations):
        grad = oracle.global_gradient(x)
        if float(np.linalg.norm(grad)) <= tol:
            return x
        x = x - step * grad
    raise NonConvergenceError(
        f"gradient norm above {tol} after {max_iterations} iterations"
    )


def save_vector(path, x: np.ndarray) -> None:
    """Persist a vector as one decimal value per line, 17 significant digits."""
    lines = "".join(f"{float(v):.17g}\n" for v in np.asarray(x, dtype=float))
    Path(path).write_text(lines)


def load_vector(path) -> np.ndarray:
    return np.array([float(line) for line in Path(path).read_text().split()])
