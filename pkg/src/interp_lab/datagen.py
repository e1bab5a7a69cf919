"""Seeded synthetic data: Gaussian mixtures, multinomial-logit samples,
bi-level covariance spectra and neural-collapse (simplex ETF) features.

Labels are 0-based throughout (class ``c`` in ``range(k)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimMismatch, DimTooSmall, InvalidRegime
from .rng import Stream


def _stream(seed) -> Stream:
    if isinstance(seed, Stream):
        return seed
    if isinstance(seed, (tuple, list)):
        return Stream(*seed)
    return Stream(int(seed))


def one_hot(y, k: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64)
    Y = np.zeros((k, y.size))
    Y[y, np.arange(y.size)] = 1.0
    return Y


@dataclass
class Dataset:
    X: np.ndarray  # p x n
    y: np.ndarray  # n labels in range(k)
    k: int
    source: str = "custom"
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or self.X.shape[1] != self.y.size:
            raise DimMismatch(f"X {self.X.shape} does not match {self.y.size} labels")
        if self.y.size and (self.y.min() < 0 or self.y.max() >= self.k):
            raise ValueError(f"labels must lie in range({self.k})")

    @property
    def p(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def Y(self) -> np.ndarray:
        return one_hot(self.y, self.k)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.k)


@dataclass
class GmmSpec:
    """Isotropic Gaussian mixture ``x = mu_y + N(0, I_p)``."""

    means: np.ndarray  # p x k
    priors: np.ndarray | None = None

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64)
        if self.means.ndim != 2:
            raise DimMismatch("mean matrix must be p x k")
        k = self.means.shape[1]
        if self.priors is None:
            self.priors = np.full(k, 1.0 / k)
        self.priors = np.asarray(self.priors, dtype=np.float64)
        if self.priors.shape != (k,):
            raise DimMismatch(f"need {k} priors, got {self.priors.shape}")
        if np.any(self.priors < 0) or abs(self.priors.sum() - 1.0) > 1e-12:
            raise ValueError("priors must be non-negative and sum to 1")

    @property
    def p(self) -> int:
        return self.means.shape[0]

    @property
    def k(self) -> int:
        return self.means.shape[1]

    @property
    def mu_norm(self) -> float:
        return float(np.linalg.norm(self.means, axis=0).max())

    def is_equal_energy(self, tol=1e-10) -> bool:
        norms = np.linalg.norm(self.means, axis=0)
        return bool(np.ptp(norms) <= tol * max(1.0, norms.max()))

    def is_orthogonal(self, tol=1e-10) -> bool:
        G = self.means.T @ self.means
        off = G - np.diag(np.diag(G))
        return bool(np.abs(off).max(initial=0.0) <= tol * max(1.0, np.abs(G).max()))


@dataclass
class MlmSpec:
    """Multinomial logit model: ``x ~ N(0, diag(spectrum))``, softmax labels."""

    means: np.ndarray  # p x k
    spectrum: np.ndarray | None = None

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64)
        if self.means.ndim != 2:
            raise DimMismatch("mean matrix must be p x k")
        if self.spectrum is None:
            self.spectrum = np.ones(self.means.shape[0])
        self.spectrum = np.asarray(self.spectrum, dtype=np.float64)
        if self.spectrum.shape != (self.means.shape[0],):
            raise DimMismatch("spectrum length must equal p")
        if np.any(self.spectrum <= 0):
            raise ValueError("covariance spectrum must be strictly positive")

    @property
    def p(self) -> int:
        return self.means.shape[0]

    @property
    def k(self) -> int:
        return self.means.shape[1]


@dataclass(frozen=True)
class BilevelParams:
    """Bi-level ensemble ``p = n^m``, ``s = n^r`` spikes, ``a = n^-q``."""

    n: int
    m: float
    q: float
    r: float

    def __post_init__(self):
        if not self.m > 1:
            raise InvalidRegime(f"need m > 1, got m={self.m}")
        if not 0 <= self.r < 1:
            raise InvalidRegime(f"need 0 <= r < 1, got r={self.r}")
        if not 0 < self.q < self.m - self.r:
            raise InvalidRegime(f"need 0 < q < m - r, got q={self.q}")
        if not self.s < self.n < self.p:
            raise InvalidRegime(f"need s < n < p, got s={self.s}, n={self.n}, p={self.p}")

    @property
    def p(self) -> int:
        return int(round(self.n**self.m))

    @property
    def s(self) -> int:
        return int(round(self.n**self.r))

    @property
    def a(self) -> float:
        return float(self.n ** (-self.q))

    @property
    def lambda_high(self) -> float:
        return self.a * self.p / self.s

    @property
    def lambda_low(self) -> float:
        return (1.0 - self.a) * self.p / (self.p - self.s)


def orthogonal_means(k: int, p: int, energy: float) -> np.ndarray:
    """``energy * [e_1, ..., e_k]`` as a p x k matrix."""
    if p < k:
        raise DimTooSmall(f"need p >= k, got p={p}, k={k}")
    if energy <= 0:
        raise ValueError("energy must be positive")
    M = np.zeros((p, k))
    M[np.arange(k), np.arange(k)] = energy
    return M


def balanced_labels(n: int, priors) -> np.ndarray:
    """Deterministic class-sorted labels with counts from largest remainders."""
    priors = np.asarray(priors, dtype=np.float64)
    raw = n * priors
    counts = np.floor(raw).astype(np.int64)
    short = n - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:short]] += 1
    return np.repeat(np.arange(priors.size), counts)


def sample_gmm(spec: GmmSpec, n: int, seed, balanced: bool = False) -> Dataset:
    """Draw ``n`` samples; labels i.i.d. from the priors unless ``balanced``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rs = _stream(seed)
    if balanced:
        y = balanced_labels(n, spec.priors)
    else:
        y = rs.categorical(np.cumsum(spec.priors), n)
    noise = rs.normal((n, spec.p)).T
    X = spec.means[:, y] + noise
    return Dataset(X, y, spec.k, source="gmm", seed=_seed_of(seed))


def sample_mlm(spec: MlmSpec, n: int, seed) -> Dataset:
    if n < 1:
        raise ValueError("n must be >= 1")
    rs = _stream(seed)
    X = (rs.normal((n, spec.p)) * np.sqrt(spec.spectrum)).T
    y = rs.categorical(softmax_cumulative(spec.means.T @ X))
    return Dataset(X, y, spec.k, source="mlm", seed=_seed_of(seed))


def softmax_cumulative(logits) -> np.ndarray:
    """Per-sample cumulative softmax probabilities, shape (n, k)."""
    z = logits - logits.max(axis=0, keepdims=True)
    e = np.exp(z)
    prob = e / e.sum(axis=0, keepdims=True)
    cum = np.cumsum(prob.T, axis=1)
    cum[:, -1] = 1.0
    return cum


def neural_collapse_features(k: int, m: int, p: int, alpha: float = 1.0) -> Dataset:
    """Collapsed features: ``m`` copies of each simplex-ETF class mean.

    Samples are ordered class by class (``X = M kron 1_m^T``).
    """
    if p < k:
        raise DimTooSmall(f"need p >= k, got p={p}, k={k}")
    if alpha == 0:
        raise ValueError("alpha must be non-zero")
    n = k * m
    centering = np.eye(k) - np.full((k, k), 1.0 / k)
    M = np.zeros((p, k))
    M[:k, :] = alpha * math.sqrt(k / n) * centering
    X = np.repeat(M, m, axis=1)
    y = np.repeat(np.arange(k), m)
    return Dataset(X, y, k, source="nc", meta={"means": M, "alpha": alpha, "m": m})


def bilevel_spectrum(params: BilevelParams) -> np.ndarray:
    lam = np.full(params.p, params.lambda_low)
    lam[: params.s] = params.lambda_high
    return lam


def bilevel_mlm_spec(k: int, params: BilevelParams) -> MlmSpec:
    """Orthogonal unit-signal means on the first ``k`` spiked coordinates."""
    if params.s < k:
        raise InvalidRegime(f"need s >= k spiked directions, got s={params.s}, k={k}")
    means = orthogonal_means(k, params.p, 1.0 / math.sqrt(params.lambda_high))
    return MlmSpec(means, bilevel_spectrum(params))


def isotropic_mlm_spec(k: int, p: int, energy: float) -> MlmSpec:
    return MlmSpec(orthogonal_means(k, p, energy), np.ones(p))


def _seed_of(seed):
    if isinstance(seed, Stream):
        return seed.parts[0] if len(seed.parts) == 1 else None
    if isinstance(seed, (tuple, list)):
        return None
    return int(seed)


def write_dataset_csv(path, ds: Dataset) -> None:
    """Header comment ``# p,n,k,seed`` then a value line, then one row per
    sample: label followed by the p features (17 significant digits)."""
    path = Path(path)
    seed = "" if ds.seed is None else str(ds.seed)
    lines = ["# p,n,k,seed", f"# {ds.p},{ds.n},{ds.k},{seed}"]
    for i in range(ds.n):
        vals = ",".join(f"{v:.17g}" for v in ds.X[:, i])
        lines.append(f"{ds.y[i]},{vals}")
    path.write_text("\n".join(lines) + "\n")


def read_dataset_csv(path) -> Dataset:
    text = Path(path).read_text().splitlines()
    header = [ln for ln in text[:2] if ln.startswith("#")]
    if len(header) < 2:
        raise ValueError(f"{path}: missing '# p,n,k,seed' header")
    p, n, k, seed = (header[1][1:].strip().split(",") + [""])[:4]
    p, n, k = int(p), int(n), int(k)
    rows = [ln for ln in text[2:] if ln.strip()]
    if len(rows) != n:
        raise DimMismatch(f"{path}: header says n={n}, found {len(rows)} rows")
    data = np.array([[float(v) for v in ln.split(",")] for ln in rows]).reshape(n, p + 1)
    return Dataset(
        data[:, 1:].T.copy(),
        data[:, 0].astype(np.int64),
        k,
        source="csv",
        seed=int(seed) if seed else None,
    )
