"""Kernel two-sample statistics and baseline dissimilarities.

The RBF kernel is ``k(x, y) = exp(-gamma * ||x - y||**2)``. Squared
distances come from :func:`scipy.spatial.distance.cdist`, which is exact
for identical rows, so every kernel diagonal is exactly 1.

All two-sample functions are symmetric to the bit: arguments are put in a
canonical order before any floating point reduction happens.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from ._validation import check_1d, check_sample_rows
from .data import Sample
from .exceptions import ConfigError, DataError

GAMMA_MODES = ("fixed", "unit_variance_default", "median_heuristic")

#: Rows per block in blocked kernel sums; bounds memory at BLOCK * n floats.
BLOCK = 512

#: Pooled subsample size for the median heuristic.
MEDIAN_SUBSAMPLE = 1000


@dataclass(frozen=True)
class KernelConfig:
    """RBF bandwidth configuration.

    ``gamma`` is the resolved bandwidth. With ``unit_variance_default`` it is
    1/2, i.e. ``1 / (2 sigma**2)`` for standardized data.
    """

    gamma: float = 0.5
    gamma_mode: str = "unit_variance_default"

    def __post_init__(self):
        if self.gamma_mode not in GAMMA_MODES:
            raise ConfigError(f"gamma_mode must be one of {GAMMA_MODES}, got {self.gamma_mode!r}")
        g = float(self.gamma)
        if not (math.isfinite(g) and g > 0):
            raise ConfigError(f"gamma must be positive and finite, got {self.gamma!r}")
        object.__setattr__(self, "gamma", g)

    @classmethod
    def resolve(cls, mode="unit_variance_default", gamma=None, X=None, seed=0):
        """Build a config, computing gamma from ``X`` for the median heuristic."""
        if mode == "fixed":
            if gamma is None:
                raise ConfigError("gamma_mode 'fixed' needs an explicit gamma")
            return cls(gamma, mode)
        if mode == "unit_variance_default":
            return cls(0.5, mode)
        if mode == "median_heuristic":
            if X is None:
                raise ConfigError("median heuristic needs data")
            return cls(median_heuristic_gamma(X, seed), mode)
        raise ConfigError(f"gamma_mode must be one of {GAMMA_MODES}, got {mode!r}")


@dataclass(frozen=True)
class TwoSampleResult:
    """Outcome of an MMD comparison.

    ``statistic`` is the clamped distance ``sqrt(max(raw_statistic, 0))``;
    ``raw_statistic`` is the unbiased squared MMD and may be negative.
    """

    statistic: float
    raw_statistic: float
    p_value: float = None
    n: int = 0
    m: int = 0


def median_heuristic_gamma(X, seed=0, max_rows=MEDIAN_SUBSAMPLE):
    """``1 / (2 * median**2)`` of pairwise Euclidean distances of a subsample."""
    X = check_sample_rows(X, 2, name="X")
    if X.shape[0] > max_rows:
        rng = np.random.default_rng(seed)
        X = X[np.sort(rng.choice(X.shape[0], size=max_rows, replace=False))]
    med = float(np.median(pdist(X)))
    if not med > 0:
        raise DataError("median pairwise distance is 0; median heuristic undefined")
    return 1.0 / (2.0 * med * med)


def _rows(s):
    return s.rows if isinstance(s, Sample) else np.asarray(s, dtype=np.float64)


def rbf_kernel(x, y, config=KernelConfig()):
    """RBF kernel between two vectors."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x.shape != y.shape or x.ndim != 1:
        raise DataError(f"dimension mismatch: {x.shape} vs {y.shape}")
    d = x - y
    return math.exp(-config.gamma * float(d @ d))


def kernel_matrix(x, y, gamma):
    return np.exp(-gamma * cdist(x, y, "sqeuclidean"))


def within_term(x, gamma):
    """``2 / (n (n-1)) * sum_{i<j} k(x_i, x_j)``, summed block by block."""
    n = x.shape[0]
    total = 0.0
    for s in range(0, n, BLOCK):
        e = min(s + BLOCK, n)
        k = kernel_matrix(x[s:e], x[s:], gamma)
        # drop the diagonal and the lower triangle of the leading square
        head = k[:, : e - s]
        total += float(k.sum()) - float(np.tril(head).sum())
    return 2.0 * total / (n * (n - 1))


def cross_term(x, y, gamma):
    """``2 / (n m) * sum_{i,j} k(x_i, y_j)``; order-sensitive, see :func:`canonical_pair`."""
    n, m = x.shape[0], y.shape[0]
    total = 0.0
    for s in range(0, n, BLOCK):
        total += float(kernel_matrix(x[s:s + BLOCK], y, gamma).sum())
    return 2.0 * total / (n * m)


def _sort_key(x):
    return (x.shape[0], x.tobytes())


def canonical_pair(x, y):
    """Return ``(x, y)`` or ``(y, x)`` so that the order does not depend on the call."""
    return (y, x) if _sort_key(y) < _sort_key(x) else (x, y)


def combine_terms(within_x, within_y, cross):
    # commutative in the within terms, so the result is order-free
    return (within_x + within_y) - cross


def _check_pair(p, q):
    x = check_sample_rows(_rows(p), 2, name="first sample")
    y = check_sample_rows(_rows(q), 2, name="second sample")
    if x.shape[1] != y.shape[1]:
        raise DataError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]} features")
    return x, y


def mmd2_unbiased(p, q, config=KernelConfig()):
    """Unbiased estimate of the squared MMD between two samples.

    Parameters
    ----------
    p, q : Sample or array-like of shape (n, D) and (m, D)
        Both need at least 2 rows.
    config : KernelConfig

    Returns
    -------
    float
        Within-``p`` mean plus within-``q`` mean minus twice the cross mean.
        Can be negative on finite samples.
    """
    x, y = _check_pair(p, q)
    a, b = canonical_pair(x, y)
    g = config.gamma
    return combine_terms(within_term(a, g), within_term(b, g), cross_term(a, b, g))


def clamp_distance(raw):
    return math.sqrt(raw) if raw > 0 else 0.0


def mmd_distance(p, q, config=KernelConfig()):
    """MMD distance; a negative squared estimate is reported as distance 0."""
    x, y = _check_pair(p, q)
    raw = mmd2_unbiased(x, y, config)
    return TwoSampleResult(clamp_distance(raw), raw, None, x.shape[0], y.shape[0])


def _mmd2_from_gram(K, idx_x, idx_y):
    n, m = idx_x.size, idx_y.size
    kxx = K[np.ix_(idx_x, idx_x)]
    kyy = K[np.ix_(idx_y, idx_y)]
    kxy = K[np.ix_(idx_x, idx_y)]
    wx = (kxx.sum() - np.trace(kxx)) / (n * (n - 1))
    wy = (kyy.sum() - np.trace(kyy)) / (m * (m - 1))
    return (wx + wy) - 2.0 * kxy.sum() / (n * m)


def permutation_null(p, q, config=KernelConfig(), b=99, seed=0):
    """Observed squared MMD and ``b`` values under random relabeling of the pool.

    Every statistic here is computed from one pooled Gram matrix, so the
    observed value and the resamples share a summation path.
    """
    x, y = _check_pair(p, q)
    if isinstance(b, bool) or int(b) != b or b < 1:
        raise ConfigError(f"number of resamples must be a positive integer, got {b!r}")
    a, c = canonical_pair(x, y)
    n, m = a.shape[0], c.shape[0]
    pooled = np.vstack([a, c])
    K = kernel_matrix(pooled, pooled, config.gamma)
    ids = np.arange(n + m)
    observed = _mmd2_from_gram(K, ids[:n], ids[n:])
    rng = np.random.default_rng(seed)
    null = np.empty(int(b))
    for i in range(int(b)):
        perm = rng.permutation(n + m)
        null[i] = _mmd2_from_gram(K, perm[:n], perm[n:])
    return float(observed), null


def bootstrap_pvalue(p, q, config=KernelConfig(), b=99, seed=0):
    """Permutation p-value ``(1 + #{null >= observed}) / (b + 1)``."""
    observed, null = permutation_null(p, q, config, b, seed)
    return (1 + int(np.count_nonzero(null >= observed))) / (null.size + 1)


def mmd_test(p, q, config=KernelConfig(), b=99, seed=0):
    """Distance and permutation p-value in one :class:`TwoSampleResult`."""
    res = mmd_distance(p, q, config)
    pval = bootstrap_pvalue(p, q, config, b, seed)
    return TwoSampleResult(res.statistic, res.raw_statistic, pval, res.n, res.m)


def overlap_dissimilarity(a, b):
    """``1 - |a & b| / min(|a|, |b|)``."""
    a, b = set(a), set(b)
    if not a or not b:
        raise DataError("overlap dissimilarity needs two non-empty sets")
    return 1.0 - len(a & b) / min(len(a), len(b))


def jaccard_distance(a, b):
    """``1 - |a & b| / |a | b|``."""
    a, b = set(a), set(b)
    union = a | b
    if not union:
        raise DataError("Jaccard distance of two empty sets is undefined")
    return 1.0 - len(a & b) / len(union)


def _ecdfs(x, y):
    x, y = np.sort(x), np.sort(y)
    grid = np.unique(np.concatenate([x, y]))
    fx = np.searchsorted(x, grid, side="right") / x.size
    fy = np.searchsorted(y, grid, side="right") / y.size
    return grid, fx, fy


def ks_statistic(p, q):
    """Scaled two-sample Kolmogorov-Smirnov statistic ``sqrt(nm/(n+m)) * sup|F_p - F_q|``."""
    x, y = check_1d(p, "first sample"), check_1d(q, "second sample")
    if _sort_key(y) < _sort_key(x):
        x, y = y, x
    _, fx, fy = _ecdfs(x, y)
    n, m = x.size, y.size
    return math.sqrt(n * m / (n + m)) * float(np.max(np.abs(fx - fy)))


def ad_statistic(p, q):
    """Two-sample Anderson-Darling statistic (Pettitt form).

    The integral over the pooled empirical distribution ``H`` becomes a sum
    over the distinct pooled values ``z_j`` with weights ``l_j / N`` (``l_j``
    the multiplicity), using right-continuous empirical CDFs and leaving out
    the largest value, where ``H = 1``::

        nm/N * sum_j (l_j/N) * (F(z_j) - G(z_j))**2 / (H(z_j) (1 - H(z_j)))

    Without ties this is ``1/(nm) * sum_{i<N} (N M_i - n i)**2 / (i (N - i))``.
    """
    x, y = check_1d(p, "first sample"), check_1d(q, "second sample")
    if _sort_key(y) < _sort_key(x):
        x, y = y, x
    n, m = x.size, y.size
    N = n + m
    pooled = np.sort(np.concatenate([x, y]))
    grid, fx, fy = _ecdfs(x, y)
    if grid.size < 2:
        raise DataError("degenerate pooled sample: all values identical")
    mult = np.diff(np.searchsorted(pooled, grid, side="right"), prepend=0)
    h = np.cumsum(mult) / N
    grid, fx, fy, mult, h = grid[:-1], fx[:-1], fy[:-1], mult[:-1], h[:-1]
    terms = (mult / N) * (fx - fy) ** 2 / (h * (1.0 - h))
    return n * m / N * float(terms.sum())
