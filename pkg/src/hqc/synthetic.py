"""Synthetic mixed-type datasets with known group structure."""

import csv

import numpy as np


def planted_groups(n_per_group=200, n_features=4, shift=4.0, seed=0):
    """Groups A and B from N(0, I), group C from N(shift, I)."""
    rng = np.random.default_rng(seed)
    X = np.vstack([
        rng.standard_normal((n_per_group, n_features)),
        rng.standard_normal((n_per_group, n_features)),
        rng.standard_normal((n_per_group, n_features)) + shift,
    ])
    y = np.repeat(np.array(["A", "B", "C"], dtype=object), n_per_group)
    return X, y


def nonmonotone_groups(n_per_group=40, spread=0.1, seed=0):
    """Three tight 2-D clusters whose pooled pair A+B is closer to C than A is to B.

    A sits at (0, 0), B at (3, 0) and C at (1.5, 8): A and B are the closest
    pair, yet the MMD between A+B and C is smaller than between A and B.
    """
    rng = np.random.default_rng(seed)
    centers = np.array([[0.0, 0.0], [3.0, 0.0], [1.5, 8.0]])
    X = np.vstack([c + spread * rng.standard_normal((n_per_group, 2)) for c in centers])
    y = np.repeat(np.array(["A", "B", "C"], dtype=object), n_per_group)
    return X, y


def many_groups(n_groups=30, n_rows=11500, n_features=14, seed=0, spread=0.6):
    """Rows split unevenly over ``n_groups`` values with random group means.

    Group sizes follow a Dirichlet draw with a floor of 40 rows so that
    every group supports a stable MMD estimate.
    """
    rng = np.random.default_rng(seed)
    floor = 40
    share = rng.dirichlet(np.full(n_groups, 3.0))
    sizes = floor + np.floor(share * (n_rows - floor * n_groups)).astype(int)
    sizes[0] += n_rows - sizes.sum()
    means = spread * rng.standard_normal((n_groups, n_features))
    X = np.vstack([m + rng.standard_normal((s, n_features)) for m, s in zip(means, sizes)])
    y = np.repeat(np.array([f"value_{i:02d}" for i in range(n_groups)], dtype=object), sizes)
    perm = rng.permutation(n_rows)
    return X[perm], y[perm]


def write_csv(path, X, y, label_name="label", feature_names=None):
    X = np.asarray(X, dtype=np.float64)
    if feature_names is None:
        feature_names = [f"x{j}" for j in range(X.shape[1])]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([label_name, *feature_names])
        for label, row in zip(y, X):
            w.writerow([label, *(repr(float(v)) for v in row)])
