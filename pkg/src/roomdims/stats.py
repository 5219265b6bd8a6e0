"""Kendall tau-b with exact permutation p-values, and the dimension-by-feature matrix."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import norm

EXACT_MAX_N = 10


class DegenerateRanksError(ValueError):
    pass


@dataclass(frozen=True)
class CorrelationCell:
    tau_b: float
    p_value: float
    n: int


def _pair_signs(v: np.ndarray) -> np.ndarray:
    i, j = np.triu_indices(len(v), 1)
    return np.sign(v[j] - v[i]).astype(np.int64)


def _tie_sizes(v: np.ndarray) -> tuple[int, ...]:
    _, counts = np.unique(v, return_counts=True)
    return tuple(sorted(int(c) for c in counts if c > 1))


def kendall_counts(x, y) -> tuple[int, int, int, int]:
    """Concordant, discordant, x-only-tied and y-only-tied pair counts."""
    sx = _pair_signs(np.asarray(x, dtype=float))
    sy = _pair_signs(np.asarray(y, dtype=float))
    prod = sx * sy
    concordant = int(np.sum(prod > 0))
    discordant = int(np.sum(prod < 0))
    tx = int(np.sum((sx == 0) & (sy != 0)))
    ty = int(np.sum((sy == 0) & (sx != 0)))
    return concordant, discordant, tx, ty


def _rank_pattern(v: np.ndarray) -> tuple[int, ...]:
    """Sorted dense ranks: identifies the order structure of ``v`` up to re-ordering."""
    return tuple(int(r) for r in np.sort(np.unique(v, return_inverse=True)[1]))


@lru_cache(maxsize=64)
def _exact_null(x_pattern: tuple[int, ...], y_pattern: tuple[int, ...]) -> np.ndarray:
    """Sorted |S| over all n! pairings of two rank patterns."""
    x = np.array(x_pattern, dtype=float)
    y = np.array(y_pattern, dtype=float)
    n = len(x)
    sx = _pair_signs(x)
    i, j = np.triu_indices(n, 1)
    out = []
    perms = itertools.permutations(range(n))
    while True:
        chunk = np.array(list(itertools.islice(perms, 40320)), dtype=np.int64)
        if chunk.size == 0:
            break
        yp = y[chunk]
        sy = np.sign(yp[:, j] - yp[:, i]).astype(np.int64)
        out.append(np.abs(sy @ sx))
    return np.sort(np.concatenate(out))


def _normal_p(s: int, x: np.ndarray, y: np.ndarray) -> float:
    n = len(x)
    tx = np.array(_tie_sizes(x), dtype=float)
    ty = np.array(_tie_sizes(y), dtype=float)
    v0 = n * (n - 1) * (2 * n + 5)
    vt = np.sum(tx * (tx - 1) * (2 * tx + 5))
    vu = np.sum(ty * (ty - 1) * (2 * ty + 5))
    v1 = np.sum(tx * (tx - 1)) * np.sum(ty * (ty - 1)) / (2.0 * n * (n - 1))
    v2 = (np.sum(tx * (tx - 1) * (tx - 2)) * np.sum(ty * (ty - 1) * (ty - 2))
          / (9.0 * n * (n - 1) * (n - 2)))
    var = (v0 - vt - vu) / 18.0 + v1 + v2
    if var <= 0:
        return 1.0
    return float(min(1.0, 2.0 * norm.sf(abs(s) / math.sqrt(var))))


def kendall_tau_b(x, y, exact: bool | None = None) -> CorrelationCell:
    """Kendall's tau-b with a two-sided p-value.

    For ``n <= 10`` (or ``exact=True``) the p-value is the share of all
    ``n!`` re-orderings of ``y`` whose ``|S|`` reaches the observed one;
    otherwise a tie-corrected normal approximation is used.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if len(y) != n:
        raise ValueError("x and y differ in length")
    if n < 3:
        raise ValueError("need at least 3 observations")
    c, d, tx, ty = kendall_counts(x, y)
    denom = math.sqrt((c + d + tx) * (c + d + ty))
    if denom == 0 or np.ptp(x) == 0 or np.ptp(y) == 0:
        raise DegenerateRanksError("degenerate ranks")
    s = c - d
    tau = max(-1.0, min(1.0, s / denom))
    if exact is None:
        exact = n <= EXACT_MAX_N
    if exact:
        null = _exact_null(_rank_pattern(x), _rank_pattern(y))
        p = (len(null) - np.searchsorted(null, abs(s), side="left")) / len(null)
    else:
        p = _normal_p(s, x, y)
    return CorrelationCell(float(tau), float(p), n)


def correlation_matrix(embedding, features) -> list[list[CorrelationCell | None]]:
    """Tau-b of every (MDS dimension, feature) pair.

    ``features`` is a :class:`~roomdims.features.FeatureTable`; its labels
    must match the embedding items in the same order. Feature columns with
    all values tied yield ``None`` cells.
    """
    from .features import FEATURE_COLUMNS

    if list(embedding.items) != list(features.labels):
        raise ValueError(
            f"label mismatch between embedding {list(embedding.items)} "
            f"and features {list(features.labels)}"
        )
    rows = []
    for k in range(embedding.coords.shape[1]):
        row = []
        for name in FEATURE_COLUMNS:
            try:
                row.append(kendall_tau_b(embedding.coords[:, k], features.column(name)))
            except DegenerateRanksError:
                row.append(None)
        rows.append(row)
    return rows


def write_correlation_csv(matrix, path, stress1: float | None = None, fit: str | None = None) -> None:
    """Wide CSV: one row per dimension, ``<feature>_tau_b`` / ``<feature>_p`` columns."""
    from .features import FEATURE_COLUMNS

    header = ["dimension"]
    for name in FEATURE_COLUMNS:
        header += [f"{name}_tau_b", f"{name}_p"]
    header += ["n", "solution_stress1", "fit"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k, row in enumerate(matrix):
            line = [k + 1]
            n = ""
            for cell in row:
                if cell is None:
                    line += ["", ""]
                else:
                    line += [f"{cell.tau_b:.6f}", f"{cell.p_value:.6f}"]
                    n = cell.n
            line += [n, "" if stress1 is None else f"{stress1:.6f}", fit or ""]
            w.writerow(line)
