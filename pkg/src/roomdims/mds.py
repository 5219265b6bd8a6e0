"""Replicated nonmetric multidimensional scaling of ordinal dissimilarities."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np


class DegenerateRatingsError(ValueError):
    pass


# -- rating data ------------------------------------------------------------

@dataclass
class RatingSet:
    """Pairwise dissimilarities from one or more subjects.

    Each subject contributes a vector of ``n*(n-1)/2`` values in the
    upper-triangle order of ``itertools.combinations(range(n), 2)``. Only
    the ordering of the values is used by the fit.
    """

    items: list[str]
    subjects: list[np.ndarray]
    subject_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        n = len(self.items)
        if n < 3:
            raise ValueError("need at least 3 items")
        if len(set(self.items)) != n:
            raise ValueError("item labels must be unique")
        if not self.subjects:
            raise ValueError("need at least one subject")
        m = n * (n - 1) // 2
        self.subjects = [np.asarray(s, dtype=float) for s in self.subjects]
        for k, s in enumerate(self.subjects):
            if s.shape != (m,):
                raise ValueError(f"subject {k} has {s.size} ratings, expected {m}")
            if not np.all(np.isfinite(s)):
                raise ValueError(f"subject {k} has non-finite ratings")
        if not self.subject_ids:
            self.subject_ids = [str(k + 1) for k in range(len(self.subjects))]

    @property
    def n_items(self) -> int:
        return len(self.items)

    @classmethod
    def from_csv(cls, path, likert: tuple[int, int] | None = (1, 7)) -> RatingSet:
        """Read long-format ratings: ``subject_id, item_a, item_b, rating``.

        Item order is first appearance. With ``likert`` set, ratings must be
        integers inside that range.
        """
        rows = []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                rows.append((row["subject_id"], row["item_a"], row["item_b"], float(row["rating"])))
        items: list[str] = []
        for _, a, b, _ in rows:
            for lab in (a, b):
                if lab not in items:
                    items.append(lab)
        pos = {lab: i for i, lab in enumerate(items)}
        n = len(items)
        pair_index = {p: k for k, p in enumerate(_pairs(n))}
        by_subject: dict[str, np.ndarray] = {}
        for sid, a, b, r in rows:
            if likert is not None and (r != int(r) or not likert[0] <= r <= likert[1]):
                raise ValueError(f"rating {r} outside Likert range {likert}")
            i, j = sorted((pos[a], pos[b]))
            if i == j:
                raise ValueError(f"self-comparison {a}/{b} for subject {sid}")
            vec = by_subject.setdefault(sid, np.full(n * (n - 1) // 2, np.nan))
            if not np.isnan(vec[pair_index[(i, j)]]):
                raise ValueError(f"duplicate pair {a}/{b} for subject {sid}")
            vec[pair_index[(i, j)]] = r
        for sid, vec in by_subject.items():
            if np.any(np.isnan(vec)):
                raise ValueError(f"subject {sid} is missing ratings")
        return cls(items, list(by_subject.values()), list(by_subject.keys()))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["subject_id", "item_a", "item_b", "rating"])
            for sid, vec in zip(self.subject_ids, self.subjects):
                for (i, j), r in zip(_pairs(self.n_items), vec):
                    w.writerow([sid, self.items[i], self.items[j], _num(r)])


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def _pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


# -- monotone regression --------------------------------------------------------

def pava(y, w=None) -> np.ndarray:
    """Weighted least-squares non-decreasing fit by pooling adjacent violators."""
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if w is None else np.asarray(w, dtype=float)
    means, weights, sizes = [], [], []
    for yi, wi in zip(y.tolist(), w.tolist()):
        means.append(yi)
        weights.append(wi)
        sizes.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, s2 = means.pop(), weights.pop(), sizes.pop()
            wt = weights[-1] + w2
            means[-1] = (means[-1] * weights[-1] + m2 * w2) / wt
            weights[-1] = wt
            sizes[-1] += s2
    return np.repeat(means, sizes)


def monotone_regression(dissimilarities, distances, ties: str = "primary") -> np.ndarray:
    """Disparities: least-squares fit to ``distances`` that is monotone in ``dissimilarities``.

    ``ties="primary"`` lets tied dissimilarities take any order (ties are
    broken by the current distances); ``"secondary"`` forces tied
    dissimilarities to share one disparity.
    """
    delta = np.asarray(dissimilarities, dtype=float)
    d = np.asarray(distances, dtype=float)
    if delta.shape != d.shape:
        raise ValueError("dissimilarities and distances differ in length")
    if ties == "primary":
        order = np.lexsort((d, delta))
        fitted = pava(d[order])
    elif ties == "secondary":
        order = np.argsort(delta, kind="stable")
        _, start, counts = np.unique(delta[order], return_index=True, return_counts=True)
        block_mean = np.add.reduceat(d[order], start) / counts
        fitted = np.repeat(pava(block_mean, counts), counts)
    else:
        raise ValueError(f"unknown tie approach {ties!r}")
    out = np.empty_like(d)
    out[order] = fitted
    return out


# -- stress ---------------------------------------------------------------------

def pair_distances(X: np.ndarray) -> np.ndarray:
    n = len(X)
    i, j = np.triu_indices(n, 1)
    return np.sqrt(np.sum((X[i] - X[j]) ** 2, axis=1))


def stress1(distances, disparities) -> float:
    """Kruskal's STRESS-1."""
    d = np.asarray(distances, dtype=float)
    dh = np.asarray(disparities, dtype=float)
    denom = np.dot(d, d)
    if denom == 0:
        return 0.0
    return math.sqrt(float(np.dot(d - dh, d - dh)) / denom)


def rsq(distances, disparities) -> float:
    """Squared Pearson correlation of distances and disparities."""
    d = np.asarray(distances, dtype=float)
    dh = np.asarray(disparities, dtype=float)
    if np.allclose(d, dh, rtol=0, atol=1e-15 * max(1.0, np.abs(d).max())):
        return 1.0
    sd, sh = d.std(), dh.std()
    if sd == 0 or sh == 0:
        return 0.0
    r = np.mean((d - d.mean()) * (dh - dh.mean())) / (sd * sh)
    return float(min(r * r, 1.0))


STRESS_LABELS = ((0.2, "Poor"), (0.1, "Fair"), (0.05, "Good"))


def classify_stress(stress: float) -> str:
    """Verbal fit label for a STRESS-1 value.

    >= 0.2 Poor, >= 0.1 Fair, >= 0.05 Good, above 0 Excellent, 0 Perfect.
    """
    if stress < 0:
        raise ValueError("stress must be non-negative")
    for threshold, label in STRESS_LABELS:
        if stress >= threshold:
            return label
    return "Excellent" if stress > 0 else "Perfect"


# -- fitting ------------------------------------------------------------------------

@dataclass
class Embedding:
    items: list[str]
    coords: np.ndarray
    per_subject_stress1: list[float]
    aggregate_stress1: float
    per_subject_rsq: list[float]
    mean_rsq: float
    dimension: int
    n_iter: int = 0
    trace: list[float] = field(default_factory=list, repr=False)

    @property
    def fit_label(self) -> str:
        return classify_stress(self.aggregate_stress1)

    def diagnostics(self) -> dict:
        return {
            "dimension": self.dimension,
            "items": list(self.items),
            "per_subject_stress1": [float(v) for v in self.per_subject_stress1],
            "aggregate_stress1": float(self.aggregate_stress1),
            "per_subject_rsq": [float(v) for v in self.per_subject_rsq],
            "mean_rsq": float(self.mean_rsq),
            "fit": self.fit_label,
            "axis_sign_note": "MDS axes are defined up to reflection; signs are arbitrary",
        }

    def write(self, coords_path, diagnostics_path=None) -> None:
        with open(coords_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["item"] + [f"dim{k + 1}" for k in range(self.dimension)])
            for lab, row in zip(self.items, self.coords):
                w.writerow([lab] + [repr(float(v)) for v in row])
        if diagnostics_path is not None:
            with open(diagnostics_path, "w") as fh:
                json.dump(self.diagnostics(), fh, indent=2)
                fh.write("\n")

    @classmethod
    def read(cls, coords_path, diagnostics_path=None) -> Embedding:
        with open(coords_path, newline="") as fh:
            rows = list(csv.reader(fh))
        items = [r[0] for r in rows[1:]]
        coords = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
        diag = {}
        if diagnostics_path is not None:
            with open(diagnostics_path) as fh:
                diag = json.load(fh)
        return cls(
            items=items,
            coords=coords,
            per_subject_stress1=diag.get("per_subject_stress1", []),
            aggregate_stress1=diag.get("aggregate_stress1", float("nan")),
            per_subject_rsq=diag.get("per_subject_rsq", []),
            mean_rsq=diag.get("mean_rsq", float("nan")),
            dimension=coords.shape[1],
        )


def classical_scaling(dissimilarities: np.ndarray, n: int, dim: int) -> np.ndarray:
    """Torgerson scaling of a condensed dissimilarity vector."""
    D = np.zeros((n, n))
    D[np.triu_indices(n, 1)] = dissimilarities
    D = D + D.T
    J = np.eye(n) - 1.0 / n
    B = -0.5 * J @ (D**2) @ J
    vals, vecs = np.linalg.eigh(B)
    order = np.argsort(vals)[::-1][:dim]
    return vecs[:, order] * np.sqrt(np.maximum(vals[order], 0.0))


def _guttman(X: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Guttman transform for unit weights and condensed target distances."""
    n = len(X)
    d = pair_distances(X)
    ratio = np.where(d > 0, target / np.where(d > 0, d, 1.0), 0.0)
    B = np.zeros((n, n))
    B[np.triu_indices(n, 1)] = -ratio
    B = B + B.T
    B[np.diag_indices(n)] = -B.sum(axis=1)
    return B @ X / n


def _normalized_disparities(delta: np.ndarray, d: np.ndarray, ties: str, norm: float) -> np.ndarray:
    dh = monotone_regression(delta, d, ties)
    s = np.linalg.norm(dh)
    if s == 0:
        return np.full_like(d, norm / math.sqrt(len(d)))
    return dh * (norm / s)


def _center_scale(X: np.ndarray, norm: float) -> np.ndarray:
    X = X - X.mean(axis=0)
    s = np.linalg.norm(pair_distances(X))
    return X * (norm / s) if s > 0 else X


def _objective(X, deltas, ties, norm):
    d = pair_distances(X)
    total = 0.0
    for delta in deltas:
        dh = _normalized_disparities(delta, d, ties, norm)
        total += float(np.dot(d - dh, d - dh))
    return total


def _smacof(X0, deltas, ties, max_iter, tol):
    """Alternate Guttman transforms and per-subject monotone regression.

    Minimises ``sum_k ||d(X) - dhat_k||^2`` with every ``dhat_k`` on the
    sphere of radius ``sqrt(m)``; each step is non-increasing.
    """
    m = len(deltas[0])
    norm = math.sqrt(m)
    X = _center_scale(np.array(X0, dtype=float), norm)
    d = pair_distances(X)
    dhat = [_normalized_disparities(delta, d, ties, norm) for delta in deltas]
    trace = [sum(float(np.dot(d - h, d - h)) for h in dhat)]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        X = _guttman(X, np.mean(dhat, axis=0))
        d = pair_distances(X)
        dhat = [_normalized_disparities(delta, d, ties, norm) for delta in deltas]
        trace.append(sum(float(np.dot(d - h, d - h)) for h in dhat))
        prev, cur = trace[-2], trace[-1]
        if prev <= 0 or (prev - cur) <= tol * prev:
            break
    return X, trace, n_iter


def _summarise(items, X, deltas, ties, dim, trace, n_iter) -> Embedding:
    X = X - X.mean(axis=0)
    d = pair_distances(X)
    s1, r2 = [], []
    for delta in deltas:
        dh = monotone_regression(delta, d, ties)
        s1.append(stress1(d, dh))
        r2.append(rsq(d, dh))
    agg = math.sqrt(float(np.mean(np.square(s1))))
    return Embedding(
        items=list(items), coords=X, per_subject_stress1=s1, aggregate_stress1=agg,
        per_subject_rsq=r2, mean_rsq=float(np.mean(r2)), dimension=dim,
        n_iter=n_iter, trace=trace,
    )


def _check_ratings(ratings: RatingSet):
    for sid, s in zip(ratings.subject_ids, ratings.subjects):
        if np.ptp(s) == 0:
            raise DegenerateRatingsError(f"zero-variance ratings for subject {sid}")


def _run_start(args):
    X0, deltas, ties, max_iter, tol = args
    return _smacof(X0, deltas, ties, max_iter, tol)


def fit_mds(
    ratings: RatingSet,
    dimension: int = 2,
    restarts: int = 20,
    seed: int = 0,
    ties: str = "primary",
    max_iter: int = 500,
    tol: float = 1e-7,
    mode: str = "replicated",
    init: list[np.ndarray] | None = None,
    jobs: int = 1,
) -> Embedding:
    """Nonmetric MDS of one shared configuration against all subjects.

    Starts from classical scaling of the mean ratings, ``restarts`` random
    configurations drawn from ``seed`` and any extra ``init``
    configurations; the start with the lowest aggregate STRESS-1 wins.
    ``mode="individual"`` instead fits every subject on its own and returns
    the Procrustes-aligned mean configuration with per-subject diagnostics.
    """
    n = ratings.n_items
    if not 1 <= dimension <= n - 1:
        raise ValueError(f"dimension must be in 1..{n - 1}")
    _check_ratings(ratings)
    if mode == "individual":
        return _fit_individual(ratings, dimension, restarts, seed, ties, max_iter, tol)
    if mode != "replicated":
        raise ValueError(f"unknown mode {mode!r}")

    deltas = [np.asarray(s, dtype=float) for s in ratings.subjects]
    rng = np.random.default_rng(seed)
    starts = [classical_scaling(np.mean(deltas, axis=0), n, dimension)]
    starts += [rng.standard_normal((n, dimension)) for _ in range(restarts)]
    starts += list(init or [])
    jobs_args = [(X0, deltas, ties, max_iter, tol) for X0 in starts]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_start, jobs_args))
    else:
        results = [_run_start(a) for a in jobs_args]

    best = None
    for X, trace, n_iter in results:
        emb = _summarise(ratings.items, X, deltas, ties, dimension, trace, n_iter)
        if best is None or emb.aggregate_stress1 < best.aggregate_stress1 - 1e-15:
            best = emb
    return best


def procrustes_align(X: np.ndarray, target: np.ndarray, scale: bool = True) -> np.ndarray:
    """Rotate/reflect, translate and (optionally) scale ``X`` onto ``target``."""
    Xc = X - X.mean(axis=0)
    Tc = target - target.mean(axis=0)
    U, s, Vt = np.linalg.svd(Xc.T @ Tc)
    R = U @ Vt
    k = s.sum() / np.sum(Xc**2) if scale and np.sum(Xc**2) > 0 else 1.0
    return k * Xc @ R + target.mean(axis=0)


def _fit_individual(ratings, dimension, restarts, seed, ties, max_iter, tol):
    configs = []
    for k, s in enumerate(ratings.subjects):
        single = RatingSet(ratings.items, [s], [ratings.subject_ids[k]])
        configs.append(fit_mds(single, dimension, restarts, seed + k, ties, max_iter, tol).coords)
    ref = configs[0]
    aligned = [ref] + [procrustes_align(c, ref) for c in configs[1:]]
    mean = np.mean(aligned, axis=0)
    s1, r2 = [], []
    for c, delta in zip(configs, ratings.subjects):
        d = pair_distances(c)
        dh = monotone_regression(delta, d, ties)
        s1.append(stress1(d, dh))
        r2.append(rsq(d, dh))
    return Embedding(
        items=list(ratings.items), coords=mean - mean.mean(axis=0),
        per_subject_stress1=s1, aggregate_stress1=math.sqrt(float(np.mean(np.square(s1)))),
        per_subject_rsq=r2, mean_rsq=float(np.mean(r2)), dimension=dimension,
    )


@dataclass
class SweepRow:
    dimension: int
    aggregate_stress1: float
    mean_rsq: float

    @property
    def fit_label(self) -> str:
        return classify_stress(self.aggregate_stress1)


def dimension_sweep(
    ratings: RatingSet,
    d_max: int = 6,
    restarts: int = 20,
    seed: int = 0,
    ties: str = "primary",
    d_min: int = 1,
    jobs: int = 1,
    **kwargs,
) -> tuple[list[SweepRow], dict[int, Embedding]]:
    """Fit every dimension from ``d_min`` to ``d_max`` with the same seed.

    Each dimension also starts from the previous solution padded with a
    small random extra axis, which keeps stress from rising with ``d``.
    """
    n = ratings.n_items
    if not 1 <= d_min <= d_max <= n - 1:
        raise ValueError(f"dimension range must lie in 1..{n - 1}")
    rows, fits = [], {}
    prev = None
    for dim in range(d_min, d_max + 1):
        init = []
        if prev is not None:
            rng = np.random.default_rng([seed, dim])
            scale = 1e-2 * np.abs(prev.coords).max()
            pad = rng.standard_normal((n, dim - prev.dimension)) * scale
            init.append(np.hstack([prev.coords, pad]))
        emb = fit_mds(ratings, dim, restarts, seed, ties, init=init, jobs=jobs, **kwargs)
        fits[dim] = emb
        rows.append(SweepRow(dim, emb.aggregate_stress1, emb.mean_rsq))
        prev = emb
    return rows, fits


def write_sweep(rows: list[SweepRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dimension", "aggregate_stress1", "mean_rsq", "fit"])
        for r in rows:
            w.writerow([r.dimension, repr(float(r.aggregate_stress1)), repr(float(r.mean_rsq)), r.fit_label])
