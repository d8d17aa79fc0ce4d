"""Pixel clustering on texture features.

``kmeans`` is Lloyd's algorithm under the cityblock (L1) distance with
coordinate-wise median centroids, k-means++ style seeding and best-of-n
replications.  ``multiclass_mbo`` is semi-supervised graph clustering: a
one-hot label field is diffused in the leading eigenvectors of the
normalized graph Laplacian (approximated by the Nystrom extension), pulled
towards a random subset of reference labels, and snapped back to one-hot
rows every few steps.
"""
import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InvalidInputError, InvalidParameterError


@dataclass(frozen=True)
class KMeansParams:
    k: int = 2
    metric: str = "cityblock"
    replications: int = 10
    max_iter: int = 100
    seed: int = 0
    online_max_rows: int = 1000

    def __post_init__(self):
        if self.k < 1 or self.replications < 1 or self.max_iter < 1:
            raise InvalidParameterError("k, replications and max_iter must be >= 1")
        if self.online_max_rows < 0:
            raise InvalidParameterError("online_max_rows must be >= 0")
        if self.metric != "cityblock":
            raise InvalidParameterError(f"unsupported metric {self.metric!r}")


@dataclass(frozen=True)
class MBOClusterParams:
    mu_fidelity: float = 30.0
    tolerance: float = 1e-7
    dt: float = 0.05
    threshold_interval: int = 3
    n_samples: int = 300
    n_eigs: int = 30
    seed_fraction: float = 0.25
    max_iter: int = 300
    seed: int = 0

    def __post_init__(self):
        if not (self.mu_fidelity > 0 and self.tolerance > 0 and self.dt > 0):
            raise InvalidParameterError("mu_fidelity, tolerance and dt must be positive")
        if min(self.threshold_interval, self.n_samples, self.n_eigs, self.max_iter) < 1:
            raise InvalidParameterError("counts must be >= 1")
        if self.dt * self.mu_fidelity / self.threshold_interval >= 2:
            raise InvalidParameterError(
                "dt * mu_fidelity / threshold_interval must be < 2 (explicit fidelity step)")
        if not 0 < self.seed_fraction <= 1:
            raise InvalidParameterError("seed_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class ClusterResult:
    labels: np.ndarray
    objective: float
    iterations: int

    def to_dict(self, params=None):
        doc = {"objective": self.objective, "iterations": self.iterations,
               "k": int(self.labels.max()) + 1 if self.labels.size else 0}
        if params is not None:
            doc["params"] = asdict(params)
        return doc

    def to_json(self, params=None, **kwargs):
        return json.dumps(self.to_dict(params), **kwargs)


def _as_features(D):
    D = np.asarray(D, dtype=np.float64)
    if D.ndim == 1:
        D = D[:, None]
    if D.ndim != 2 or D.shape[0] == 0 or D.shape[1] == 0:
        raise InvalidInputError(f"feature matrix must be non-empty 2D, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        raise InvalidInputError("feature matrix contains NaN or Inf")
    return D


def cityblock(a, b):
    return cdist(a, b, metric="cityblock")


def kmeans_pp_seed(D, k, rng):
    """Pick ``k`` rows: the first uniformly, each next one with probability
    proportional to its L1 distance to the nearest row already picked."""
    D = _as_features(D)
    if k > len(np.unique(D, axis=0)):
        raise InvalidParameterError(f"k={k} exceeds the number of distinct rows")
    chosen = [int(rng.integers(D.shape[0]))]
    nearest = cityblock(D, D[chosen]).ravel()
    for _ in range(1, k):
        idx = int(rng.choice(D.shape[0], p=nearest / nearest.sum()))
        chosen.append(idx)
        nearest = np.minimum(nearest, cityblock(D, D[idx:idx + 1]).ravel())
    return D[chosen].copy()


def _assign(D, centroids):
    dist = cityblock(D, centroids)
    labels = np.argmin(dist, axis=1)
    return labels, dist[np.arange(D.shape[0]), labels]


def _lloyd(D, centroids, max_iter, history=None):
    labels, dist = _assign(D, centroids)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        new = centroids.copy()
        for j in range(centroids.shape[0]):
            members = D[labels == j]
            if members.size:
                new[j] = np.median(members, axis=0)
            else:
                # Re-seed at the point farthest from its own centroid.
                far = int(np.argmax(dist))
                new[j] = D[far]
                dist[far] = 0.0
        new_labels, new_dist = _assign(D, new)
        if history is not None:
            history.append(float(new_dist.sum()))
        done = np.array_equal(new_labels, labels) and np.array_equal(new, centroids)
        centroids, labels, dist = new, new_labels, new_dist
        if done:
            break
    return labels, centroids, float(dist.sum()), iterations


def _cluster_cost(points):
    if not len(points):
        return 0.0
    return float(np.abs(points - np.median(points, axis=0)).sum())


def _online_refine(D, labels, k, max_sweeps=100):
    """Single-point moves that lower the exact objective, until none does.

    Each candidate move recomputes the medians of the two clusters involved,
    so a sweep costs O(n^2 k); only used on small inputs.
    """
    labels = labels.copy()
    costs = [_cluster_cost(D[labels == j]) for j in range(k)]
    for _ in range(max_sweeps):
        moved = False
        for i in range(D.shape[0]):
            a = labels[i]
            members = labels == a
            if members.sum() == 1:
                continue
            members[i] = False
            cost_without = _cluster_cost(D[members])
            gains = np.full(k, -np.inf)
            with_cost = {}
            for j in range(k):
                if j == a:
                    continue
                with_cost[j] = _cluster_cost(np.vstack([D[labels == j], D[i:i + 1]]))
                gains[j] = (costs[a] + costs[j]) - (cost_without + with_cost[j])
            j = int(np.argmax(gains))
            # Relative margin keeps rounding noise from cycling points.
            if gains[j] > 1e-12 * max(1.0, costs[a] + costs[j]):
                labels[i] = j
                costs[a], costs[j] = cost_without, with_cost[j]
                moved = True
        if not moved:
            break
    return labels


def kmeans(D, params=None, history=None):
    """Best of ``params.replications`` cityblock k-means runs.

    Replication ``i`` draws its seeding from child ``i`` of
    ``SeedSequence(params.seed)``, so results do not depend on run order.
    ``history``, if given, collects the objective after every Lloyd step of
    every replication.  Inputs with at most ``params.online_max_rows`` rows
    get a final pass of exact single-point moves after Lloyd converges.

    Returns
    -------
    ClusterResult
        ``objective`` is the within-cluster sum of L1 point-to-centroid
        distances.
    """
    params = params or KMeansParams()
    D = _as_features(D)
    best = None
    for child in np.random.SeedSequence(params.seed).spawn(params.replications):
        rng = np.random.default_rng(child)
        start = kmeans_pp_seed(D, params.k, rng)
        labels, _, objective, iterations = _lloyd(D, start, params.max_iter, history)
        if D.shape[0] <= params.online_max_rows:
            labels = _online_refine(D, labels, params.k)
            objective = sum(_cluster_cost(D[labels == j]) for j in range(params.k))
        if best is None or objective < best.objective:
            best = ClusterResult(labels=labels, objective=objective, iterations=iterations)
    return best


def affinity_scale(D, sample):
    """Mean L1 distance between distinct sampled rows (1 if all coincide)."""
    d = cityblock(D[sample], D[sample])
    n = len(sample)
    tau = d.sum() / (n * (n - 1)) if n > 1 else 0.0
    return tau if tau > 0 else 1.0


def nystrom_eigs(D, n_samples, n_eigs, rng):
    """Approximate leading eigenpairs of the normalized graph Laplacian.

    The graph has weights ``exp(-|x_i - x_j|_1 / tau)``.  ``n_samples`` rows
    are drawn without replacement; the sample block ``A`` and the
    sample-to-rest block ``B`` are degree-normalized with Nystrom-estimated
    degrees and the extended eigenvectors are orthogonalized in one step
    through ``A^{-1/2}``.

    Returns
    -------
    eigenvalues : ndarray, shape (n_eigs,)
        Ascending Laplacian eigenvalues ``1 - lambda`` of the normalized
        affinity.
    vectors : ndarray, shape (n_rows, n_eigs)
        Orthonormal columns, rows in the original order.
    """
    D = _as_features(D)
    n = D.shape[0]
    if not 1 <= n_samples <= n or not 1 <= n_eigs <= n_samples:
        raise InvalidParameterError(
            f"need 1 <= n_eigs <= n_samples <= rows, got {n_eigs}, {n_samples}, {n}")
    perm = rng.permutation(n)
    sample, rest = perm[:n_samples], perm[n_samples:]
    tau = affinity_scale(D, sample)
    A = np.exp(-cityblock(D[sample], D[sample]) / tau)
    B = np.exp(-cityblock(D[sample], D[rest]) / tau)
    # Degree estimates of the full graph from the two known blocks.
    d1 = A.sum(axis=1) + B.sum(axis=1)
    d2 = B.sum(axis=0) + B.T @ np.linalg.pinv(A) @ B.sum(axis=1)
    d2 = np.maximum(d2, 1e-12)
    s1, s2 = 1.0 / np.sqrt(d1), 1.0 / np.sqrt(d2)
    A = A * np.outer(s1, s1)
    B = B * np.outer(s1, s2)
    evals, evecs = np.linalg.eigh(A)
    keep = evals > 1e-12 * evals.max()
    A_isqrt = (evecs[:, keep] / np.sqrt(evals[keep])) @ evecs[:, keep].T
    Q = A + A_isqrt @ B @ B.T @ A_isqrt
    q_vals, q_vecs = np.linalg.eigh(Q)
    order = np.argsort(q_vals)[::-1][:n_eigs]
    q_vals, q_vecs = q_vals[order], q_vecs[:, order]
    q_pos = np.maximum(q_vals, 1e-300)
    V = np.vstack([A, B.T]) @ A_isqrt @ (q_vecs / np.sqrt(q_pos))
    vectors = np.empty_like(V)
    vectors[perm] = V
    # The normalized affinity has spectrum in [-1, 1].
    return 1.0 - np.clip(q_vals, -1.0, 1.0), vectors


def dense_eigs(D, n_eigs):
    """Exact counterpart of :func:`nystrom_eigs` on the full graph (small inputs only)."""
    D = _as_features(D)
    W = np.exp(-cityblock(D, D) / affinity_scale(D, np.arange(D.shape[0])))
    s = 1.0 / np.sqrt(W.sum(axis=1))
    lap = np.eye(D.shape[0]) - W * np.outer(s, s)
    evals, evecs = np.linalg.eigh(lap)
    return evals[:n_eigs], evecs[:, :n_eigs]


def _one_hot(labels, k):
    out = np.zeros((labels.size, k))
    out[np.arange(labels.size), labels] = 1.0
    return out


def mbo_from_eigs(eigenvalues, vectors, init_labels, params, rng):
    """Multiclass MBO iterations in a given Laplacian eigenbasis.

    A random ``seed_fraction`` of the rows keeps its ``init_labels`` as the
    fidelity target; the remaining rows also start from ``init_labels``.
    One MBO step of length ``dt`` is split into ``threshold_interval``
    substeps of ``h = dt / threshold_interval``, each solving
    ``(I + h L) u' = u - h mu chi (u - u_hat)`` in the eigenbasis; rows are
    then snapped to the nearest one-hot vector.  The loop stops once
    ``|u' - u|^2 / |u'|^2 < tolerance`` across a step.  The fidelity term is
    explicit, so ``h * mu_fidelity`` must stay below 2.
    """
    init = np.asarray(init_labels)
    if init.ndim != 1 or init.size != vectors.shape[0]:
        raise InvalidInputError("init_labels must hold one label per row")
    if init.size == 0 or init.min() < 0:
        raise InvalidInputError("init_labels must be non-negative")
    k = int(init.max()) + 1
    n = init.size
    n_seed = max(1, int(round(params.seed_fraction * n)))
    seeded = np.zeros(n, dtype=bool)
    seeded[rng.choice(n, size=n_seed, replace=False)] = True
    present = np.unique(init[seeded])
    if present.size != k or np.unique(init).size != k:
        raise InvalidInputError("every class must appear among the seed labels")
    target = _one_hot(init, k)
    chi = (params.mu_fidelity * seeded)[:, None]
    u = target.copy()
    h = params.dt / params.threshold_interval
    denom = 1.0 + h * np.asarray(eigenvalues)[:, None]
    a = vectors.T @ u
    iterations = 0
    for iterations in range(1, params.max_iter + 1):
        prev = u
        for _ in range(params.threshold_interval):
            forcing = vectors.T @ (chi * (u - target))
            a = (a - h * forcing) / denom
            u = vectors @ a
        u = _one_hot(np.argmax(u, axis=1), k)
        a = vectors.T @ u
        change = float(((u - prev) ** 2).sum() / max((u**2).sum(), 1e-300))
        if change < params.tolerance:
            break
    return ClusterResult(labels=np.argmax(u, axis=1), objective=float("nan"),
                         iterations=iterations)


def multiclass_mbo(D, init_labels, params=None, eigs=None):
    """Semi-supervised multiclass MBO on the feature graph.

    Parameters
    ----------
    D : array_like
        Feature matrix, one row per pixel.
    init_labels : array_like of int
        Reference labeling (typically k-means) covering classes ``0..k-1``.
    params : MBOClusterParams, optional
    eigs : (eigenvalues, vectors), optional
        Precomputed eigenpairs; the Nystrom extension is used otherwise.

    Returns
    -------
    ClusterResult
        ``objective`` is NaN (MBO minimizes no reported objective).
    """
    params = params or MBOClusterParams()
    D = _as_features(D)
    sample_rng, seed_rng = (np.random.default_rng(s)
                            for s in np.random.SeedSequence(params.seed).spawn(2))
    if eigs is None:
        n_samples = min(params.n_samples, D.shape[0])
        eigs = nystrom_eigs(D, n_samples, min(params.n_eigs, n_samples), sample_rng)
    return mbo_from_eigs(eigs[0], eigs[1], init_labels, params, seed_rng)

