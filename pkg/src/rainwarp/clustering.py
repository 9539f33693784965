"""K-medoids (alternating assignment / medoid update) on a dissimilarity matrix."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ClusteringError, InputError

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class Clustering:
    """Result of one K-medoids run.

    ``assignments[i]`` is the cluster of year ``labels[i]``; ``medoids[c]`` is
    the row index of the medoid of cluster ``c``. ``total_cost`` is the sum of
    squared dissimilarities from each year to its medoid.
    """

    k: int
    labels: tuple
    assignments: np.ndarray
    medoids: np.ndarray
    seed: int | None
    iterations: int
    total_cost: float
    converged: bool = True
    cost_history: list = field(default_factory=list)
    repairs: list = field(default_factory=list)
    restart_costs: list | None = None

    def members(self, c):
        return np.flatnonzero(self.assignments == c)

    def medoid_labels(self):
        return [self.labels[m] for m in self.medoids]

    def to_dict(self):
        doc = {
            "k": self.k,
            "seed": self.seed,
            "iterations": self.iterations,
            "converged": self.converged,
            "total_cost": self.total_cost,
            "medoids": self.medoid_labels(),
            "assignments": {str(lab): int(c) for lab, c in zip(self.labels, self.assignments)},
            "cost_history": list(self.cost_history),
        }
        if self.repairs:
            doc["repairs"] = list(self.repairs)
        if self.restart_costs is not None:
            doc["restart_costs"] = list(self.restart_costs)
        return doc

    @classmethod
    def from_dict(cls, doc):
        try:
            labels = tuple(sorted(int(y) for y in doc["assignments"]))
            assignments = np.array([doc["assignments"][str(y)] for y in labels], dtype=np.int64)
            index = {y: i for i, y in enumerate(labels)}
            medoids = np.array([index[int(y)] for y in doc["medoids"]], dtype=np.int64)
            k = int(doc["k"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed clustering document ({exc})") from None
        if len(medoids) != k or np.any(assignments < 0) or np.any(assignments >= k):
            raise InputError("clustering document is inconsistent with its k")
        return cls(
            k=k,
            labels=labels,
            assignments=assignments,
            medoids=medoids,
            seed=doc.get("seed"),
            iterations=int(doc.get("iterations", 0)),
            total_cost=float(doc["total_cost"]),
            converged=bool(doc.get("converged", True)),
            cost_history=list(doc.get("cost_history", [])),
            repairs=list(doc.get("repairs", [])),
            restart_costs=doc.get("restart_costs"),
        )


def clustering_cost(d, assignments, medoids):
    # fsum is correctly rounded, so an exact decrease is never hidden by
    # summation order
    return math.fsum(d[np.arange(len(assignments)), medoids[assignments]] ** 2)


def _assign(d, medoids):
    # nearest medoid by raw dissimilarity, ties to the lowest cluster index;
    # a medoid always stays in its own cluster
    assignments = np.argmin(d[:, medoids], axis=1)
    assignments[medoids] = np.arange(len(medoids))
    return assignments


def _update(d, assignments, medoids):
    # argmin of squared sums, ties to the lowest year index; fsum makes the
    # comparison independent of member order
    new = medoids.copy()
    sq = d**2
    for c in range(len(medoids)):
        members = np.flatnonzero(assignments == c)
        if members.size == 0:
            continue
        sums = [math.fsum(sq[members, j]) for j in members]
        new[c] = members[int(np.argmin(sums))]
    return new


def _repair_empty(d, assignments, medoids, repairs):
    # unreachable while medoids are pinned to their own cluster; kept so an
    # empty cluster can never propagate silently
    for c in range(len(medoids)):
        if np.any(assignments == c):
            continue
        taken = set(medoids.tolist())
        far = [i for i in np.argsort(-d[medoids[c]], kind="stable") if i not in taken]
        if not far:
            raise ClusteringError(f"cannot repair empty cluster {c}")
        repairs.append({"cluster": c, "old_medoid": int(medoids[c]), "new_medoid": int(far[0])})
        logger.warning("cluster %d empty; reseating medoid %d -> %d", c, medoids[c], far[0])
        medoids[c] = far[0]
        assignments = _assign(d, medoids)
    return assignments, medoids


def kmedoids(matrix, k, seed=0, max_iter=100, init=None):
    """Cluster the rows of ``matrix`` around ``k`` medoid years.

    Parameters
    ----------
    matrix : DissimMatrix
    k : int
        Number of clusters, ``1 <= k <= N``.
    seed : int
        Seed of the generator drawing the ``k`` distinct initial medoids.
    max_iter : int
        Upper bound on update/assignment rounds.
    init : sequence of int, optional
        Explicit initial medoid row indices; overrides ``seed``.

    Returns
    -------
    Clustering
        ``converged`` is False when the run stopped at ``max_iter``.
    """
    d = matrix.values
    n = d.shape[0]
    if not 1 <= k <= n:
        raise ClusteringError(f"k={k} must be between 1 and the number of years ({n})")
    if max_iter < 1:
        raise ClusteringError("max_iter must be >= 1")
    if init is None:
        rng = np.random.default_rng(seed)
        medoids = np.sort(rng.choice(n, size=k, replace=False)).astype(np.int64)
    else:
        medoids = np.asarray(init, dtype=np.int64)
        if len(medoids) != k or len(set(medoids.tolist())) != k or medoids.min() < 0 or medoids.max() >= n:
            raise ClusteringError(f"init must hold {k} distinct row indices")

    repairs = []
    assignments = _assign(d, medoids)
    assignments, medoids = _repair_empty(d, assignments, medoids, repairs)
    history = [clustering_cost(d, assignments, medoids)]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        new_medoids = _update(d, assignments, medoids)
        new_assignments = _assign(d, new_medoids)
        new_assignments, new_medoids = _repair_empty(d, new_assignments, new_medoids, repairs)
        history.append(clustering_cost(d, new_assignments, new_medoids))
        unchanged = np.array_equal(new_medoids, medoids) and np.array_equal(new_assignments, assignments)
        medoids, assignments = new_medoids, new_assignments
        if unchanged:
            converged = True
            break
    if not converged:
        logger.warning("k-medoids stopped at max_iter=%d without converging", max_iter)
    return Clustering(
        k=k,
        labels=matrix.labels,
        assignments=assignments,
        medoids=medoids,
        seed=None if init is not None else seed,
        iterations=iterations,
        total_cost=history[-1],
        converged=converged,
        cost_history=history,
        repairs=repairs,
    )


def best_of_restarts(matrix, k, seeds, max_iter=100):
    """Run :func:`kmedoids` once per seed and keep the cheapest result.

    Ties go to the earliest seed. All runs' costs are recorded on the
    returned clustering as ``restart_costs``.
    """
    seeds = list(seeds)
    if not seeds:
        raise InputError("at least one seed is required")
    runs = [kmedoids(matrix, k, seed=s, max_iter=max_iter) for s in seeds]
    best = min(range(len(runs)), key=lambda r: (runs[r].total_cost, r))
    result = runs[best]
    result.restart_costs = [{"seed": s, "total_cost": r.total_cost} for s, r in zip(seeds, runs)]
    return result


def save_clustering(clustering, path, provenance=None):
    doc = clustering.to_dict()
    if provenance is not None:
        doc["provenance"] = provenance
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_clustering(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc})") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: corrupt clustering file ({exc})") from None
    try:
        return Clustering.from_dict(doc)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from None
