"""Building class networks from training data and attaching test instances.

Each vertex applies a density switch: when more than ``k`` same-class
vertices fall within ``epsilon`` it connects to all of them (dense region),
otherwise to its ``k`` nearest same-class vertices (sparse region).  After
the per-vertex pass every class is repaired into a single connected
component by repeatedly adding the shortest same-class edge between its
fragments.

Test-time insertion runs the same switch over *all* vertices, label-blind.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset, pairwise_distances, rank_by_distance
from .graph import ClassNetwork, GraphError


@dataclass(frozen=True)
class NetConfig:
    """Construction parameters.

    ``epsilon_classify`` optionally overrides the radius used when inserting
    unlabeled instances; the training radius applies when it is None.
    """

    k: int
    epsilon: float
    epsilon_classify: float | None = None

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.epsilon_classify is not None and not self.epsilon_classify > 0:
            raise ValueError("epsilon_classify must be positive when given")

    @property
    def insertion_epsilon(self) -> float:
        return self.epsilon if self.epsilon_classify is None else self.epsilon_classify


def build_training_network(ds: LabeledDataset, cfg: NetConfig) -> ClassNetwork:
    """Construct the per-class network for a labeled training set.

    Returns a graph with one connected component per class (components and
    classes coincide).  Raises on an empty dataset.
    """
    if ds.n_instances == 0:
        raise GraphError("cannot build a network from an empty dataset")
    g = ClassNetwork(ds.features, ds.labels, ds.label_names, ds.kinds)
    dmat = pairwise_distances(ds.features, ds.kinds)
    for key_i in range(ds.n_instances):
        for key_j in range(key_i + 1, ds.n_instances):
            g._dist_cache[(key_i, key_j)] = float(dmat[key_i, key_j])

    for v in range(ds.n_instances):
        same = np.flatnonzero(ds.labels == ds.labels[v])
        same = same[same != v]
        if same.size == 0:
            continue  # singleton class: nothing to connect
        within = same[dmat[v, same] <= cfg.epsilon]
        if within.size > cfg.k:
            targets = within
        else:
            order = same[rank_by_distance(dmat[v, same])]
            targets = order[: cfg.k]
        for u in targets:
            g.add_edge(v, int(u))

    _repair_class_connectivity(g, ds, dmat)
    g.refresh_components()
    if g.component_count != ds.class_count:
        raise GraphError(
            f"repair left {g.component_count} components for {ds.class_count} classes"
        )
    return g


def _repair_class_connectivity(g: ClassNetwork, ds: LabeledDataset, dmat) -> None:
    """Merge intra-class fragments with shortest bridging edges until whole."""
    for code in range(ds.class_count):
        members = np.flatnonzero(ds.labels == code)
        while True:
            comp_of, _ = g.connected_components()
            groups: dict[int, list[int]] = {}
            for v in members:
                groups.setdefault(comp_of[v], []).append(int(v))
            if len(groups) <= 1:
                break
            frags = [np.array(f) for f in groups.values()]
            best_d = np.inf
            best_pair = None  # lexicographically smallest (lo, hi) at best_d
            for a in range(len(frags)):
                for b in range(a + 1, len(frags)):
                    sub = dmat[np.ix_(frags[a], frags[b])]
                    m = sub.min()
                    if m > best_d:
                        continue
                    ii, jj = np.nonzero(sub == m)
                    los = np.minimum(frags[a][ii], frags[b][jj])
                    his = np.maximum(frags[a][ii], frags[b][jj])
                    cand = min(zip(los.tolist(), his.tolist()))
                    if m < best_d or cand < best_pair:
                        best_d, best_pair = m, cand
            g.add_edge(best_pair[0], best_pair[1])


def insert_test_instance(g: ClassNetwork, x, cfg: NetConfig) -> list[int]:
    """Edge proposal for an unlabeled row under the same density switch.

    Considers every vertex regardless of class: all vertices within the
    insertion radius when more than ``k`` of them qualify, else the ``k``
    nearest.  The graph is not modified.  Always non-empty.
    """
    if g.vertex_count == 0:
        raise GraphError("cannot insert into an empty graph")
    dists = g.distances_to_all(x)
    eps = cfg.insertion_epsilon
    within = np.flatnonzero(dists <= eps)
    if within.size > cfg.k:
        return [int(v) for v in within]
    order = rank_by_distance(dists)
    return [int(v) for v in order[: min(cfg.k, g.vertex_count)]]


def absorb_classified_instance(
    g: ClassNetwork, x, predicted: int, proposal=None, cfg: NetConfig | None = None
) -> int:
    """Permanently add a classified instance, keeping predicted-class edges only.

    When the proposal touches no vertex of the predicted class the instance
    is bridged to its nearest same-class vertex so the class stays one
    component.  Returns the new vertex id.
    """
    if proposal is None:
        if cfg is None:
            raise GraphError("need either a proposal or a NetConfig to derive one")
        proposal = insert_test_instance(g, x, cfg)
    kept = [u for u in proposal if g.vertex_class[u] == predicted]
    if not kept:
        dists = g.distances_to_all(x)
        mask = np.array([c == predicted for c in g.vertex_class])
        if not mask.any():
            raise GraphError(f"no vertex of class code {predicted} to bridge to")
        candidates = np.flatnonzero(mask)
        sub = rank_by_distance(dists[candidates])
        kept = [int(candidates[sub[0]])]
    return g.absorb(x, predicted, kept)
