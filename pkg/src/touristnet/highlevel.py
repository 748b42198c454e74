"""Pattern-compliance memberships from walk-statistic variations.

For a candidate instance, each class answers: how much do my walk statistics
move if this instance joins me?  The instance is inserted into a class's
component with its proposed same-class edges, mean transient and cycle
lengths are re-measured for every memory size 0..mu_c, and the absolute
shifts against the undisturbed baseline are kept.  Small shifts mean the
instance conforms to that class's connection pattern.

Classes the edge proposal never touches are penalized with a sentinel shift
(10% above the worst connected shift by default) instead of being walked.
Per memory size, shifts are normalized to sum to one across classes, scaled
by class size proportions, and folded into a membership vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import ClassNetwork
from .netbuild import NetConfig, insert_test_instance
from .walker import ComponentWalker, WalkProfile


@dataclass(frozen=True)
class HighLevelConfig:
    """Weights and range for the compliance term.

    ``alpha_t`` and ``alpha_c`` weight transient versus cycle shifts and
    must lie in [0, 1] and sum to one (memberships are invariant under a
    joint rescale, so any other normalization is representable here).
    ``mu_c`` is the largest memory size profiled.
    """

    alpha_t: float = 0.5
    alpha_c: float = 0.5
    mu_c: int = 1
    sentinel_margin: float = 0.1

    def __post_init__(self):
        for name, val in (("alpha_t", self.alpha_t), ("alpha_c", self.alpha_c)):
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {val}")
        if abs(self.alpha_t + self.alpha_c - 1.0) > 1e-9:
            raise ValueError(
                f"alpha_t + alpha_c must be 1, got {self.alpha_t + self.alpha_c}"
            )
        if int(self.mu_c) != self.mu_c or self.mu_c < 0:
            raise ValueError(f"mu_c must be a non-negative integer, got {self.mu_c}")
        object.__setattr__(self, "mu_c", int(self.mu_c))
        if self.sentinel_margin < 0:
            raise ValueError("sentinel_margin must be non-negative")


@dataclass(frozen=True)
class ClassDeltas:
    """Normalized walk-statistic shifts for one candidate instance.

    ``transient`` and ``cycle`` are (class_count, mu_c + 1) arrays; each
    column sums to one.  ``proportions`` holds current class vertex shares.
    ``connected`` flags classes the edge proposal actually reached.
    """

    transient: np.ndarray
    cycle: np.ndarray
    proportions: np.ndarray
    connected: np.ndarray

    def __post_init__(self):
        L, M = self.transient.shape
        if self.cycle.shape != (L, M):
            raise ValueError("transient/cycle shapes differ")
        if self.proportions.shape != (L,) or self.connected.shape != (L,):
            raise ValueError("per-class vectors must have one entry per class")

    @property
    def class_count(self) -> int:
        return self.transient.shape[0]

    @property
    def mu_count(self) -> int:
        return self.transient.shape[1]


def class_proportions(g: ClassNetwork) -> np.ndarray:
    """Share of vertices per class code in the current graph."""
    sizes = g.class_sizes()
    total = sizes.sum()
    if total == 0:
        raise ValueError("graph has no vertices")
    return sizes / total


def membership_direct(deltas: ClassDeltas, alpha_t: float, alpha_c: float) -> np.ndarray:
    """Membership vector from weighted complements of the scaled shifts.

    Accepts arbitrary non-negative weights; the normalization makes the
    result invariant under scaling both by the same positive factor.
    """
    p = deltas.proportions[:, None]
    per_class = (
        alpha_t * (1.0 - deltas.transient * p) + alpha_c * (1.0 - deltas.cycle * p)
    ).sum(axis=1)
    total = per_class.sum()
    assert total > 0, "degenerate membership: all shifts saturated"
    return per_class / total


def membership_generic(deltas: ClassDeltas, alpha_t: float, alpha_c: float) -> np.ndarray:
    """Same quantity assembled as a flat weighted-measure table.

    The shifts become 2*(mu_c+1) normalized measures per class - transient
    ones first, then cycle ones - with one weight per measure.  Kept as an
    independent computation path; must agree with membership_direct.
    """
    L, M = deltas.transient.shape
    p = deltas.proportions
    measures = np.empty((L, 2 * M))
    measures[:, :M] = deltas.transient * p[:, None]
    measures[:, M:] = deltas.cycle * p[:, None]
    weights = np.empty(2 * M)
    weights[:M] = alpha_t
    weights[M:] = alpha_c
    scores = np.zeros(L)
    for j in range(L):
        acc = 0.0
        for u in range(2 * M):
            acc += weights[u] * (1.0 - measures[j, u])
        scores[j] = acc
    total = scores.sum()
    assert total > 0, "degenerate membership: all measures saturated"
    return scores / total


def high_level_membership(deltas: ClassDeltas, cfg: HighLevelConfig) -> np.ndarray:
    return membership_direct(deltas, cfg.alpha_t, cfg.alpha_c)


def generic_framework_membership(deltas: ClassDeltas, cfg: HighLevelConfig) -> np.ndarray:
    return membership_generic(deltas, cfg.alpha_t, cfg.alpha_c)


def _normalize_shift_columns(raw: np.ndarray) -> np.ndarray:
    """Scale each memory-size column to sum one; all-zero columns go uniform."""
    totals = raw.sum(axis=0)
    L = raw.shape[0]
    out = np.empty_like(raw)
    for m, tot in enumerate(totals):
        out[:, m] = raw[:, m] / tot if tot > 0 else 1.0 / L
    return out


class HighLevelClassifier:
    """Walk-variation scorer bound to one trained class network.

    Baseline profiles are computed once per class component and reused for
    every query; ``refresh`` recomputes them after permanent absorptions.
    """

    def __init__(self, g: ClassNetwork, net_cfg: NetConfig, cfg: HighLevelConfig):
        self.graph = g
        self.net_cfg = net_cfg
        self.cfg = cfg
        if g.class_count < 2:
            raise ValueError("compliance scoring needs at least two classes")
        self._class_comp: list[int] = []
        for code in range(g.class_count):
            members = g.vertices_of_class(code)
            if not members:
                raise ValueError(f"class {g.class_names[code]!r} has no vertices")
            comps = {g.component_of[v] for v in members}
            if len(comps) != 1:
                raise ValueError(
                    f"class {g.class_names[code]!r} spans {len(comps)} components"
                )
            self._class_comp.append(comps.pop())
        self._baselines: list[WalkProfile | None] = [None] * g.class_count
        self.refresh()

    def refresh(self, classes=None) -> None:
        """Recompute baseline profiles (all classes, or just the given codes)."""
        codes = range(self.graph.class_count) if classes is None else classes
        for code in codes:
            comp = self.graph.component_of[self.graph.vertices_of_class(code)[0]]
            self._class_comp[code] = comp
            walker = ComponentWalker.from_graph(self.graph, comp)
            self._baselines[code] = walker.profile(self.cfg.mu_c)

    def baseline_profile(self, code: int) -> WalkProfile:
        return self._baselines[code]

    def proposal(self, x) -> list[int]:
        return insert_test_instance(self.graph, x, self.net_cfg)

    def variation_deltas(self, x, proposal=None) -> ClassDeltas:
        """Measure per-class walk shifts for one candidate row."""
        g = self.graph
        if proposal is None:
            proposal = insert_test_instance(g, x, self.net_cfg)
        L = g.class_count
        M = self.cfg.mu_c + 1
        by_class: dict[int, list[int]] = {}
        for u in proposal:
            by_class.setdefault(g.vertex_class[u], []).append(u)
        raw_t = np.zeros((L, M))
        raw_c = np.zeros((L, M))
        connected = np.zeros(L, dtype=bool)
        for code in sorted(by_class):
            edges = by_class[code]
            connected[code] = True
            base = self._baselines[code]
            handle = g.scoped_insert(x, edges)
            try:
                walker = ComponentWalker.from_graph(g, g.component_of[handle.vertex])
                probed = walker.profile(self.cfg.mu_c)
            finally:
                handle.release()
            raw_t[code] = np.abs(probed.mean_transient - base.mean_transient)
            raw_c[code] = np.abs(probed.mean_cycle - base.mean_cycle)
        assert connected.any(), "proposal connected no class"
        if not connected.all():
            margin = 1.0 + self.cfg.sentinel_margin
            for raw in (raw_t, raw_c):
                worst = raw[connected].max(axis=0)
                fill = np.where(worst > 0, margin * worst, 1.0)
                raw[~connected] = fill[None, :]
        return ClassDeltas(
            transient=_normalize_shift_columns(raw_t),
            cycle=_normalize_shift_columns(raw_c),
            proportions=class_proportions(g),
            connected=connected,
        )

    def membership(self, x, proposal=None) -> np.ndarray:
        return high_level_membership(self.variation_deltas(x, proposal), self.cfg)
