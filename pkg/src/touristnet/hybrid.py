"""Blending feature-space and walk-compliance memberships into one decision.

The final membership is a convex combination: ``(1 - blend) * low +
blend * high``.  At blend 0 the classifier is the plain feature-space
model; at 1 it trusts connection patterns alone.  Ties at the argmax go to
the smallest class code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset
from .graph import ClassNetwork
from .highlevel import HighLevelClassifier, HighLevelConfig
from .lowlevel import fit_model
from .netbuild import NetConfig, absorb_classified_instance, build_training_network, insert_test_instance


@dataclass(frozen=True)
class HybridConfig:
    """Decision parameters: compliance weight and feedback switch.

    ``absorb`` permanently adds each classified instance to its predicted
    class component, letting later queries see it; off by default.
    """

    blend: float = 0.5
    absorb: bool = False

    def __post_init__(self):
        if not 0.0 <= self.blend <= 1.0:
            raise ValueError(f"blend must be in [0, 1], got {self.blend}")


@dataclass(frozen=True)
class BatchResult:
    """Predictions for a test set in row order."""

    predicted: np.ndarray  # class codes in the training label space
    memberships: np.ndarray  # (n, class_count) blended vectors
    accuracy: float | None  # fraction correct, None for an empty batch


class HybridClassifier:
    """A trained network, a fitted feature model, and the walk scorer."""

    def __init__(self, low, high: HighLevelClassifier):
        self.low = low
        self.high = high

    @property
    def graph(self) -> ClassNetwork:
        return self.high.graph

    @property
    def label_names(self) -> tuple[str, ...]:
        return self.graph.class_names

    @classmethod
    def train(
        cls,
        ds: LabeledDataset,
        low_spec,
        net_cfg: NetConfig,
        hl_cfg: HighLevelConfig,
    ) -> HybridClassifier:
        g = build_training_network(ds, net_cfg)
        low = fit_model(low_spec, ds)
        return cls(low, HighLevelClassifier(g, net_cfg, hl_cfg))

    def memberships(self, x, proposal=None):
        """(low, high) membership pair for one row; proposal may be reused."""
        if proposal is None:
            proposal = insert_test_instance(self.graph, x, self.high.net_cfg)
        low_vec = self.low.membership(x)
        high_vec = self.high.membership(x, proposal)
        return low_vec, high_vec, proposal

    def classify_one(self, x, cfg: HybridConfig):
        """Label one row; returns (class code, blended membership vector)."""
        low_vec, high_vec, proposal = self.memberships(x)
        blended = (1.0 - cfg.blend) * low_vec + cfg.blend * high_vec
        code = int(np.argmax(blended))  # first maximum = smallest code
        if cfg.absorb:
            absorb_classified_instance(self.graph, x, code, proposal)
            self.high.refresh([code])
        return code, blended

    def classify_batch(self, test_ds: LabeledDataset, cfg: HybridConfig) -> BatchResult:
        """Label every row in order (order matters when absorbing)."""
        n = test_ds.n_instances
        L = self.graph.class_count
        predicted = np.empty(n, dtype=np.int64)
        memberships = np.empty((n, L))
        code_map = self._test_code_map(test_ds)
        for i in range(n):
            predicted[i], memberships[i] = self.classify_one(test_ds.features[i], cfg)
        if n == 0:
            return BatchResult(predicted, memberships, None)
        truth = code_map[test_ds.labels]
        return BatchResult(predicted, memberships, float(np.mean(predicted == truth)))

    def _test_code_map(self, test_ds: LabeledDataset) -> np.ndarray:
        """Test label code -> training class code, matching by name."""
        train_names = {name: i for i, name in enumerate(self.label_names)}
        out = np.empty(len(test_ds.label_names), dtype=np.int64)
        for code, name in enumerate(test_ds.label_names):
            if name not in train_names:
                raise ValueError(f"test label {name!r} never seen in training")
            out[code] = train_names[name]
        return out

    def blend_threshold(self, x, target_code: int, step: float = 0.01) -> float | None:
        """Smallest grid blend at which ``x`` gets the target label.

        Scans 0, step, 2*step, ..., 1 with one membership evaluation; None
        when even pure compliance weighting does not produce the target.
        """
        if not 0 < step <= 1:
            raise ValueError(f"step must be in (0, 1], got {step}")
        low_vec, high_vec, _ = self.memberships(x)
        count = int(round(1.0 / step))
        for i in range(count + 1):
            b = min(i * step, 1.0)
            blended = (1.0 - b) * low_vec + b * high_vec
            if int(np.argmax(blended)) == int(target_code):
                return round(b, 12)
        return None
