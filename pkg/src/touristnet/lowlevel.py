"""Feature-space classifiers producing per-class membership vectors.

All models share one contract: fit on a LabeledDataset, then map a feature
row to a non-negative vector over the training classes summing to one.
They are deliberately ordinary - the interesting signal comes from blending
them with the walk-based term.
"""

from __future__ import annotations

import numpy as np

from .dataset import LabeledDataset, distances_to, rank_by_distance


class LowLevelError(ValueError):
    """Bad model specification or use before fitting."""


class WeightedKNN:
    """k nearest neighbours with inverse-distance vote weights.

    An exact match (distance zero) takes the whole vote, split evenly among
    all zero-distance neighbours.  Ties at the cut rank go to lower indices.
    """

    def __init__(self, k: int = 5):
        if int(k) != k or k < 1:
            raise LowLevelError(f"k must be a positive integer, got {k}")
        self.k = int(k)
        self._ds: LabeledDataset | None = None

    def fit(self, ds: LabeledDataset) -> WeightedKNN:
        if ds.n_instances == 0:
            raise LowLevelError("cannot fit on an empty dataset")
        self._ds = ds
        return self

    @property
    def class_count(self) -> int:
        self._require_fitted()
        return self._ds.class_count

    def _require_fitted(self):
        if self._ds is None:
            raise LowLevelError("model is not fitted")

    def membership(self, x) -> np.ndarray:
        self._require_fitted()
        ds = self._ds
        dists = distances_to(ds.features, x, ds.kinds)
        order = rank_by_distance(dists)[: min(self.k, ds.n_instances)]
        out = np.zeros(ds.class_count)
        d = dists[order]
        if d[0] == 0.0:
            exact = order[d == 0.0]
            np.add.at(out, ds.labels[exact], 1.0)
        else:
            np.add.at(out, ds.labels[order], 1.0 / d)
        return out / out.sum()

    def predict(self, x) -> int:
        return int(np.argmax(self.membership(x)))


class GaussianNB:
    """Independent-feature Gaussian likelihoods with class priors.

    Per-class variances are floored at ``var_floor`` so constant columns
    stay finite; memberships are the normalized posteriors.
    """

    def __init__(self, var_floor: float = 1e-9):
        if not var_floor > 0:
            raise LowLevelError("variance floor must be positive")
        self.var_floor = var_floor
        self._theta = None

    def fit(self, ds: LabeledDataset) -> GaussianNB:
        if ds.n_instances == 0:
            raise LowLevelError("cannot fit on an empty dataset")
        L, d = ds.class_count, ds.dim
        mean = np.zeros((L, d))
        var = np.zeros((L, d))
        prior = np.zeros(L)
        for code in range(L):
            rows = ds.features[ds.labels == code]
            if rows.shape[0] == 0:
                raise LowLevelError(f"class {ds.label_names[code]!r} has no instances")
            mean[code] = rows.mean(axis=0)
            var[code] = np.maximum(rows.var(axis=0), self.var_floor)
            prior[code] = rows.shape[0] / ds.n_instances
        self._theta = (mean, var, np.log(prior))
        return self

    @property
    def class_count(self) -> int:
        self._require_fitted()
        return self._theta[0].shape[0]

    def _require_fitted(self):
        if self._theta is None:
            raise LowLevelError("model is not fitted")

    def membership(self, x) -> np.ndarray:
        self._require_fitted()
        mean, var, log_prior = self._theta
        x = np.asarray(x, dtype=np.float64)
        ll = log_prior - 0.5 * np.sum(
            (x[None, :] - mean) ** 2 / var + np.log(2.0 * np.pi * var), axis=1
        )
        ll -= ll.max()
        w = np.exp(ll)
        return w / w.sum()

    def predict(self, x) -> int:
        return int(np.argmax(self.membership(x)))


class LinearLeastSquares:
    """Single linear layer trained by gradient descent on squared error.

    Targets are one-hot rows; raw outputs are shifted to be non-negative
    and normalized into memberships (uniform when the shifted row is zero).
    """

    def __init__(self, learning_rate: float = 0.01, epochs: int = 200, seed: int = 0):
        if not learning_rate > 0:
            raise LowLevelError("learning rate must be positive")
        if int(epochs) != epochs or epochs < 1:
            raise LowLevelError("epochs must be a positive integer")
        self.learning_rate = float(learning_rate)
        self.epochs = int(epochs)
        self.seed = int(seed)
        self._weights = None

    def fit(self, ds: LabeledDataset) -> LinearLeastSquares:
        if ds.n_instances == 0:
            raise LowLevelError("cannot fit on an empty dataset")
        n, d = ds.features.shape
        L = ds.class_count
        X = np.hstack([ds.features, np.ones((n, 1))])  # bias column
        Y = np.zeros((n, L))
        Y[np.arange(n), ds.labels] = 1.0
        rng = np.random.default_rng(self.seed)
        W = rng.normal(0.0, 0.01, size=(d + 1, L))
        for _ in range(self.epochs):
            grad = (2.0 / n) * (X.T @ (X @ W - Y))
            W -= self.learning_rate * grad
        self._weights = W
        return self

    @property
    def class_count(self) -> int:
        self._require_fitted()
        return self._weights.shape[1]

    def _require_fitted(self):
        if self._weights is None:
            raise LowLevelError("model is not fitted")

    def membership(self, x) -> np.ndarray:
        self._require_fitted()
        x = np.asarray(x, dtype=np.float64)
        scores = np.append(x, 1.0) @ self._weights
        scores = scores - scores.min()
        total = scores.sum()
        if total <= 0:
            return np.full(scores.shape, 1.0 / len(scores))
        return scores / total

    def predict(self, x) -> int:
        return int(np.argmax(self.membership(x)))


def parse_model(spec: str):
    """Build an unfitted model from a compact text form.

    Forms: ``wknn:K``, ``gnb``, ``linear:LR,EPOCHS[,SEED]``.
    """
    name, _, args = spec.partition(":")
    name = name.strip().lower()
    try:
        if name == "wknn":
            return WeightedKNN(k=int(args)) if args else WeightedKNN()
        if name == "gnb":
            if args:
                raise LowLevelError(f"gnb takes no arguments, got {args!r}")
            return GaussianNB()
        if name == "linear":
            if not args:
                return LinearLeastSquares()
            parts = [p.strip() for p in args.split(",")]
            if len(parts) not in (2, 3):
                raise LowLevelError(
                    f"linear takes lr,epochs[,seed], got {args!r}"
                )
            seed = int(parts[2]) if len(parts) == 3 else 0
            return LinearLeastSquares(float(parts[0]), int(parts[1]), seed)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, LowLevelError):
            raise
        raise LowLevelError(f"bad model spec {spec!r}: {exc}") from exc
    raise LowLevelError(f"unknown model {name!r} (expected wknn, gnb, or linear)")


def fit_model(spec, ds: LabeledDataset):
    """Fit from a spec string, or pass a pre-built model through fit()."""
    model = parse_model(spec) if isinstance(spec, str) else spec
    return model.fit(ds)
