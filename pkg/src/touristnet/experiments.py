"""Experiment harness: synthetic scenes, cross-validation, grid reports.

Everything here is deterministic given the spec seed: fold assignments,
generated datasets, and report bytes.  Grid evaluation reuses one set of
walk-shift measurements per test instance for every (alpha, blend) cell, so
sweeping the grids costs little more than a single configuration.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import (
    NUMERIC,
    DatasetError,
    LabeledDataset,
    Standardizer,
    load_csv,
)
from .graph import ClassNetwork
from .highlevel import (
    ClassDeltas,
    HighLevelClassifier,
    HighLevelConfig,
    _normalize_shift_columns,
    membership_direct,
)
from .hybrid import HybridClassifier, HybridConfig
from .lowlevel import fit_model
from .netbuild import NetConfig, build_training_network
from .walker import ComponentWalker


# ---------------------------------------------------------------------------
# fold assignment

def stratified_kfold(ds: LabeledDataset, folds: int, seed: int) -> np.ndarray:
    """Fold id per instance, class proportions preserved within one instance.

    Every class is shuffled independently and dealt round-robin style into
    chunks whose sizes differ by at most one.
    """
    if folds < 2:
        raise DatasetError(f"need at least 2 folds, got {folds}")
    sizes = ds.class_sizes()
    for code, size in enumerate(sizes):
        if size < folds:
            raise DatasetError(
                f"class {ds.label_names[code]!r} has {size} instances, "
                f"fewer than {folds} folds"
            )
    rng = np.random.default_rng(seed)
    fold_of = np.empty(ds.n_instances, dtype=np.int64)
    for code in range(ds.class_count):
        idx = rng.permutation(ds.class_indices(code))
        for f, chunk in enumerate(np.array_split(idx, folds)):
            fold_of[chunk] = f
    return fold_of


# ---------------------------------------------------------------------------
# synthetic data

_SEPARATIONS = {"separated": 6.0, "slight": 3.0, "heavy": 1.0}


def gen_gaussian_pair(separation: str, n: int = 200, seed: int = 0) -> LabeledDataset:
    """Two 2-D unit Gaussians with means the given number of sigmas apart."""
    if separation not in _SEPARATIONS:
        raise DatasetError(
            f"separation must be one of {sorted(_SEPARATIONS)}, got {separation!r}"
        )
    if n < 10:
        raise DatasetError(f"need at least 10 points per class, got {n}")
    gap = _SEPARATIONS[separation]
    rng = np.random.default_rng(seed)
    a = rng.normal(loc=(0.0, 0.0), scale=1.0, size=(n, 2))
    b = rng.normal(loc=(gap, 0.0), scale=1.0, size=(n, 2))
    return LabeledDataset(
        features=np.vstack([a, b]),
        labels=np.repeat([0, 1], n),
        kinds=(NUMERIC, NUMERIC),
        label_names=("a", "b"),
    )


# Scene geometry is a repository fixture: a sparse 16-point lozenge lattice
# next to a dense 58-point blob, with two probe points sitting between them
# near the lattice's long axis so their nearest neighbours are mostly blob.
# The blob's five left-edge points are pinned so the probes' neighbourhoods
# do not depend on the seed; the remaining 53 are drawn behind that edge.
_LOZ_CENTER = (0.30, 0.50)
_LOZ_STEP = 0.04
_BLOB_EDGE = tuple((0.545, y) for y in (0.46, 0.48, 0.50, 0.52, 0.54))
_BLOB_BOX = (0.555, 0.70, 0.42, 0.58)  # x0, x1, y0, y1
_LOZ_TESTS = ((0.46, 0.50), (0.45, 0.515))


def gen_lozenge_scene(seed: int = 0):
    """(train dataset, 2 test rows): 16 'red' lattice + 58 'blue' blob points."""
    h = _LOZ_STEP / math.sqrt(2.0)
    cx, cy = _LOZ_CENTER
    red = []
    for i in range(4):
        for j in range(4):
            u, v = i - 1.5, j - 1.5
            red.append((cx + (u + v) * h, cy + (u - v) * h))
    rng = np.random.default_rng(seed)
    x0, x1, y0, y1 = _BLOB_BOX
    n_rest = 58 - len(_BLOB_EDGE)
    blue = np.vstack(
        [
            np.array(_BLOB_EDGE),
            np.column_stack(
                [rng.uniform(x0, x1, size=n_rest), rng.uniform(y0, y1, size=n_rest)]
            ),
        ]
    )
    ds = LabeledDataset(
        features=np.vstack([np.array(red), blue]),
        labels=np.repeat([1, 0], [16, 58]),  # blue sorts before red
        kinds=(NUMERIC, NUMERIC),
        label_names=("blue", "red"),
    )
    return ds, np.array(_LOZ_TESTS)


_LINE_Y = 0.35
_LINE_START = 0.13
_LINE_STEP = 0.05
_LINE_POINTS = 9
_RECT_BOX = (0.66, 1.28, 0.10, 0.60)
_RECT_POINTS = 1000
_TEST_START = 0.58
_TEST_STEP = 0.03
_TEST_POINTS = 14


def gen_line_rect_scene(seed: int = 0):
    """(train dataset, 14 test rows): sparse 'red' line aimed at a dense 'blue' box.

    Test rows continue the line left to right into the box interior.
    """
    red = np.column_stack(
        [
            _LINE_START + _LINE_STEP * np.arange(_LINE_POINTS),
            np.full(_LINE_POINTS, _LINE_Y),
        ]
    )
    rng = np.random.default_rng(seed)
    x0, x1, y0, y1 = _RECT_BOX
    blue = np.column_stack(
        [
            rng.uniform(x0, x1, size=_RECT_POINTS),
            rng.uniform(y0, y1, size=_RECT_POINTS),
        ]
    )
    ds = LabeledDataset(
        features=np.vstack([red, blue]),
        labels=np.repeat([1, 0], [_LINE_POINTS, _RECT_POINTS]),
        kinds=(NUMERIC, NUMERIC),
        label_names=("blue", "red"),
    )
    tests = np.column_stack(
        [
            _TEST_START + _TEST_STEP * np.arange(_TEST_POINTS),
            np.full(_TEST_POINTS, _LINE_Y),
        ]
    )
    return ds, tests


# ---------------------------------------------------------------------------
# networkless comparison path

class NetworklessScorer:
    """Walk shifts measured on complete same-class site sets (no graph).

    Mirrors the networked scorer's pipeline; every class is always reachable
    (complete adjacency), so the sentinel branch never applies.
    """

    def __init__(self, ds: LabeledDataset, cfg: HighLevelConfig):
        if ds.class_count < 2:
            raise ValueError("compliance scoring needs at least two classes")
        self.cfg = cfg
        self._rows = [ds.features[ds.labels == c] for c in range(ds.class_count)]
        for code, rows in enumerate(self._rows):
            if rows.shape[0] == 0:
                raise ValueError(f"class {ds.label_names[code]!r} has no instances")
        self.kinds = ds.kinds
        self._proportions = ds.class_sizes() / ds.n_instances
        self._baselines = [
            ComponentWalker.complete(rows, ds.kinds).profile(cfg.mu_c)
            for rows in self._rows
        ]

    def variation_deltas(self, x) -> ClassDeltas:
        L = len(self._rows)
        M = self.cfg.mu_c + 1
        raw_t = np.empty((L, M))
        raw_c = np.empty((L, M))
        x = np.asarray(x, dtype=np.float64)
        for code, rows in enumerate(self._rows):
            aug = np.vstack([rows, x[None, :]])
            probed = ComponentWalker.complete(aug, self.kinds).profile(self.cfg.mu_c)
            base = self._baselines[code]
            raw_t[code] = np.abs(probed.mean_transient - base.mean_transient)
            raw_c[code] = np.abs(probed.mean_cycle - base.mean_cycle)
        return ClassDeltas(
            transient=_normalize_shift_columns(raw_t),
            cycle=_normalize_shift_columns(raw_c),
            proportions=self._proportions.astype(np.float64),
            connected=np.ones(L, dtype=bool),
        )

    def membership(self, x) -> np.ndarray:
        return membership_direct(
            self.variation_deltas(x), self.cfg.alpha_t, self.cfg.alpha_c
        )


def networkless_high_level(ds_train: LabeledDataset, x, cfg: HighLevelConfig) -> np.ndarray:
    """One-shot membership for ``x`` against complete same-class site sets."""
    return NetworklessScorer(ds_train, cfg).membership(x)


# ---------------------------------------------------------------------------
# experiment specs

@dataclass(frozen=True)
class ExperimentSpec:
    """Everything one cross-validated sweep needs, serializable as key=value text."""

    data: str  # csv path, or generator tag like gaussian-heavy / lozenge / line-rect
    label_column: int = -1
    has_header: bool = False
    standardize: bool = True
    folds: int = 10
    repetitions: int = 1
    seed: int = 0
    k: int = 1
    epsilon: float = 0.03
    epsilon_classify: float | None = None
    low: str = "wknn:5"
    blends: tuple[float, ...] = (0.0,)
    alphas: tuple[tuple[float, float], ...] = ((0.5, 0.5),)
    mu_c: int | None = None
    mu_c_frac: float = 0.3
    sentinel_margin: float = 0.1
    networkless: bool = False
    absorb: bool = False
    gen_n: int = 200  # per-class size for the gaussian generators

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not self.blends or not self.alphas:
            raise ValueError("blend and alpha grids must be nonempty")
        for b in self.blends:
            if not 0.0 <= b <= 1.0:
                raise ValueError(f"blend {b} outside [0, 1]")
        for at, ac in self.alphas:
            if abs(at + ac - 1.0) > 1e-9:
                raise ValueError(f"alpha pair ({at}, {ac}) must sum to 1")
        if self.absorb and (len(self.blends) > 1 or len(self.alphas) > 1):
            raise ValueError("absorb feedback needs a single (alpha, blend) cell")

    # --- text round trip ---------------------------------------------------

    def to_text(self) -> str:
        lines = [
            f"data = {self.data}",
            f"label_column = {self.label_column}",
            f"has_header = {self.has_header}",
            f"standardize = {self.standardize}",
            f"folds = {self.folds}",
            f"repetitions = {self.repetitions}",
            f"seed = {self.seed}",
            f"k = {self.k}",
            f"epsilon = {self.epsilon!r}",
            f"epsilon_classify = {'' if self.epsilon_classify is None else repr(self.epsilon_classify)}",
            f"low = {self.low}",
            f"blends = {','.join(repr(b) for b in self.blends)}",
            "alphas = " + ";".join(f"{at!r}:{ac!r}" for at, ac in self.alphas),
            f"mu_c = {'' if self.mu_c is None else self.mu_c}",
            f"mu_c_frac = {self.mu_c_frac!r}",
            f"sentinel_margin = {self.sentinel_margin!r}",
            f"networkless = {self.networkless}",
            f"absorb = {self.absorb}",
            f"gen_n = {self.gen_n}",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> ExperimentSpec:
        raw: dict[str, str] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"spec line {lineno}: expected key = value, got {line!r}")
            key, _, val = line.partition("=")
            raw[key.strip()] = val.strip()
        if "data" not in raw:
            raise ValueError("spec needs a data entry")

        def _bool(s: str) -> bool:
            if s.lower() in ("true", "1", "yes"):
                return True
            if s.lower() in ("false", "0", "no"):
                return False
            raise ValueError(f"not a boolean: {s!r}")

        kwargs: dict = {"data": raw["data"]}
        simple = {
            "label_column": int,
            "has_header": _bool,
            "standardize": _bool,
            "folds": int,
            "repetitions": int,
            "seed": int,
            "k": int,
            "epsilon": float,
            "low": str,
            "mu_c_frac": float,
            "sentinel_margin": float,
            "networkless": _bool,
            "absorb": _bool,
            "gen_n": int,
        }
        for key, conv in simple.items():
            if raw.get(key):
                kwargs[key] = conv(raw[key])
        if raw.get("epsilon_classify"):
            kwargs["epsilon_classify"] = float(raw["epsilon_classify"])
        if raw.get("mu_c"):
            kwargs["mu_c"] = int(raw["mu_c"])
        if raw.get("blends"):
            kwargs["blends"] = tuple(float(v) for v in raw["blends"].split(","))
        if raw.get("alphas"):
            pairs = []
            for part in raw["alphas"].split(";"):
                at, _, ac = part.partition(":")
                pairs.append((float(at), float(ac)))
            kwargs["alphas"] = tuple(pairs)
        return cls(**kwargs)


def load_spec_dataset(spec: ExperimentSpec) -> LabeledDataset:
    """Resolve the spec's data field to a dataset (file path or generator tag)."""
    tag = spec.data
    if tag.startswith("gaussian-"):
        return gen_gaussian_pair(tag.removeprefix("gaussian-"), spec.gen_n, spec.seed)
    if tag == "lozenge":
        return gen_lozenge_scene(spec.seed)[0]
    if tag == "line-rect":
        return gen_line_rect_scene(spec.seed)[0]
    return load_csv(tag, label_column=spec.label_column, has_header=spec.has_header)


# ---------------------------------------------------------------------------
# cross-validated grid runs

@dataclass(frozen=True)
class CellRow:
    """One (repetition, fold, alpha pair, blend) accuracy measurement."""

    rep: int
    fold: int
    alpha_t: float
    alpha_c: float
    blend: float
    accuracy: float  # nan when failed
    error: str = ""


@dataclass(frozen=True)
class SummaryRow:
    alpha_t: float
    alpha_c: float
    blend: float
    mean: float
    std: float
    cells: int
    failed: int


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    rows: list[CellRow] = field(default_factory=list)

    def summary(self) -> list[SummaryRow]:
        out = []
        for at, ac in self.spec.alphas:
            for b in self.spec.blends:
                accs = [
                    r.accuracy
                    for r in self.rows
                    if (r.alpha_t, r.alpha_c, r.blend) == (at, ac, b) and not r.error
                ]
                failed = sum(
                    1
                    for r in self.rows
                    if (r.alpha_t, r.alpha_c, r.blend) == (at, ac, b) and r.error
                )
                if accs:
                    mean = float(np.mean(accs))
                    std = float(np.std(accs))
                else:
                    mean = std = float("nan")
                out.append(SummaryRow(at, ac, b, mean, std, len(accs), failed))
        return out

    def best(self) -> SummaryRow:
        """Highest mean accuracy; ties go to the earliest grid cell (smallest blend)."""
        rows = [r for r in self.summary() if not math.isnan(r.mean)]
        if not rows:
            raise ValueError("no successful cells to pick a best from")
        return max(rows, key=lambda r: r.mean)  # max keeps the first of equals

    def accuracy_at(self, blend: float, alpha=None) -> float:
        """Mean accuracy of one grid cell (first alpha pair by default)."""
        at, ac = alpha if alpha is not None else self.spec.alphas[0]
        for row in self.summary():
            if (row.alpha_t, row.alpha_c, row.blend) == (at, ac, blend):
                return row.mean
        raise KeyError(f"no cell for alphas=({at}, {ac}) blend={blend}")

    def to_csv(self, path) -> None:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rep", "fold", "alpha_t", "alpha_c", "lambda", "accuracy", "error"])
            for r in self.rows:
                w.writerow(
                    [
                        r.rep,
                        r.fold,
                        f"{r.alpha_t:.6f}",
                        f"{r.alpha_c:.6f}",
                        f"{r.blend:.6f}",
                        "" if math.isnan(r.accuracy) else f"{r.accuracy:.6f}",
                        r.error,
                    ]
                )

    def render(self) -> str:
        lines = ["alpha_t  alpha_c  lambda   accuracy"]
        for row in self.summary():
            acc = (
                "failed"
                if math.isnan(row.mean)
                else f"{100 * row.mean:6.2f} ± {100 * row.std:5.2f}"
            )
            lines.append(
                f"{row.alpha_t:7.3f}  {row.alpha_c:7.3f}  {row.blend:6.3f}   {acc}"
                + (f"   ({row.failed} failed)" if row.failed else "")
            )
        return "\n".join(lines)


def resolve_mu_c(spec: ExperimentSpec, largest_component: int) -> int:
    if spec.mu_c is not None:
        return spec.mu_c
    return max(1, int(round(spec.mu_c_frac * largest_component)))


def _eval_fold(ds: LabeledDataset, fold_of, fold: int, spec: ExperimentSpec) -> np.ndarray:
    """Accuracy per (alpha pair, blend) for one held-out fold."""
    train = ds.subset(fold_of != fold)
    test = ds.subset(fold_of == fold)
    if spec.standardize:
        scaler = Standardizer.fit(train)
        train, test = scaler.transform(train), scaler.transform(test)
    net_cfg = NetConfig(spec.k, spec.epsilon, spec.epsilon_classify)
    low = fit_model(spec.low, train)
    mu_c = resolve_mu_c(spec, int(train.class_sizes().max()))
    hl_cfg = HighLevelConfig(
        alpha_t=spec.alphas[0][0],
        alpha_c=spec.alphas[0][1],
        mu_c=mu_c,
        sentinel_margin=spec.sentinel_margin,
    )
    if spec.absorb:
        # feedback variant: a single cell evaluated through the online path
        clf = HybridClassifier.train(train, spec.low, net_cfg, hl_cfg)
        result = clf.classify_batch(test, HybridConfig(blend=spec.blends[0], absorb=True))
        return np.array([[result.accuracy]])
    if spec.networkless:
        scorer = NetworklessScorer(train, hl_cfg)
    else:
        graph = build_training_network(train, net_cfg)
        scorer = HighLevelClassifier(graph, net_cfg, hl_cfg)
    correct = np.zeros((len(spec.alphas), len(spec.blends)))
    for i in range(test.n_instances):
        x = test.features[i]
        low_vec = low.membership(x)
        deltas = scorer.variation_deltas(x)
        truth = test.labels[i]
        for ai, (at, ac) in enumerate(spec.alphas):
            high_vec = membership_direct(deltas, at, ac)
            for bi, b in enumerate(spec.blends):
                blended = (1.0 - b) * low_vec + b * high_vec
                correct[ai, bi] += int(np.argmax(blended)) == truth
    return correct / test.n_instances


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    """Full factorial sweep: repetitions x folds x alpha grid x blend grid.

    A fold that raises marks all its grid cells failed and the run continues.
    """
    ds = load_spec_dataset(spec)
    report = ExperimentReport(spec)
    for rep in range(spec.repetitions):
        fold_of = stratified_kfold(ds, spec.folds, spec.seed + rep)
        for fold in range(spec.folds):
            try:
                acc = _eval_fold(ds, fold_of, fold, spec)
            except Exception as exc:  # noqa: BLE001 - cell isolation by design
                msg = f"{type(exc).__name__}: {exc}"
                for at, ac in spec.alphas:
                    for b in spec.blends:
                        report.rows.append(
                            CellRow(rep, fold, at, ac, b, float("nan"), msg)
                        )
                continue
            for ai, (at, ac) in enumerate(spec.alphas):
                for bi, b in enumerate(spec.blends):
                    report.rows.append(CellRow(rep, fold, at, ac, b, float(acc[ai, bi])))
    return report


# ---------------------------------------------------------------------------
# saturation scans

@dataclass(frozen=True)
class SaturationRow:
    class_name: str
    component: int
    size: int
    saturation: int | None
    mean_transient: np.ndarray
    mean_cycle: np.ndarray


def saturation_scan(
    g: ClassNetwork, mu_max: int | None = None
) -> list[SaturationRow]:
    """Walk profiles and saturation points for every component of a network."""
    from .walker import saturation_point, walk_profile

    out = []
    for comp in range(g.component_count):
        verts = g.component_vertices(comp)
        names = {g.vertex_class[v] for v in verts}
        name = "+".join(sorted(g.class_names[c] for c in names))
        top = mu_max if mu_max is not None else len(verts)
        prof = walk_profile(g, comp, top)
        out.append(
            SaturationRow(
                class_name=name,
                component=comp,
                size=len(verts),
                saturation=saturation_point(prof),
                mean_transient=prof.mean_transient,
                mean_cycle=prof.mean_cycle,
            )
        )
    return out
