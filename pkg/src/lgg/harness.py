"""Model-zoo experiments: do the scores track the generalization gap?

``run_zoo`` trains a batch of small classifiers on one synthetic task
(varying width, depth, epochs, and label-noise rate), computes each
model's generalization gap and its vr/wcv/vpm scores on the training
data, and reports Kendall rank correlations tau(score, gap). Everything
derives from a single seed, so a zoo run is bit-reproducible; models
train concurrently but each one's randomness comes only from its own
derived seed, so the thread count cannot change any number.

``contrast_test`` is the two-model version of the same question: a
clean-label generalizer against a shuffled-label memorizer, both fit to
high train accuracy. On mixup vertices the memorizer's score should be
the larger one; on original training vertices both scores collapse to
near zero, which is exactly the failure mode the mixup variant exists
to avoid.
"""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .io import Dataset
from .refnet import (
    RefNetClassifier,
    accuracy,
    blob_task,
    forward_with_taps,
    gaussian_blobs,
    init_net,
    shuffle_labels,
    train_net,
)
from .rng import SplitMix64, mix_seed
from .scoring import (
    SampleShortfallWarning,
    ScorePreset,
    run_score,
    builtin_preset,
)

CSV_HEADER = "model_id,width,depth,epochs,noise,train_acc,test_acc,gap,vr,wcv,vpm"


# ---------------------------------------------------------------------------
# Rank correlation
# ---------------------------------------------------------------------------

def kendall_tau(a, b) -> float:
    """Kendall tau-b (tie-corrected) by direct pair counting.

    Quadratic in the input length, which is fine at zoo sizes. A constant
    input has no defined rank correlation and is rejected.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    n = a.shape[0]
    if n < 2:
        raise ValueError("need at least 2 observations")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("inputs must be finite")
    iu, ju = np.triu_indices(n, k=1)
    da = np.sign(a[iu] - a[ju])
    db = np.sign(b[iu] - b[ju])
    concordant_minus_discordant = float(np.sum(da * db))
    n0 = n * (n - 1) / 2.0
    ties_a = float(np.sum(da == 0.0))
    ties_b = float(np.sum(db == 0.0))
    denom = np.sqrt((n0 - ties_a) * (n0 - ties_b))
    if denom == 0.0:
        raise ValueError("rank correlation undefined: an input is constant")
    return float(concordant_minus_discordant / denom)


# ---------------------------------------------------------------------------
# Zoo definition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DataSpec:
    """Synthetic task shared by every model in a zoo run."""

    n_train: int = 600
    n_test: int = 600
    num_classes: int = 5
    dim: int = 20
    separation: float = 4.0

    def to_dict(self) -> dict:
        return {
            "n_train": self.n_train,
            "n_test": self.n_test,
            "classes": self.num_classes,
            "dim": self.dim,
            "separation": self.separation,
        }


@dataclass(frozen=True)
class ZooModel:
    """One model's training axes; noise is the label-shuffle fraction."""

    model_id: str
    width: int
    depth: int
    epochs: int
    noise: float


def _default_models() -> tuple[ZooModel, ...]:
    """The 12-model default zoo.

    Width, depth, and epoch variation lives in the clean-label block,
    where fit degree barely moves the gap. The noisy blocks hold
    high-capacity long-trained nets (two shapes, two training-seed
    replicates each) that all interpolate their noisy labels, so gap
    differences between models come from the noise rate rather than from
    how far training got. Mixing underfit and interpolating nets inside
    one noise block would pit the score against its known blind spot:
    at a fixed noise rate, fitting further raises the gap while pulling
    label variation down.
    """
    models = [
        ZooModel(f"w{w}_d{d}_e{e:02d}_n000", w, d, e, 0.0)
        for w, d, e in ((16, 3, 5), (16, 3, 50), (64, 4, 5), (64, 4, 50))
    ]
    for noise in (0.5, 1.0):
        for rep, (w, d) in enumerate(((64, 3), (64, 4), (64, 3), (64, 4))):
            models.append(
                ZooModel(
                    f"w{w}_d{d}_e50_n{int(noise * 100):03d}_r{rep // 2}",
                    w, d, 50, noise,
                )
            )
    return tuple(models)


DEFAULT_ZOO = _default_models()


def load_zoo_file(path) -> tuple[DataSpec, list[ZooModel]]:
    """Parse a zoo JSON file: {"data": {...}, "models": [{...}, ...]}."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or "models" not in doc:
        raise ValueError(f"{path}: zoo file needs a 'models' list")
    d = doc.get("data", {})
    data = DataSpec(
        n_train=int(d.get("n_train", 600)),
        n_test=int(d.get("n_test", 600)),
        num_classes=int(d.get("classes", 5)),
        dim=int(d.get("dim", 20)),
        separation=float(d.get("separation", 4.0)),
    )
    models = []
    for i, m in enumerate(doc["models"]):
        try:
            models.append(
                ZooModel(
                    model_id=str(m.get("id", f"m{i:02d}")),
                    width=int(m["width"]),
                    depth=int(m["depth"]),
                    epochs=int(m["epochs"]),
                    noise=float(m.get("noise", 0.0)),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}: bad model entry {i}: {exc}") from exc
    if not models:
        raise ValueError(f"{path}: zoo file has no models")
    return data, models


# ---------------------------------------------------------------------------
# Zoo execution
# ---------------------------------------------------------------------------

def _score_presets() -> dict[str, ScorePreset]:
    return {name: builtin_preset(name) for name in ("vr", "wcv", "vpm")}


def _lift_dead_rows(A: np.ndarray) -> np.ndarray:
    """Give all-zero rows a tiny shared direction.

    A sample can die at a rectifier layer (every unit off); its direction
    is undefined, which the cosine kernel rejects. Dead rows become the
    same near-zero vector: they count as mutually identical and nearly
    orthogonal to live rows, and RBF distances move by ~1e-12.
    """
    norms = np.linalg.norm(A, axis=1)
    if not np.any(norms == 0.0):
        return A
    A = A.copy()
    A[norms == 0.0] = 1e-12
    return A


def _net_dataset(net, X: np.ndarray, labels: np.ndarray, num_classes: int) -> Dataset:
    def embedder(Z):
        return {d: _lift_dead_rows(a) for d, a in forward_with_taps(net, Z)[1].items()}

    taps = embedder(X)
    return Dataset(
        layers=taps,
        labels=labels,
        num_classes=num_classes,
        layer_names={d: f"tap{d}" for d in taps},
        inputs=X,
        embedder=embedder,
    )


def _train_dataset(clf: RefNetClassifier, X_train: np.ndarray) -> Dataset:
    return _net_dataset(clf.net_, X_train, clf.train_labels_, clf.classes_.shape[0])


def _evaluate_model(
    model: ZooModel,
    index: int,
    data: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray],
    presets: dict[str, ScorePreset],
    seed: int,
    target: int,
) -> dict:
    X_train, y_train, X_test, y_test = data
    clf = RefNetClassifier(
        hidden_layer_sizes=(model.width,) * model.depth,
        epochs=model.epochs,
        seed=mix_seed(seed, 2, index),
        shuffle_fraction=model.noise,
    ).fit(X_train, y_train)
    train_acc = accuracy(clf.net_, X_train, clf.train_labels_)
    # The model's task is the noisy one, so the gap is measured against
    # test labels corrupted at the same rate (an independent draw);
    # otherwise models that underfit noisy labels score negative gaps.
    y_eval = (
        shuffle_labels(y_test, model.noise, seed=mix_seed(seed, 4, index))
        if model.noise
        else y_test
    )
    test_acc = accuracy(clf.net_, X_test, y_eval)
    dataset = _train_dataset(clf, X_train)
    row = {
        "model_id": model.model_id,
        "width": model.width,
        "depth": model.depth,
        "epochs": model.epochs,
        "noise": model.noise,
        "train_acc": train_acc,
        "test_acc": test_acc,
        "gap": train_acc - test_acc,
    }
    score_seed = mix_seed(seed, 3, index)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SampleShortfallWarning)
        for name, preset in presets.items():
            row[name] = run_score(dataset, preset, seed=score_seed, target=target).final
    return row


@dataclass(frozen=True)
class ZooResult:
    seed: int
    data: DataSpec
    rows: tuple[dict, ...]
    tau: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "data": self.data.to_dict(),
            "rows": list(self.rows),
            "tau": dict(self.tau),
        }

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for r in self.rows:
            lines.append(
                ",".join(
                    [
                        r["model_id"],
                        str(r["width"]),
                        str(r["depth"]),
                        str(r["epochs"]),
                        repr(float(r["noise"])),
                        repr(float(r["train_acc"])),
                        repr(float(r["test_acc"])),
                        repr(float(r["gap"])),
                        repr(float(r["vr"])),
                        repr(float(r["wcv"])),
                        repr(float(r["vpm"])),
                    ]
                )
            )
        return "\n".join(lines) + "\n"


def run_zoo(
    models: list[ZooModel] | tuple[ZooModel, ...] = DEFAULT_ZOO,
    data: DataSpec = DataSpec(),
    seed: int = 0,
    threads: int | None = None,
    target: int = 500,
    out_dir=None,
) -> ZooResult:
    """Train every model, score it, and correlate scores with gaps.

    Test accuracy for a noisy model is taken on test labels corrupted at
    the model's own noise rate (a fresh draw), keeping train and test on
    the same task. With ``out_dir`` set, writes results.csv and
    results.json there.
    """
    if not models:
        raise ValueError("zoo has no models")
    bundle = blob_task(
        data.n_train, data.n_test, data.num_classes, data.dim,
        separation=data.separation, seed=mix_seed(seed, 0),
    )
    presets = _score_presets()
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(_evaluate_model, m, i, bundle, presets, seed, target)
            for i, m in enumerate(models)
        ]
        rows = tuple(f.result() for f in futures)
    gaps = [r["gap"] for r in rows]
    tau = {name: kendall_tau([r[name] for r in rows], gaps) for name in presets}
    result = ZooResult(seed=int(seed), data=data, rows=rows, tau=tau)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.csv").write_text(result.to_csv(), encoding="utf-8")
        (out / "results.json").write_text(
            json.dumps(result.to_dict()) + "\n", encoding="utf-8"
        )
    return result


# ---------------------------------------------------------------------------
# Generalizer-vs-memorizer contrast
# ---------------------------------------------------------------------------

CONTRAST_DATA = DataSpec(n_train=240, n_test=240, num_classes=4, dim=16,
                         separation=4.0)


def _contrast_preset(use_mixup: bool, n_graphs: int) -> ScorePreset:
    base = builtin_preset("vpm")
    return ScorePreset(
        method="vpm",
        n_graphs=n_graphs,
        graph=base.graph,
        alpha=base.alpha if use_mixup else None,
        use_mixup=use_mixup,
        vertex_policy="mixed" if use_mixup else "original",
    )


def _fit_to_interpolation(
    X: np.ndarray,
    y_fit: np.ndarray,
    dims: tuple[int, ...],
    seed: int,
    chunk: int = 250,
    max_epochs: int = 2000,
    stop_acc: float = 0.995,
):
    """Train in chunks and keep the checkpoint with the best fit accuracy.

    Long plain-SGD runs on shuffled labels can pass through interpolation
    and then destabilize; keeping the best checkpoint within a fixed
    epoch budget makes the fixture robust to that without losing
    determinism. Returns (net, best accuracy on y_fit).
    """
    rng = SplitMix64(seed)
    net = init_net(dims, rng)
    best_net, best_acc = net.copy(), accuracy(net, X, y_fit)
    total = 0
    while total < max_epochs and best_acc < stop_acc:
        train_net(
            net, X, y_fit, epochs=chunk, batch_size=32,
            learning_rate=0.02, momentum=0.9, rng=rng,
        )
        total += chunk
        acc = accuracy(net, X, y_fit)
        if acc > best_acc:
            best_acc, best_net = acc, net.copy()
    return best_net, best_acc


def contrast_report(seed: int, n_graphs: int = 9, max_epochs: int = 2000) -> dict:
    """Train a generalizer and a memorizer, score both with and without mixup.

    Returns per-net train accuracies and the two vpm values per variant;
    the memorizing net is identical in shape but fits fully shuffled
    labels, so only the mixup variant should separate the pair. The nets
    carry a narrow middle layer: fitting 100% shuffled labels through an
    8-unit bottleneck forces the memorized structure into the penultimate
    representation, which is what makes the plain (no-mixup) variant
    collapse onto the generalizer's near-zero value.
    """
    X_train, y_train = gaussian_blobs(
        CONTRAST_DATA.n_train, CONTRAST_DATA.num_classes, CONTRAST_DATA.dim,
        separation=CONTRAST_DATA.separation, seed=mix_seed(seed, 0),
    )
    dims = (CONTRAST_DATA.dim, 64, 8, 64, CONTRAST_DATA.num_classes)
    fitted = {}
    for name, shuffle, tag in (("generalizer", 0.0, 2), ("memorizer", 1.0, 3)):
        net_seed = mix_seed(seed, tag)
        y_fit = (
            shuffle_labels(y_train, shuffle, seed=mix_seed(net_seed, 1))
            if shuffle else y_train
        )
        net, acc = _fit_to_interpolation(
            X_train, y_fit, dims, net_seed, max_epochs=max_epochs
        )
        fitted[name] = (net, y_fit, acc)
    report = {
        "seed": int(seed),
        "train_acc": {name: acc for name, (_, _, acc) in fitted.items()},
    }
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SampleShortfallWarning)
        for variant, use_mixup in (("mixup", True), ("plain", False)):
            preset = _contrast_preset(use_mixup, n_graphs)
            report[variant] = {
                name: run_score(
                    _net_dataset(net, X_train, y_fit, CONTRAST_DATA.num_classes),
                    preset,
                    seed=mix_seed(seed, 4),
                ).final
                for name, (net, y_fit, _) in fitted.items()
            }
    return report


def contrast_test(seed: int, use_mixup: bool = True) -> tuple[float, float]:
    """(generalizer vpm, memorizer vpm) for one seed."""
    report = contrast_report(seed)
    variant = report["mixup" if use_mixup else "plain"]
    return variant["generalizer"], variant["memorizer"]
