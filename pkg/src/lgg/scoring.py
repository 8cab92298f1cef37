"""Generalization scores from per-layer label variation.

A score run repeats, for each of ``n_graphs`` independently seeded graphs:

1. pick vertices (class-balanced original samples, mixup-augmented
   samples, or half of each),
2. for every required depth, build a latent geometry graph on that
   layer's embeddings of the picked vertices,
3. compute the normalized label variation sigma_hat per depth,
4. reduce the per-depth values to one method score:
   vr  = (|s3 - s2| + |s2 - s1|) / 2   over depths 1..3,
   wcv = max(s1, s2, s3)               over depths 1..3,
   vpm = s2                            (penultimate layer only).

The final score is the median over the per-graph scores (mean of the two
central values when the count is even). Everything downstream of (seed,
preset, dataset) is deterministic and independent of scheduling: graph g
draws only from its own SplitMix64 stream seeded with seed XOR g.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from .graph import GraphConfig, build_lgg
from .io import Dataset, one_hot
from .mixup import MixupPlan, make_plan, mix_rows
from .rng import SplitMix64, graph_stream
from .validation import check_hard_labels
from .variation import _variation_terms

METHODS = ("vr", "wcv", "vpm")
VERTEX_POLICIES = ("original", "mixed", "both")


class SampleShortfallWarning(UserWarning):
    """A class had fewer samples than its quota; all available were taken."""


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScorePreset:
    """One score method plus the graph recipe used to compute it."""

    method: str
    n_graphs: int
    graph: GraphConfig
    alpha: float | None = None
    use_mixup: bool = False
    vertex_policy: str = "original"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not isinstance(self.n_graphs, (int, np.integer)) or self.n_graphs < 1:
            raise ValueError(f"n_graphs must be >= 1, got {self.n_graphs!r}")
        if self.vertex_policy not in VERTEX_POLICIES:
            raise ValueError(
                f"vertex_policy must be one of {VERTEX_POLICIES}, "
                f"got {self.vertex_policy!r}"
            )
        if self.use_mixup:
            if self.alpha is None or self.alpha <= 0:
                raise ValueError("mixup presets need alpha > 0")
            if self.vertex_policy == "original":
                raise ValueError(
                    "use_mixup with vertex_policy 'original' mixes nothing; "
                    "use 'mixed' or 'both'"
                )
        elif self.vertex_policy != "original":
            raise ValueError(
                f"vertex_policy {self.vertex_policy!r} requires use_mixup"
            )

    @property
    def depths_required(self) -> tuple[int, ...]:
        """Depths (from the end) whose sigma values the method consumes."""
        return (2,) if self.method == "vpm" else (1, 2, 3)

    def to_dict(self) -> dict:
        g = self.graph
        return {
            "method": self.method,
            "n_graphs": int(self.n_graphs),
            "kernel": g.kernel,
            "k": int(g.k),
            "binarize": bool(g.binarize),
            "symmetrize": bool(g.symmetrize),
            "normalize": bool(g.normalize),
            "gamma": g.gamma,
            "alpha": self.alpha,
            "use_mixup": bool(self.use_mixup),
            "vertex_policy": self.vertex_policy,
        }


def builtin_preset(name: str) -> ScorePreset:
    """The four published hyperparameter rows, by name.

    vr        : 11 graphs, cosine, k=20, weighted, symmetrized, unnormalized
    wcv       : 1 graph, RBF, k=1, weighted, symmetrized, normalized
    vpm       : 80 graphs, RBF, k=1, binarized, directed, normalized, mixup a=2
    vpm_final : vpm with a single graph
    """
    key = name.strip().lower().replace("-", "_")
    if key == "vr":
        return ScorePreset(
            method="vr",
            n_graphs=11,
            graph=GraphConfig(
                kernel="cosine", k=20, binarize=False, symmetrize=True,
                normalize=False,
            ),
        )
    if key == "wcv":
        return ScorePreset(
            method="wcv",
            n_graphs=1,
            graph=GraphConfig(
                kernel="rbf", k=1, binarize=False, symmetrize=True,
                normalize=True,
            ),
        )
    if key in ("vpm", "vpm_final"):
        return ScorePreset(
            method="vpm",
            n_graphs=1 if key == "vpm_final" else 80,
            graph=GraphConfig(
                kernel="rbf", k=1, binarize=True, symmetrize=False,
                normalize=True,
            ),
            alpha=2.0,
            use_mixup=True,
            vertex_policy="mixed",
        )
    raise ValueError(
        f"unknown preset {name!r}; expected one of vr, wcv, vpm, vpm_final"
    )


# ---------------------------------------------------------------------------
# Vertex sampling
# ---------------------------------------------------------------------------

def sample_vertices(labels, num_classes: int, target: int, rng: SplitMix64) -> np.ndarray:
    """Class-balanced sample of row indices, |result| = max(target, C) ideally.

    Per-class quota is max(1, floor(target / C)); when C < target, the
    remainder target - quota*C goes one extra to classes in ascending
    order. A class with fewer rows than its quota contributes everything
    it has and a SampleShortfallWarning reports the deficit. Sampling is
    without replacement within each class.
    """
    if target < 1:
        raise ValueError(f"target must be >= 1, got {target}")
    y = check_hard_labels(labels, num_classes)
    quota = max(1, target // num_classes)
    extras = target - quota * num_classes if num_classes < target else 0
    picks = []
    for c in range(num_classes):
        members = np.flatnonzero(y == c)
        if members.size == 0:
            raise ValueError(f"class {c} has no samples")
        want = quota + (1 if c < extras else 0)
        if members.size < want:
            warnings.warn(
                f"class {c} has {members.size} samples, quota is {want}; "
                "taking all of them",
                SampleShortfallWarning,
                stacklevel=2,
            )
            want = members.size
        picks.append(rng.choose(members, want))
    return np.concatenate(picks).astype(np.int64)


# ---------------------------------------------------------------------------
# Per-graph vertex selection (original / mixed / both)
# ---------------------------------------------------------------------------

def _mixed_selection(
    dataset: Dataset,
    depths: tuple[int, ...],
    alpha: float,
    target: int,
    stream: SplitMix64,
) -> tuple[dict[int, np.ndarray], np.ndarray]:
    """Pick ``target`` mixup rows: from the precomputed pool when the
    dataset carries one, otherwise by mixing raw inputs through the
    dataset's embedder callback."""
    pool = dataset.mixed
    if pool is not None:
        missing = [d for d in depths if d not in pool.layers]
        if missing:
            raise ValueError(
                f"mixed embeddings missing depth_from_end {missing}; "
                f"pool has {sorted(pool.layers)}"
            )
        take = min(target, pool.size)
        if take < target:
            warnings.warn(
                f"mixed pool has {pool.size} rows, target is {target}; "
                "taking all of them",
                SampleShortfallWarning,
                stacklevel=2,
            )
        rows = stream.choose(np.arange(pool.size, dtype=np.int64), take)
        embs = {d: pool.layers[d][rows] for d in depths}
        return embs, pool.soft_labels[rows]
    if dataset.embedder is not None and dataset.inputs is not None:
        source = sample_vertices(dataset.labels, dataset.num_classes, target, stream)
        plan = make_plan(target, source.size, alpha, stream.next_uint64())
        mixed_inputs = mix_rows(dataset.inputs[source], plan)
        taps = dataset.embedder(mixed_inputs)
        missing = [d for d in depths if d not in taps]
        if missing:
            raise ValueError(
                f"embedder taps missing depth_from_end {missing}; "
                f"got {sorted(taps)}"
            )
        soft = mix_rows(one_hot(dataset.labels[source], dataset.num_classes), plan)
        return {d: np.asarray(taps[d], dtype=np.float64) for d in depths}, soft
    raise ValueError(
        "mixup scoring needs mixed embeddings: add a mixup section to the "
        "manifest (run the exporter with a plan file) or attach an embedder "
        "callback to the dataset"
    )


def _select_vertices(
    dataset: Dataset,
    preset: ScorePreset,
    target: int,
    stream: SplitMix64,
) -> tuple[dict[int, np.ndarray], np.ndarray]:
    """Return (embeddings-by-depth, label matrix) for one graph build."""
    depths = preset.depths_required
    missing = [d for d in depths if d not in dataset.layers]
    if missing:
        raise ValueError(
            f"dataset is missing layers at depth_from_end {missing}; "
            f"method {preset.method!r} needs depths {list(depths)}, "
            f"dataset has {dataset.depths()}"
        )
    if preset.vertex_policy == "original":
        idx = sample_vertices(dataset.labels, dataset.num_classes, target, stream)
        embs = {d: dataset.layers[d][idx] for d in depths}
        return embs, one_hot(dataset.labels[idx], dataset.num_classes)
    if preset.vertex_policy == "mixed":
        return _mixed_selection(dataset, depths, preset.alpha, target, stream)
    # both: class-balanced originals for half the budget, mixed for the rest
    n_orig = target // 2
    idx = sample_vertices(dataset.labels, dataset.num_classes, n_orig, stream)
    mixed_embs, mixed_y = _mixed_selection(
        dataset, depths, preset.alpha, target - n_orig, stream
    )
    embs = {
        d: np.vstack([dataset.layers[d][idx], mixed_embs[d]]) for d in depths
    }
    Y = np.vstack([one_hot(dataset.labels[idx], dataset.num_classes), mixed_y])
    return embs, Y


# ---------------------------------------------------------------------------
# Scores
# ---------------------------------------------------------------------------

def score_vr(sigma1: float, sigma2: float, sigma3: float) -> float:
    """Average rate of change across the last three depths."""
    return (abs(sigma3 - sigma2) + abs(sigma2 - sigma1)) / 2.0


def score_wcv(sigma1: float, sigma2: float, sigma3: float) -> float:
    """Worst (largest) variation across the last three depths."""
    return max(sigma1, sigma2, sigma3)


def score_vpm(sigma2: float) -> float:
    """Penultimate-layer variation on mixup vertices; the value itself."""
    return sigma2


def _method_score(method: str, sigma: dict[int, float]) -> float:
    if method == "vpm":
        return score_vpm(sigma[2])
    if method == "vr":
        return score_vr(sigma[1], sigma[2], sigma[3])
    return score_wcv(sigma[1], sigma[2], sigma[3])


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GraphScore:
    """One graph's per-depth variation values and its method score.

    ``sigma`` holds normalized values; ``raw_sigma`` and ``weight`` keep
    the unnormalized quadratic form and total edge weight per depth
    (raw_sigma = sigma * weight), so either normalization convention can
    be recovered from the report.
    """

    sigma: dict[int, float]
    raw_sigma: dict[int, float]
    weight: dict[int, float]
    score: float

    def to_dict(self) -> dict:
        return {
            "sigma": {str(d): self.sigma[d] for d in sorted(self.sigma)},
            "raw_sigma": {str(d): self.raw_sigma[d] for d in sorted(self.raw_sigma)},
            "weight": {str(d): self.weight[d] for d in sorted(self.weight)},
            "score": self.score,
        }


@dataclass(frozen=True)
class ScoreReport:
    method: str
    seed: int
    preset: ScorePreset
    graphs: tuple[GraphScore, ...]
    final: float

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "seed": int(self.seed),
            "preset": self.preset.to_dict(),
            "graphs": [g.to_dict() for g in self.graphs],
            "final": self.final,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")


def _median(values: list[float]) -> float:
    s = sorted(values)
    n = len(s)
    if n % 2:
        return s[n // 2]
    return (s[n // 2 - 1] + s[n // 2]) / 2.0


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------

def _graph_score(
    dataset: Dataset, preset: ScorePreset, seed: int, g: int, target: int
) -> GraphScore:
    stream = graph_stream(seed, g)
    embs, Y = _select_vertices(dataset, preset, target, stream)
    sigma, raw, weight = {}, {}, {}
    for d in preset.depths_required:
        G = build_lgg(embs[d], preset.graph)
        s, w = _variation_terms(G, Y)
        raw[d] = s
        weight[d] = w
        sigma[d] = 0.0 if w == 0.0 else s / w
    return GraphScore(
        sigma=sigma, raw_sigma=raw, weight=weight,
        score=_method_score(preset.method, sigma),
    )


def run_score(
    dataset: Dataset, preset: ScorePreset, seed: int = 0, target: int = 500
) -> ScoreReport:
    """Score a dataset: n_graphs independent graphs, median of their scores."""
    graphs = []
    for g in range(preset.n_graphs):
        try:
            graphs.append(_graph_score(dataset, preset, seed, g, target))
        except Exception as exc:
            raise RuntimeError(f"graph {g} of {preset.n_graphs}: {exc}") from exc
    return ScoreReport(
        method=preset.method,
        seed=int(seed),
        preset=preset,
        graphs=tuple(graphs),
        final=_median([g.score for g in graphs]),
    )


def sigma_for_layer(
    dataset: Dataset,
    depth: int,
    preset: ScorePreset,
    seed: int = 0,
    target: int = 500,
    plan: MixupPlan | None = None,
) -> float:
    """Normalized label variation of one layer under a preset's recipe.

    With an explicit ``plan``, mixup rows are exactly the plan's pairs
    over the full dataset (the exporter parity path); otherwise vertex
    selection follows the preset's policy with a fresh stream.
    """
    stream = graph_stream(seed, 0)
    if plan is not None:
        if not preset.use_mixup:
            raise ValueError("a mixup plan was given but the preset has no mixup")
        if dataset.embedder is None or dataset.inputs is None:
            raise ValueError(
                "scoring against an explicit plan needs raw inputs and an "
                "embedder callback on the dataset"
            )
        mixed_inputs = mix_rows(dataset.inputs, plan)
        taps = dataset.embedder(mixed_inputs)
        if depth not in taps:
            raise ValueError(
                f"embedder taps missing depth_from_end [{depth}]; got {sorted(taps)}"
            )
        emb = np.asarray(taps[depth], dtype=np.float64)
        Y = mix_rows(one_hot(dataset.labels, dataset.num_classes), plan)
    elif preset.vertex_policy == "original":
        if depth not in dataset.layers:
            raise ValueError(
                f"dataset is missing layer at depth_from_end {depth}; "
                f"dataset has {dataset.depths()}"
            )
        idx = sample_vertices(dataset.labels, dataset.num_classes, target, stream)
        emb = dataset.layers[depth][idx]
        Y = one_hot(dataset.labels[idx], dataset.num_classes)
    else:
        embs, Y = _mixed_selection(dataset, (depth,), preset.alpha, target, stream)
        emb = embs[depth]
    G = build_lgg(emb, preset.graph)
    s, w = _variation_terms(G, Y)
    return 0.0 if w == 0.0 else s / w


# ---------------------------------------------------------------------------
# Estimator wrapper
# ---------------------------------------------------------------------------

class GeneralizationScorer(BaseEstimator):
    """Estimator facade over run_score.

    ``method`` names a preset row ("vr", "wcv", "vpm", "vpm_final"); any
    other constructor argument left at None inherits that row's value.
    ``fit`` computes the report; the headline number lands in ``score_``.
    """

    def __init__(
        self,
        method: str = "vpm",
        n_graphs: int | None = None,
        kernel: str | None = None,
        k: int | None = None,
        binarize: bool | None = None,
        symmetrize: bool | None = None,
        normalize: bool | None = None,
        gamma: float | None = None,
        alpha: float | None = None,
        vertex_policy: str | None = None,
        seed: int = 0,
        target: int = 500,
    ):
        self.method = method
        self.n_graphs = n_graphs
        self.kernel = kernel
        self.k = k
        self.binarize = binarize
        self.symmetrize = symmetrize
        self.normalize = normalize
        self.gamma = gamma
        self.alpha = alpha
        self.vertex_policy = vertex_policy
        self.seed = seed
        self.target = target

    def _preset(self) -> ScorePreset:
        base = builtin_preset(self.method)

        def pick(mine, theirs):
            return theirs if mine is None else mine

        graph = GraphConfig(
            kernel=pick(self.kernel, base.graph.kernel),
            k=pick(self.k, base.graph.k),
            binarize=pick(self.binarize, base.graph.binarize),
            symmetrize=pick(self.symmetrize, base.graph.symmetrize),
            normalize=pick(self.normalize, base.graph.normalize),
            gamma=pick(self.gamma, base.graph.gamma),
        )
        return ScorePreset(
            method=base.method,
            n_graphs=pick(self.n_graphs, base.n_graphs),
            graph=graph,
            alpha=pick(self.alpha, base.alpha),
            use_mixup=base.use_mixup,
            vertex_policy=pick(self.vertex_policy, base.vertex_policy),
        )

    def fit(self, X: Dataset, y=None):
        report = run_score(X, self._preset(), seed=self.seed, target=self.target)
        self.report_ = report
        self.score_ = report.final
        return self

    def score_dataset(self, X: Dataset) -> float:
        return self.fit(X).score_
