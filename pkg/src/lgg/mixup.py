"""Mixup plans: reproducible pairings with Beta-distributed blend factors.

A plan is an ordered list of (i, j, lambda) entries. Applying a plan to a
matrix produces one convex combination per entry,
``lambda * M[i] + (1 - lambda) * M[j]``; the same plan is applied to raw
inputs and to label matrices, so mixed inputs and their soft labels stay
paired. Pairing is uniform over ordered pairs with i != j, unrestricted
by class.

Plan file format (JSON)::

    {"alpha": float, "seed": int, "entries": [[i, j, lambda], ...]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import SplitMix64


@dataclass(frozen=True)
class MixupPlan:
    entries: tuple[tuple[int, int, float], ...]
    alpha: float
    seed: int

    def __post_init__(self):
        for i, j, lam in self.entries:
            if i < 0 or j < 0:
                raise ValueError(f"plan entry ({i}, {j}) has a negative index")
            if not 0.0 <= lam <= 1.0:
                raise ValueError(f"plan lambda {lam!r} outside [0, 1]")

    def __len__(self) -> int:
        return len(self.entries)

    def index_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self.entries:
            return (
                np.empty(0, dtype=np.int64),
                np.empty(0, dtype=np.int64),
                np.empty(0, dtype=np.float64),
            )
        i, j, lam = zip(*self.entries)
        return (
            np.array(i, dtype=np.int64),
            np.array(j, dtype=np.int64),
            np.array(lam, dtype=np.float64),
        )


def sample_beta(alpha: float, rng: SplitMix64) -> float:
    """One draw from Beta(alpha, alpha), strictly inside (0, 1)."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return rng.beta(alpha, alpha)


def make_plan(n_pairs: int, n_source: int, alpha: float, seed: int) -> MixupPlan:
    """Generate ``n_pairs`` uniform source pairings, fully determined by seed.

    Indices are uniform over [0, n_source) with i != j per entry.
    """
    if n_source < 2:
        raise ValueError(f"need at least 2 source samples, got {n_source}")
    if n_pairs < 0:
        raise ValueError("n_pairs must be >= 0")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    rng = SplitMix64(seed)
    entries = []
    for _ in range(n_pairs):
        i = rng.next_below(n_source)
        j = rng.next_below(n_source - 1)
        if j >= i:
            j += 1
        entries.append((i, j, sample_beta(alpha, rng)))
    return MixupPlan(entries=tuple(entries), alpha=float(alpha), seed=int(seed))


def mix_rows(M, plan: MixupPlan) -> np.ndarray:
    """Apply a plan to the rows of M: row t = lam_t*M[i_t] + (1-lam_t)*M[j_t]."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"M must be 2-D, got {M.ndim}-D")
    i, j, lam = plan.index_arrays()
    if len(plan) and max(int(i.max()), int(j.max())) >= M.shape[0]:
        bad = max(int(i.max()), int(j.max()))
        raise ValueError(f"plan index {bad} out of range for {M.shape[0]} rows")
    lam = lam[:, None]
    return lam * M[i] + (1.0 - lam) * M[j]


def save_plan(plan: MixupPlan, path) -> None:
    doc = {
        "alpha": plan.alpha,
        "seed": plan.seed,
        "entries": [[i, j, lam] for i, j, lam in plan.entries],
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_plan(path) -> MixupPlan:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ValueError(f"{path}: no such plan file") from None
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid plan JSON: {exc}") from None
    try:
        entries = tuple((int(i), int(j), float(lam)) for i, j, lam in doc["entries"])
        return MixupPlan(entries=entries, alpha=float(doc["alpha"]), seed=int(doc["seed"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{path}: malformed plan: {exc}") from None
