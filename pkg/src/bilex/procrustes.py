"""The Euclidean framing: orthogonal maps, CSLS scoring, and extraction.

The closed-form solution of ``min ||X W - Y||_F`` over orthogonal W is
``W = U V^T`` where ``U S V^T`` is the SVD of ``X^T Y``. Extraction ranks
candidate targets for each mapped source row either by raw cosine or by
CSLS, the hubness-penalized similarity

    csls(x, y) = 2 cos(x, y) - avg_k(x) - avg_k(y)

where ``avg_k(v)`` is v's mean cosine to its k nearest neighbors in the
opposite space (k = 10 unless stated otherwise).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assignment import solve_lap
from .hypotheses import HypothesisSet, Matching

SCORERS = ("csls", "cosine")


@dataclass(frozen=True)
class OrthogonalMap:
    """A d x d orthogonal matrix applied on the right of row vectors."""

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        object.__setattr__(self, "w", w)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("map must be square")
        d = w.shape[0]
        if np.abs(w.T @ w - np.eye(d)).max() > 1e-8:
            raise ValueError("map is not orthogonal within 1e-8")
        if abs(abs(np.linalg.det(w)) - 1.0) > 1e-6:
            raise ValueError("determinant is not +/-1 within 1e-6")

    @property
    def dim(self) -> int:
        return int(self.w.shape[0])

    def apply(self, vectors: np.ndarray) -> np.ndarray:
        return np.asarray(vectors, dtype=np.float64) @ self.w


def solve_procrustes(src_seed: np.ndarray, tgt_seed: np.ndarray) -> OrthogonalMap:
    """Orthogonal map minimizing ``||src_seed @ W - tgt_seed||_F``.

    Both inputs are s x d matrices whose rows are paired seed vectors.
    No reflection constraint is imposed: det(W) may be -1.
    """
    src = np.asarray(src_seed, dtype=np.float64)
    tgt = np.asarray(tgt_seed, dtype=np.float64)
    if src.ndim != 2 or tgt.ndim != 2 or src.shape != tgt.shape:
        raise ValueError(f"seed matrices must share shape, got {src.shape} and {tgt.shape}")
    if src.shape[0] < 1:
        raise ValueError("at least one seed pair is required")
    u, _, vt = np.linalg.svd(src.T @ tgt)
    return OrthogonalMap(u @ vt)


@dataclass(frozen=True)
class CslsIndex:
    """Per-point mean cosine to the k nearest cross-space neighbors."""

    k: int
    src_avgs: np.ndarray
    tgt_avgs: np.ndarray

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")
        src_avgs = np.asarray(self.src_avgs, dtype=np.float64)
        tgt_avgs = np.asarray(self.tgt_avgs, dtype=np.float64)
        object.__setattr__(self, "src_avgs", src_avgs)
        object.__setattr__(self, "tgt_avgs", tgt_avgs)
        for avgs in (src_avgs, tgt_avgs):
            if avgs.size and (np.abs(avgs) > 1.0 + 1e-9).any():
                raise ValueError(
                    "neighborhood averages outside [-1, 1]; "
                    "rows must be unit-norm for cosine scoring"
                )


def build_csls_index(mapped_src: np.ndarray, tgt: np.ndarray, k: int = 10) -> CslsIndex:
    """Neighborhood averages for CSLS; rows must be unit-norm.

    ``src_avgs[i]`` is the mean cosine between mapped source row i and its
    k most similar target rows; ``tgt_avgs[j]`` is the symmetric quantity.
    """
    mapped_src = np.asarray(mapped_src, dtype=np.float64)
    tgt = np.asarray(tgt, dtype=np.float64)
    if k < 1:
        raise ValueError("k must be positive")
    if k > tgt.shape[0] or k > mapped_src.shape[0]:
        raise ValueError(
            f"k={k} exceeds a candidate set size "
            f"({mapped_src.shape[0]} sources, {tgt.shape[0]} targets)"
        )
    cosines = mapped_src @ tgt.T
    return CslsIndex(
        k=k,
        src_avgs=_top_k_row_mean(cosines, k),
        tgt_avgs=_top_k_row_mean(cosines.T, k),
    )


def _top_k_row_mean(matrix: np.ndarray, k: int) -> np.ndarray:
    n_cols = matrix.shape[1]
    if k >= n_cols:
        return matrix.mean(axis=1)
    top = np.partition(matrix, n_cols - k, axis=1)[:, n_cols - k :]
    return top.mean(axis=1)


def csls_score(i: int, j: int, cosines: np.ndarray, index: CslsIndex) -> float:
    """2 cos(i, j) minus both neighborhood averages."""
    if not (0 <= i < cosines.shape[0] and 0 <= j < cosines.shape[1]):
        raise IndexError(f"({i}, {j}) outside cosine matrix {cosines.shape}")
    return float(2.0 * cosines[i, j] - index.src_avgs[i] - index.tgt_avgs[j])


def csls_matrix(cosines: np.ndarray, index: CslsIndex) -> np.ndarray:
    """CSLS scores for every (source, target) pair at once."""
    return 2.0 * cosines - index.src_avgs[:, None] - index.tgt_avgs[None, :]


def _score_matrix(mapped_src, tgt, scorer: str, csls_k: int) -> np.ndarray:
    mapped_src = np.asarray(mapped_src, dtype=np.float64)
    tgt = np.asarray(tgt, dtype=np.float64)
    if tgt.shape[0] == 0:
        raise ValueError("candidate target set is empty")
    if scorer not in SCORERS:
        raise ValueError(f"scorer must be one of {SCORERS}, got {scorer!r}")
    cosines = mapped_src @ tgt.T
    if scorer == "cosine":
        return cosines
    # Small candidate sets clamp k so desk-scale runs still work.
    k = min(csls_k, tgt.shape[0], mapped_src.shape[0])
    return csls_matrix(cosines, build_csls_index(mapped_src, tgt, k))


def extract_hypotheses(
    mapped_src: np.ndarray,
    tgt: np.ndarray,
    top_k: int = 5,
    scorer: str = "csls",
    csls_k: int = 10,
) -> HypothesisSet:
    """Top ``top_k`` targets per source row, descending score.

    Ties break toward the smaller target index. Several sources may share
    a target (many-to-one is allowed); lists are shorter than ``top_k``
    only when the candidate set is.
    """
    if top_k < 1:
        raise ValueError("top_k must be positive")
    scores = _score_matrix(mapped_src, tgt, scorer, csls_k)
    n_src, n_tgt = scores.shape
    k = min(top_k, n_tgt)
    partitioned = k < n_tgt
    if partitioned:
        candidates = np.argpartition(-scores, k - 1, axis=1)
    entries = {}
    full = np.arange(n_tgt)
    for i in range(n_src):
        if partitioned:
            cand = candidates[i, :k]
            # A score tie across the partition boundary could exclude a
            # smaller index; rank the whole row in that case.
            if scores[i, cand].min() <= scores[i, candidates[i, k:]].max():
                cand = full
        else:
            cand = full
        vals = scores[i, cand]
        order = np.lexsort((cand, -vals))[:k]  # descending score, then index
        entries[i] = tuple((int(cand[o]), float(vals[o])) for o in order)
    return HypothesisSet(entries)


def extract_one_to_one(
    mapped_src: np.ndarray,
    tgt: np.ndarray,
    scorer: str = "csls",
    csls_k: int = 10,
) -> Matching:
    """Globally optimal one-to-one extraction: maximize total score by LAP."""
    mapped_src = np.asarray(mapped_src, dtype=np.float64)
    tgt = np.asarray(tgt, dtype=np.float64)
    if mapped_src.shape[0] != tgt.shape[0]:
        raise ValueError(
            f"one-to-one extraction needs equal sizes, got "
            f"{mapped_src.shape[0]} and {tgt.shape[0]}"
        )
    scores = _score_matrix(mapped_src, tgt, scorer, csls_k)
    return Matching(perm=solve_lap(scores, maximize=True).perm, seed_count=0)
