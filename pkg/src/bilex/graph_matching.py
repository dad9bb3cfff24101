"""The graph framing: similarity graphs and seeded Frank-Wolfe matching.

Matching two weighted graphs while holding s known vertex pairs fixed
means minimizing ``||Gx - Q Gy Q^T||_F^2`` over the block permutations
``Q = diag(I_s, P)``, P ranging over permutations of the n-s free
vertices. Expanding the norm shows this equals maximizing the trace
form ``tr(Gx^T Q Gy Q^T)``, which is solved approximately by
Frank-Wolfe over the doubly-stochastic relaxation: each step linearizes
the objective, solves a LAP for the best vertex direction, takes an
exact line-search step (the objective is quadratic along a segment), and
the final interior point is projected to a permutation by one more LAP.

Seed pairs occupy indices 0..s-1 of both graphs and always appear in the
output (hard seeding). The solved part is one-to-one by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assignment import solve_lap
from .hypotheses import HypothesisSet, Matching

INIT_MODES = ("barycenter", "randomized")


@dataclass(frozen=True)
class SimilarityGraph:
    """Symmetric matrix of pairwise inner products, plus the row order.

    ``order[i]`` is the embedding-row index behind graph vertex i; the
    diagonal holds squared row norms (all ones after normalization).
    """

    g: np.ndarray
    order: tuple[int, ...]

    def __post_init__(self):
        g = np.asarray(self.g, dtype=np.float64)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "order", tuple(int(i) for i in self.order))
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("graph matrix must be square")
        if len(self.order) != g.shape[0]:
            raise ValueError("order length must match matrix size")
        if g.size and np.abs(g - g.T).max() > 1e-9:
            raise ValueError("graph matrix must be symmetric within 1e-9")

    @property
    def n(self) -> int:
        return int(self.g.shape[0])


def build_graph(vectors: np.ndarray, order=None) -> SimilarityGraph:
    """Gram matrix of the selected embedding rows: g[i][j] = <row_i, row_j>."""
    vectors = np.asarray(vectors, dtype=np.float64)
    if order is None:
        order = range(vectors.shape[0])
    order = [int(i) for i in order]
    if any(i < 0 or i >= vectors.shape[0] for i in order):
        raise IndexError("order contains out-of-range row indices")
    if len(set(order)) != len(order):
        raise ValueError("order contains repeated row indices")
    rows = vectors[order]
    g = rows @ rows.T
    g = (g + g.T) / 2.0  # exact symmetry despite float matmul noise
    return SimilarityGraph(g=g, order=tuple(order))


def _blocks(matrix: np.ndarray, s: int):
    return matrix[:s, :s], matrix[:s, s:], matrix[s:, :s], matrix[s:, s:]


def trace_objective(gx: SimilarityGraph, gy: SimilarityGraph, s: int, p: np.ndarray) -> float:
    """tr(Gx^T Q Gy Q^T) with Q = diag(I_s, P), for a doubly-stochastic P."""
    a11, a12, a21, a22 = _blocks(gx.g, s)
    b11, b12, b21, b22 = _blocks(gy.g, s)
    p = np.asarray(p, dtype=np.float64)
    constant = a21 @ b21.T + a12.T @ b12
    return float((a11 * b11).sum() + (p * constant).sum() + (a22 * (p @ b22 @ p.T)).sum())


def trace_gradient(gx: SimilarityGraph, gy: SimilarityGraph, s: int, p: np.ndarray) -> np.ndarray:
    """Gradient of :func:`trace_objective` with respect to the free block P."""
    a11, a12, a21, a22 = _blocks(gx.g, s)
    b11, b12, b21, b22 = _blocks(gy.g, s)
    p = np.asarray(p, dtype=np.float64)
    return a21 @ b21.T + a12.T @ b12 + a22 @ p @ b22.T + a22.T @ p @ b22


def _best_step(a: float, b: float) -> float:
    """Argmax of a*t^2 + b*t over [0, 1], preferring the smaller optimum."""
    candidates = [0.0, 1.0]
    if a < 0.0:
        critical = -b / (2.0 * a)
        if 0.0 < critical < 1.0:
            candidates.append(critical)
    values = [a * t * t + b * t for t in candidates]
    return candidates[int(np.argmax(values))]


def _random_doubly_stochastic(rng: np.random.Generator, m: int) -> np.ndarray:
    """Sinkhorn-balanced random matrix, averaged with the barycenter.

    Starting Frank-Wolfe at, or too close to, a permutation vertex makes
    the linearization fix that vertex immediately, so randomized starts
    stay well inside the polytope.
    """
    k = rng.uniform(size=(m, m)) + 1e-3
    for _ in range(1000):
        k /= k.sum(axis=1, keepdims=True)
        k /= k.sum(axis=0, keepdims=True)
        if np.abs(k.sum(axis=1) - 1.0).max() < 1e-9:
            break
    return (np.full((m, m), 1.0 / m) + k) / 2.0


def sgm(
    gx: SimilarityGraph,
    gy: SimilarityGraph,
    s: int,
    rng: np.random.Generator,
    max_iters: int = 30,
    eps: float = 0.03,
    shuffle_input: bool = True,
    init: str = "barycenter",
    history: list | None = None,
) -> Matching:
    """Seeded graph matching by Frank-Wolfe over doubly-stochastic matrices.

    Seeds must occupy indices 0..s-1 in both graph orders. When
    ``shuffle_input`` is on, the non-seed rows/columns of ``gy`` are
    randomly relabeled before solving and the relabeling is inverted on
    the returned matching; this removes index-order bias from LAP
    tie-breaking. ``init`` selects the starting point: the flat
    barycenter (default, deterministic) or a random interior point,
    the barycenter averaged with a Sinkhorn-balanced random matrix.

    Iteration stops when ``||P_next - P||_F < eps`` or after
    ``max_iters`` steps. If ``history`` is a list, one record per
    iteration is appended (objective, step size, iterate delta).
    """
    if gx.n != gy.n:
        raise ValueError(f"graph sizes differ: {gx.n} vs {gy.n}")
    if not 0 <= s < gx.n:
        raise ValueError(f"seed count {s} out of range for n={gx.n}")
    if max_iters < 1:
        raise ValueError("max_iters must be positive")
    if init not in INIT_MODES:
        raise ValueError(f"init must be one of {INIT_MODES}, got {init!r}")

    n = gx.n
    m = n - s
    a = gx.g
    b = gy.g

    sigma = None
    if shuffle_input:
        sigma = rng.permutation(m)
        full = np.concatenate([np.arange(s), s + sigma])
        b = b[np.ix_(full, full)]

    a11, a12, a21, a22 = _blocks(a, s)
    b11, b12, b21, b22 = _blocks(b, s)
    constant = a21 @ b21.T + a12.T @ b12
    fixed_term = float((a11 * b11).sum())

    if init == "barycenter":
        p = np.full((m, m), 1.0 / m)
    else:
        p = _random_doubly_stochastic(rng, m)

    for iteration in range(1, max_iters + 1):
        grad = constant + a22 @ p @ b22.T + a22.T @ p @ b22
        direction = solve_lap(grad, maximize=True).perm
        q = np.zeros((m, m))
        q[np.arange(m), direction] = 1.0
        step_dir = q - p
        quad = float((a22 * (step_dir @ b22 @ step_dir.T)).sum())
        lin = float((grad * step_dir).sum())
        alpha = _best_step(quad, lin)
        p_next = p + alpha * step_dir
        delta = float(np.linalg.norm(p_next - p))
        if history is not None:
            objective = fixed_term + float(
                (p_next * constant).sum() + (a22 * (p_next @ b22 @ p_next.T)).sum()
            )
            history.append(
                {
                    "iteration": iteration,
                    "alpha": alpha,
                    "delta": delta,
                    "objective": objective,
                }
            )
        p = p_next
        if delta < eps:
            break

    projected = solve_lap(p, maximize=True).perm
    solved = sigma[projected] if sigma is not None else projected
    perm = np.concatenate([np.arange(s), s + solved])
    return Matching(perm=perm, seed_count=s)


@dataclass(frozen=True)
class SoftMatchDistribution:
    """Empirical match distribution from repeated randomized SGM runs."""

    counts: dict[int, dict[int, int]]
    runs: int

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be positive")
        for src, per_target in self.counts.items():
            total = sum(per_target.values())
            if total != self.runs:
                raise ValueError(
                    f"counts for source {src} sum to {total}, expected {self.runs}"
                )

    def probability(self, src: int, tgt: int) -> float:
        return self.counts.get(src, {}).get(tgt, 0) / self.runs


def _child_seed(master, index: int) -> np.random.SeedSequence:
    if isinstance(master, np.random.SeedSequence):
        return np.random.SeedSequence(
            entropy=master.entropy, spawn_key=tuple(master.spawn_key) + (index,)
        )
    return np.random.SeedSequence(entropy=master, spawn_key=(index,))


def soft_sgm(
    gx: SimilarityGraph,
    gy: SimilarityGraph,
    s: int,
    runs: int = 10,
    master_seed=0,
    max_iters: int = 30,
    eps: float = 0.03,
    shuffle_input: bool = True,
) -> SoftMatchDistribution:
    """Tally matches over ``runs`` SGM runs with random initializations.

    Run ``r`` draws its generator from a substream derived deterministically
    from ``master_seed`` and ``r`` alone, so results do not depend on
    scheduling and runs could execute in parallel.
    """
    if runs < 1:
        raise ValueError("runs must be positive")
    counts: dict[int, dict[int, int]] = {i: {} for i in range(gx.n)}
    for run in range(runs):
        rng = np.random.default_rng(_child_seed(master_seed, run))
        matching = sgm(
            gx,
            gy,
            s,
            rng,
            max_iters=max_iters,
            eps=eps,
            shuffle_input=shuffle_input,
            init="randomized",
        )
        for src, tgt in matching.pairs():
            per_target = counts[src]
            per_target[tgt] = per_target.get(tgt, 0) + 1
    return SoftMatchDistribution(counts=counts, runs=runs)


def top_k_from_distribution(dist: SoftMatchDistribution, k: int = 5) -> HypothesisSet:
    """Up to ``k`` targets per source by descending empirical probability.

    Ties break toward the smaller target index; sources that saw fewer
    than ``k`` distinct targets get shorter lists.
    """
    if k < 1:
        raise ValueError("k must be positive")
    entries = {}
    for src, per_target in dist.counts.items():
        ranked = sorted(per_target.items(), key=lambda item: (-item[1], item[0]))
        entries[src] = tuple(
            (tgt, count / dist.runs) for tgt, count in ranked[:k]
        )
    return HypothesisSet(entries)
