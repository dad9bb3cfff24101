"""Shared fixtures: planted-permutation corpora and on-disk file builders."""

from __future__ import annotations

import numpy as np
import pytest

from bilex import EmbeddingMatrix, ExperimentSpec, Lexicon, normalize


def make_planted(n=60, d=10, noise=0.0, seed=0):
    """A source space, a (possibly noisy) permuted copy, and the gold lexicon.

    Target row k holds the vector of source word rho[k], so the hidden
    matching is known exactly; both sides go through the standard
    normalization.
    """
    rng = np.random.default_rng(seed)
    base = rng.normal(size=(n, d))
    src = normalize(EmbeddingMatrix(tuple(f"s{i:03d}" for i in range(n)), base))
    rho = rng.permutation(n)
    tgt_rows = base[rho]
    if noise:
        tgt_rows = tgt_rows + noise * rng.normal(size=(n, d))
    tgt = normalize(EmbeddingMatrix(tuple(f"t{k:03d}" for k in range(n)), tgt_rows))
    inverse = np.empty(n, dtype=int)
    inverse[rho] = np.arange(n)
    lexicon = Lexicon(tuple((f"s{i:03d}", f"t{inverse[i]:03d}") for i in range(n)))
    return src, tgt, lexicon


def make_spec(**overrides) -> ExperimentSpec:
    """Spec with dummy paths for pipelines that get a prebuilt dataset."""
    values = dict(src_emb="-", tgt_emb="-", dictionary="-", seeds=15)
    values.update(overrides)
    return ExperimentSpec(**values)


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(d, d)))
    return q * np.sign(np.diag(r))


def write_vec(path, vocab, vectors) -> None:
    vectors = np.asarray(vectors, dtype=float)
    lines = [f"{len(vocab)} {vectors.shape[1]}"]
    for word, row in zip(vocab, vectors):
        lines.append(word + " " + " ".join(format(v, ".12g") for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_pairs(path, pairs) -> None:
    path.write_text(
        "".join(f"{s}\t{t}\n" for s, t in pairs), encoding="utf-8"
    )


@pytest.fixture
def diag4_files(tmp_path):
    """The worked 4x4 example as on-disk files.

    Mutually orthogonal, non-unit vectors whose Gram matrices are
    diag(2, 2, 3, 4) and diag(1, 3, 4, 2); the dictionary lists the
    known matching with (x1, y1) first so a seeds=1 split fixes it.
    """
    d = 4
    src_rows = np.diag([np.sqrt(2.0), np.sqrt(2.0), np.sqrt(3.0), 2.0])
    tgt_rows = np.diag([1.0, np.sqrt(3.0), 2.0, np.sqrt(2.0)])
    src_path = tmp_path / "diag4_src.vec"
    tgt_path = tmp_path / "diag4_tgt.vec"
    dict_path = tmp_path / "diag4_dict.tsv"
    write_vec(src_path, [f"x{i}" for i in range(1, 5)], src_rows)
    write_vec(tgt_path, [f"y{i}" for i in range(1, 5)], tgt_rows)
    write_pairs(dict_path, [("x1", "y1"), ("x2", "y4"), ("x3", "y2"), ("x4", "y3")])
    return src_path, tgt_path, dict_path


@pytest.fixture
def planted_files(tmp_path):
    """A planted-permutation corpus written as .vec and dictionary files."""

    def build(n=40, d=8, noise=0.0, seed=0):
        rng = np.random.default_rng(seed)
        base = rng.normal(size=(n, d))
        rho = rng.permutation(n)
        tgt_rows = base[rho] + (noise * rng.normal(size=(n, d)) if noise else 0.0)
        inverse = np.empty(n, dtype=int)
        inverse[rho] = np.arange(n)
        src_path = tmp_path / f"src_{seed}.vec"
        tgt_path = tmp_path / f"tgt_{seed}.vec"
        dict_path = tmp_path / f"dict_{seed}.tsv"
        write_vec(src_path, [f"s{i:03d}" for i in range(n)], base)
        write_vec(tgt_path, [f"t{k:03d}" for k in range(n)], tgt_rows)
        write_pairs(dict_path, [(f"s{i:03d}", f"t{inverse[i]:03d}") for i in range(n)])
        return src_path, tgt_path, dict_path

    return build
