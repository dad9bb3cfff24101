"""Lexicon-induction metrics: p@1 and precision/recall/F1 at 5.

All metrics are computed over test words only; seed words never enter
numerator or denominator. Percentages are kept at full precision here
and rounded to one decimal only for display.
"""

from __future__ import annotations

from dataclasses import dataclass

from .hypotheses import HypothesisSet
from .lexicon import Lexicon


@dataclass(frozen=True)
class MetricsReport:
    p_at_1: float
    precision_at_5: float
    recall_at_5: float
    f1_at_5: float
    total_hyps: int
    test_size: int
    correct_hyps: int

    def rounded(self) -> dict:
        """Percentages to one decimal, matching tabular reporting."""
        return {
            "p_at_1": round(self.p_at_1, 1),
            "precision_at_5": round(self.precision_at_5, 1),
            "recall_at_5": round(self.recall_at_5, 1),
            "f1_at_5": round(self.f1_at_5, 1),
            "total_hyps": self.total_hyps,
            "test_size": self.test_size,
            "correct_hyps": self.correct_hyps,
        }

    def to_dict(self) -> dict:
        return {
            "p_at_1": self.p_at_1,
            "precision_at_5": self.precision_at_5,
            "recall_at_5": self.recall_at_5,
            "f1_at_5": self.f1_at_5,
            "total_hyps": self.total_hyps,
            "test_size": self.test_size,
            "correct_hyps": self.correct_hyps,
        }


def _gold_map(gold_test: Lexicon) -> dict:
    if len(gold_test) == 0:
        raise ValueError("test set is empty")
    if not gold_test.is_one_to_one():
        raise ValueError("gold test lexicon must be one-to-one")
    return dict(gold_test.pairs)


def _tally(hyps: HypothesisSet, gold: dict):
    """(total emitted pairs, correct pairs, covered test words)."""
    total = 0
    correct_pairs = 0
    covered = 0
    for src, tgt in gold.items():
        ranked = hyps.entries.get(src, ())
        if len(ranked) > 5:
            raise ValueError(f"hypothesis list for {src!r} longer than 5")
        total += len(ranked)
        matches = sum(1 for cand, _ in ranked if cand == tgt)
        correct_pairs += matches
        if matches:
            covered += 1
    # Lists never repeat a target, so with one-to-one gold each covered
    # word contributes exactly one correct pair.
    assert correct_pairs == covered, "duplicate gold hit inside one list"
    return total, correct_pairs, covered


def p_at_1(hyps: HypothesisSet, gold_test: Lexicon) -> float:
    """Percentage of test words whose top hypothesis is the gold target.

    Test words with no hypothesis count as wrong.
    """
    gold = _gold_map(gold_test)
    top = hyps.top1()
    hits = sum(1 for src, tgt in gold.items() if top.get(src) == tgt)
    return 100.0 * hits / len(gold)


def prf_at_5(hyps: HypothesisSet, gold_test: Lexicon):
    """(precision, recall, f1, total_hyps) over test-word hypothesis lists.

    Precision counts correct (source, target) pairs over all emitted
    pairs; recall counts test words whose gold target appears anywhere
    in their list; F1 is the harmonic mean (zero when both are zero).
    """
    gold = _gold_map(gold_test)
    total, correct_pairs, covered = _tally(hyps, gold)
    precision = 100.0 * correct_pairs / total if total else 0.0
    recall = 100.0 * covered / len(gold)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1, total


def metrics_report(hyps: HypothesisSet, gold_test: Lexicon) -> MetricsReport:
    """Full report; hypothesis lists are truncated to 5 for the @5 metrics."""
    gold = _gold_map(gold_test)
    truncated = HypothesisSet(
        {src: ranked[:5] for src, ranked in hyps.entries.items()}
    )
    total, correct_pairs, _ = _tally(truncated, gold)
    precision, recall, f1, _ = prf_at_5(truncated, gold_test)
    return MetricsReport(
        p_at_1=p_at_1(hyps, gold_test),
        precision_at_5=precision,
        recall_at_5=recall,
        f1_at_5=f1,
        total_hyps=total,
        test_size=len(gold_test),
        correct_hyps=correct_pairs,
    )
