import numpy as np
import pandas as pd  # type: ignore
from dataclasses import dataclass, field
from sklearn.metrics import confusion_matrix  # type: ignore
from typing import Any, Dict, List, Mapping, Optional, Sequence
from .constants import Outcome


@dataclass
class PropertyReport:
    """Pass / fail / undecided tally of one property over tested pairs.

    Args:
        name (str): property name.
        tested (int): number of tested items; always ``passed + failed + undecided``.
        worst_witness (dict, optional): the failing item with the lowest score.
        worst_score (float): score of the worst witness (lower is worse).
        tags (dict): free counters, e.g. which dichotomy branch was witnessed.
        resolution (dict): sampling resolution the verdicts were obtained at.
        notes (list of str): diagnostics, e.g. degraded integrations.
    """
    name: str
    tested: int = 0
    passed: int = 0
    failed: int = 0
    undecided: int = 0
    worst_witness: Optional[Dict[str, Any]] = None
    worst_score: float = np.inf
    tags: Dict[str, Any] = field(default_factory=dict)
    resolution: Dict[str, Any] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    def record(self, outcome: Outcome, witness: Optional[Dict[str, Any]] = None,
               score: float = 0.0, tag: Optional[str] = None) -> None:
        """Count one outcome; failures keep the lowest-scoring witness.

        Examples:
            >>> report = PropertyReport("monotonicity")
            >>> report.record(Outcome.PASS)
            >>> report.record(Outcome.FAIL, {"x": [0.0, 1.0]}, score=-1.0)
            >>> report.tested, report.passed, report.failed
            (2, 1, 1)
        """
        self.tested += 1
        if outcome is Outcome.PASS:
            self.passed += 1
        elif outcome is Outcome.FAIL:
            self.failed += 1
            if witness is not None and (self.worst_witness is None or score < self.worst_score):
                self.worst_witness, self.worst_score = witness, score
        else:
            self.undecided += 1
        if tag is not None:
            self.tags[tag] = self.tags.get(tag, 0) + 1

    def merge(self, other: "PropertyReport") -> "PropertyReport":
        """Add the counts of another report of the same property."""
        self.tested += other.tested
        self.passed += other.passed
        self.failed += other.failed
        self.undecided += other.undecided
        if other.worst_witness is not None and (self.worst_witness is None
                                                or other.worst_score < self.worst_score):
            self.worst_witness, self.worst_score = other.worst_witness, other.worst_score
        for key, value in other.tags.items():
            if isinstance(value, (int, float)) and isinstance(self.tags.get(key, 0), (int, float)):
                self.tags[key] = self.tags.get(key, 0) + value
            else:
                self.tags.setdefault(key, value)
        self.notes.extend(other.notes)
        return self

    @property
    def holds(self) -> bool:
        return self.failed == 0

    @property
    def decided_fraction(self) -> float:
        return (self.passed + self.failed) / self.tested if self.tested else 1.0

    @property
    def outcome(self) -> Outcome:
        if self.failed:
            return Outcome.FAIL
        if self.undecided and not self.passed:
            return Outcome.UNDECIDED
        return Outcome.PASS

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "tested": self.tested, "passed": self.passed,
                "failed": self.failed, "undecided": self.undecided,
                "decided_fraction": self.decided_fraction,
                "worst_witness": self.worst_witness,
                "worst_score": None if self.worst_witness is None else self.worst_score,
                "tags": dict(self.tags), "resolution": dict(self.resolution),
                "notes": list(self.notes)}


def create_property_table(reports: Mapping[str, PropertyReport]) -> pd.DataFrame:
    """Summarize property reports in pandas DataFrame format.

    Args:
        reports (:obj:`dict` of (str, :obj:`PropertyReport`)): reports by property name.

    Returns:
        :obj:`pandas.DataFrame`: one row per property with tested, passed, failed,
        undecided and decided-fraction columns.

    Examples:
        >>> create_property_table({"nonordering": PropertyReport("nonordering", 2, 2)})
                     tested  passed  failed  undecided  decided_fraction
        nonordering       2       2       0          0               1.0
    """
    rows = {name: {"tested": r.tested, "passed": r.passed, "failed": r.failed,
                   "undecided": r.undecided, "decided_fraction": r.decided_fraction}
            for name, r in reports.items()}
    return pd.DataFrame.from_dict(rows, orient="index",
                                  columns=["tested", "passed", "failed", "undecided",
                                           "decided_fraction"])


def create_basin_confusion_matrix(coarse_labels: Sequence[Any],
                                  fine_labels: Sequence[Any],
                                  percentage: bool = False,
                                  selected_labels: Optional[List[Any]] = None) -> pd.DataFrame:
    """Agreement of basin labels at shared grid nodes of two census resolutions.

    Args:
        coarse_labels (:obj:`list` of any): labels at the coarse resolution.
        fine_labels (:obj:`list` of any): labels of the same nodes at the fine resolution.
        percentage (bool, optional): use row percentages as cell values. Default is False.
        selected_labels (:obj:`list` of any, optional): labels of the matrix. If none,
          the union of both label sets is used.

    Returns:
        :obj:`pandas.DataFrame`: confusion matrix with coarse labels as rows.

    Examples:
        >>> create_basin_confusion_matrix(["e0", "e2", "e2"], ["e0", "e2", "saddle"])
                e0  e2  saddle
        e0       1   0       0
        e2       0   1       1
        saddle   0   0       0
    """
    labels = sorted(selected_labels if selected_labels else set(coarse_labels) | set(fine_labels))
    cm = confusion_matrix(coarse_labels, fine_labels, labels=labels)
    if percentage:
        totals = np.sum(cm, axis=1).reshape(-1, 1)
        cm = np.round(100 * np.divide(cm, totals, out=np.zeros(cm.shape), where=totals > 0))
    return pd.DataFrame(cm, index=labels, columns=labels)


def label_agreement(coarse_labels: Sequence[Any], fine_labels: Sequence[Any]) -> float:
    """Fraction of shared nodes whose labels agree."""
    if len(coarse_labels) == 0:
        return 1.0
    cm = confusion_matrix(coarse_labels, fine_labels,
                          labels=sorted(set(coarse_labels) | set(fine_labels)))
    return float(np.trace(cm) / np.sum(cm))
