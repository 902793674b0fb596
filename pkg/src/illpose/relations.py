"""The ordering verdict shared by the spectral, ordering and multiplier modules."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional


class Relation(str, Enum):
    MORE_ILL_POSED = "MoreIllPosed"
    STRICTLY_MORE_ILL_POSED = "StrictlyMoreIllPosed"
    EQUIVALENT = "Equivalent"
    INCOMPARABLE = "Incomparable"
    UNDECIDED = "Undecided"


@dataclass
class OrderingVerdict:
    """Outcome of comparing ``subject`` against ``reference``.

    ``relation`` reads "subject <relation> reference", e.g. subject is
    strictly more ill-posed than reference. ``excludes`` records relations
    that are ruled out, written as ``"X ⊀ Y"``.
    """

    relation: Relation
    subject: str = "A'"
    reference: str = "A"
    witness: Optional[object] = None
    evidence: list = field(default_factory=list)
    excludes: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def orders_subject_below(self) -> bool:
        """True when the verdict asserts subject ≺ reference."""
        return self.relation in (
            Relation.MORE_ILL_POSED,
            Relation.STRICTLY_MORE_ILL_POSED,
            Relation.EQUIVALENT,
        )

    def to_dict(self) -> dict:
        out = {
            "relation": self.relation.value,
            "subject": self.subject,
            "reference": self.reference,
            "evidence": list(self.evidence),
            "excludes": list(self.excludes),
            "notes": list(self.notes),
        }
        if self.witness is not None:
            out["witness"] = self.witness.certificate()
        return out
