from enum import Enum


class Decision(str, Enum):
    """Readout outcome; the first two members double as class labels."""

    POSITIVE = "pos"
    NEGATIVE = "neg"
    UNDECIDED = "undecided"

    @property
    def opposite(self) -> "Decision":
        if self is Decision.POSITIVE:
            return Decision.NEGATIVE
        if self is Decision.NEGATIVE:
            return Decision.POSITIVE
        return self

    def __str__(self):
        return {"pos": "Positive", "neg": "Negative", "undecided": "Undecided"}[self.value]


POSITIVE = Decision.POSITIVE
NEGATIVE = Decision.NEGATIVE
UNDECIDED = Decision.UNDECIDED
