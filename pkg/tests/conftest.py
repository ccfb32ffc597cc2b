import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kbcorrect.kb import KnowledgeBase, Term, Triple, entity


@pytest.fixture
def place_kb() -> KnowledgeBase:
    """Small geographic store with a three-level hierarchy."""
    return KnowledgeBase(
        property_assertions=[
            Triple("rome", "p:capitalOf", entity("italy")),
            Triple("rome", "p:population", Term("literal", "2873000")),
            Triple("paris", "p:capitalOf", entity("france")),
        ],
        class_assertions={
            "rome": {"City"},
            "paris": {"City", "Place"},
            "italy": {"Country"},
            "france": {"Country"},
        },
        subclass_edges=[
            ("City", "Settlement"),
            ("Settlement", "Place"),
            ("Country", "Place"),
            ("Place", "owl:Thing"),
        ],
        labels={
            "rome": ["Rome"],
            "paris": ["Paris", "City of Light"],
            "italy": ["Italy"],
            "france": ["France"],
        },
        anchor_text={"rome": "capital city of Italy"},
    )
