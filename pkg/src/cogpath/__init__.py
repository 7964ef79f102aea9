"""cogpath: extract and evaluate ABCD cognitive pathways from social-media text."""

from .taxonomy import (
    CategoryScheme,
    ChildCategory,
    LabelEntry,
    ParentCategory,
    SentenceLabel,
    canonical_scheme,
    normalize_category_name,
    parent_of,
    validate_label,
)
from .corpus import Post, Sentence, segment, split
from .classifier import ClassifierBackend, MockClassifier, Prediction, classify_post
from .pathway import CognitivePathway, CompositeSentence, assemble, extract_pathway
from .metrics import classification_report, evaluate_summaries

__version__ = "0.1.0"

__all__ = [
    "CategoryScheme",
    "ChildCategory",
    "ClassifierBackend",
    "CognitivePathway",
    "CompositeSentence",
    "LabelEntry",
    "MockClassifier",
    "ParentCategory",
    "Post",
    "Prediction",
    "Sentence",
    "SentenceLabel",
    "assemble",
    "canonical_scheme",
    "classification_report",
    "classify_post",
    "evaluate_summaries",
    "extract_pathway",
    "normalize_category_name",
    "parent_of",
    "segment",
    "split",
    "validate_label",
]
