from .store import (
    AnnotationStore,
    AnnotationTask,
    Annotator,
    CapExceededError,
    DuplicateSubmissionError,
    UnknownAnnotatorError,
    UnknownAssetListError,
)
from .api import create_app

__all__ = [
    "AnnotationStore",
    "AnnotationTask",
    "Annotator",
    "CapExceededError",
    "DuplicateSubmissionError",
    "UnknownAnnotatorError",
    "UnknownAssetListError",
    "create_app",
]
