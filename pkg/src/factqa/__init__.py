"""Single-fact question answering over an in-memory knowledge base."""

__version__ = "0.1.0"

from .backend import BACKEND_NAME
from .kb import KnowledgeBase
from .encoder import Vocabulary, tokenize
from .inference import Prediction, answer, eval_accuracy, exact_infer

__all__ = [
    "BACKEND_NAME",
    "KnowledgeBase",
    "Vocabulary",
    "tokenize",
    "Prediction",
    "answer",
    "exact_infer",
    "eval_accuracy",
    "__version__",
]
