"""Classifiers: one-vs-rest linear SVM and the shortcut-layer DNN."""

from .dnn import (DnnConfig, ShortcutDnn, build_dnn, cross_entropy,
                  dnn_accuracy, dnn_confidence, dnn_forward, dnn_predict,
                  dnn_train)
from .search import SearchSpace, TrialResult, random_search, sample_config
from .svm import (DEFAULT_C_GRID, SvmModel, svm_confidence, svm_train)

__all__ = [
    "DEFAULT_C_GRID", "DnnConfig", "SearchSpace", "ShortcutDnn", "SvmModel",
    "TrialResult", "build_dnn", "cross_entropy", "dnn_accuracy",
    "dnn_confidence", "dnn_forward", "dnn_predict", "dnn_train",
    "random_search", "sample_config", "svm_confidence", "svm_train",
]
