"""Simplicial complexes, random walks on them and spatio-temporal models."""

import json as _json

from ._core import (
    Complex,
    Dataset,
    Error,
    adjacency,
    anonymize,
    boundary,
    full_adjacency,
    hodge_laplacian,
    metrics,
    sample_walks,
)
from ._core import train as _train

__all__ = [
    "Complex",
    "Dataset",
    "Error",
    "adjacency",
    "anonymize",
    "boundary",
    "full_adjacency",
    "hodge_laplacian",
    "metrics",
    "sample_walks",
    "train",
]


def train(dataset, model=None, train=None, seed=0):
    """Train a model on `dataset`. `model` and `train` are config dicts; missing keys keep defaults."""
    return _train(dataset, _json.dumps(model or {}), _json.dumps(train or {}), seed)
