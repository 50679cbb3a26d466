"""Facet path prediction for type-ahead search.

Thin wrappers over the C++ core; JSON payloads are decoded into plain dicts.
"""

import json
from pathlib import Path

from ._core import (
    ArtifactPaths,
    FacetPathError,
    RequestError,
    Taxonomy,
    generate_synthetic,
    gini,
    git_describe,
    train_count_model,
    train_embeddings,
)
from . import _core

__all__ = [
    "ArtifactPaths",
    "FacetPathError",
    "RequestError",
    "Service",
    "Taxonomy",
    "generate_synthetic",
    "gini",
    "git_describe",
    "run_experiment",
    "simulate_event",
    "train_count_model",
    "train_embeddings",
]


def simulate_event(taxonomy, result_set, clicked, predicted_path=""):
    """Replay one search event against a predicted facet path ("" means no filter)."""
    return json.loads(_core._simulate_event(taxonomy, list(result_set), list(clicked), predicted_path))


def run_experiment(catalog, events, *, variants=(), fractions=(1.0,), seeds=(1,), train_fraction=0.8,
                   max_epochs=300, patience=20, learning_rate=0.001):
    report = _core._run_experiment(str(catalog), str(events), train_fraction, list(variants), list(fractions),
                                   list(seeds), max_epochs, patience, learning_rate)
    return json.loads(report)


class Service:
    """In-process augmentation service, same contract as the HTTP endpoints."""

    def __init__(self, catalog, *, count_model=None, product_embeddings=None, query_embeddings=None,
                 mlp_checkpoint=None, sessionpath_checkpoint=None, trace=None, default_model="",
                 ct=0.993, cache_capacity=10000):
        paths = ArtifactPaths()
        paths.catalog = Path(catalog)
        paths.count_model = count_model and Path(count_model)
        paths.product_embeddings = product_embeddings and Path(product_embeddings)
        paths.query_embeddings = query_embeddings and Path(query_embeddings)
        paths.mlp_checkpoint = mlp_checkpoint and Path(mlp_checkpoint)
        paths.sessionpath_checkpoint = sessionpath_checkpoint and Path(sessionpath_checkpoint)
        paths.trace = trace and Path(trace)
        paths.default_model = default_model
        self._impl = _core._Service(paths, ct, cache_capacity)

    def augment(self, candidates, session_products=(), ct_override=None, model=None):
        body = {"candidates": list(candidates), "session_products": list(session_products)}
        if ct_override is not None:
            body["ct_override"] = ct_override
        if model is not None:
            body["model"] = model
        return json.loads(self._impl.augment(json.dumps(body)))

    def simulate(self, **body):
        return json.loads(self._impl.simulate(json.dumps(body)))

    def sweep(self):
        return json.loads(self._impl.sweep())

    def health(self):
        return json.loads(self._impl.health())

    def metrics(self):
        out = {}
        for line in self._impl.metrics().splitlines():
            key, _, value = line.partition("=")
            out[key] = value
        return out
