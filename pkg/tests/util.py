"""Shared builders for the test modules."""
import numpy as np

from cphdae import circuits
from cphdae.dae import build_model1, build_model2
from cphdae.errors import GenerationFailed
from cphdae.graph import normal_tree_kruskal, validate_tree
from cphdae.model import CircuitModel

REFERENCE_TREE = ["V", "C1", "R", "L1"]


def model_of(spec):
    return CircuitModel.from_spec(spec)


def running_system(kind=2, tree=REFERENCE_TREE, **params):
    m = model_of(circuits.running_example(**params))
    nt = validate_tree(m.graph, tree)
    return build_model2(m, nt) if kind == 2 else build_model1(m, nt)


def system_of(spec, kind=2):
    m = model_of(spec)
    nt = normal_tree_kruskal(m.graph)
    return build_model2(m, nt) if kind == 2 else build_model1(m, nt)


def random_corpus(count, seed0=0, max_nodes=12, max_edges=20, sources="wave", mix=None):
    """Seeded random well-posed circuits with n <= 12 and b <= 20."""
    out = []
    seed = seed0
    rng = np.random.default_rng(seed0 + 12345)
    while len(out) < count:
        n = int(rng.integers(2, max_nodes + 1))
        b = int(rng.integers(n - 1 if n > 2 else 2, max_edges + 1))
        try:
            out.append(circuits.random_circuit(n, b, seed, mix=mix, sources=sources))
        except GenerationFailed:
            pass
        seed += 1
    return out
