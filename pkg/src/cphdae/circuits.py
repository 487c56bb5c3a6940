"""Reference circuits and a seeded random circuit generator."""
from __future__ import annotations

import numpy as np

from .errors import GenerationFailed, WellPosednessError
from .graph import CircuitGraph, check_wellposed, incidence
from .netlist import CircuitSpec, parse_netlist

RUNNING_EXAMPLE = """\
# Eight-edge RLC test circuit with one voltage and one current source.
# Edge order V, C1, C2, G, R, L1, L2, I fixes the incidence-matrix columns.
edge V  V 1 3 {10*t*sin(200*pi*t)}
edge C1 C 1 4 5e-6
edge C2 C 3 4 5e-6
edge G  G 1 2 1
edge R  R 2 3 1
edge L1 L 4 5 0.1
edge L2 L 5 2 0.1
edge I  I 1 5 {10*sin(10*t)}
"""

# ground = 1, source node = 2, output node = 3; diodes antiparallel across the output
DIODE_CLIPPER = """\
# Resistor feeding two antiparallel Shockley diodes; I is a zero-current voltmeter.
edge V  V 2 1 {(2*t/0.03)*sin(2*pi*1000*t)}
edge R  R 2 3 1000
edge D1 G 1 3 {1e-13*(exp(v/0.025)-1)}
edge D2 G 3 1 {1e-13*(exp(v/0.025)-1)}
edge I  I 3 1 0
"""

# x1 = i_R, x2 = q_C: x1 + x2 = 0 and x1 - dx2/dt = 0, solution x2 = exp(-t)
RC_LOOP = """\
edge C C 1 2 1
edge R R 2 1 1
"""

LC_LOOP = """\
edge C C 1 2 1
edge L L 1 2 1
"""

VR_LOOP = """\
edge V V 1 2 {sin(t)}
edge R R 1 2 1000
"""


def running_example(**params) -> CircuitSpec:
    """The eight-edge example; keyword overrides like ``C1=1e-6`` replace values."""
    text = RUNNING_EXAMPLE
    if params:
        lines = []
        for line in text.splitlines():
            parts = line.split()
            if len(parts) >= 6 and parts[0] == "edge" and parts[1] in params:
                parts = parts[:5] + [str(params[parts[1]])]
                line = " ".join(parts)
            lines.append(line)
        text = "\n".join(lines) + "\n"
    return parse_netlist(text)


def diode_clipper() -> CircuitSpec:
    return parse_netlist(DIODE_CLIPPER)


def rc_loop() -> CircuitSpec:
    return parse_netlist(RC_LOOP)


def lc_loop() -> CircuitSpec:
    return parse_netlist(LC_LOOP)


def vr_loop() -> CircuitSpec:
    return parse_netlist(VR_LOOP)


# ---------------------------------------------------------------------------
# random circuits
# ---------------------------------------------------------------------------

DEFAULT_MIX = {"V": 1.0, "I": 1.0, "C": 3.0, "L": 3.0, "R": 2.0, "G": 2.0}


def parse_mix(text: str) -> dict[str, float]:
    """``"V:1,C:3,..."`` -> weights."""
    mix = {}
    for part in text.split(","):
        kind, _, w = part.partition(":")
        kind = kind.strip()
        if kind not in DEFAULT_MIX:
            raise ValueError(f"unknown kind {kind!r} in mix")
        mix[kind] = float(w) if w else 1.0
        if mix[kind] < 0:
            raise ValueError("mix weights must be nonnegative")
    if sum(mix.values()) <= 0:
        raise ValueError("mix has no positive weight")
    return mix


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def random_circuit(nodes: int, edges: int, seed: int, mix: dict[str, float] | None = None,
                   lo: float = 1e-3, hi: float = 1e3, max_tries: int = 1000,
                   sources: str = "wave") -> CircuitSpec:
    """Random connected circuit satisfying the source-topology assumptions.

    A random spanning tree plus random extra edges, kinds drawn from ``mix``,
    element values log-uniform in [lo, hi]. ``sources='wave'`` gives
    sinusoidal sources, ``'const'`` constant ones.
    """
    if nodes < 2 or edges < nodes - 1:
        raise ValueError("need nodes >= 2 and edges >= nodes - 1")
    mix = dict(DEFAULT_MIX if mix is None else mix)
    kinds = sorted(mix)
    p = np.array([mix[k] for k in kinds], dtype=float)
    p /= p.sum()
    rng = np.random.default_rng(seed)
    counters: dict[str, int] = {}
    for _ in range(max_tries):
        ends = []
        for v in range(1, nodes):
            u = int(rng.integers(0, v))
            ends.append((u, v) if rng.random() < 0.5 else (v, u))
        for _ in range(edges - (nodes - 1)):
            u, v = rng.choice(nodes, size=2, replace=False)
            ends.append((int(u), int(v)))
        order = rng.permutation(len(ends))
        ends = [ends[k] for k in order]
        kind_list = [kinds[k] for k in rng.choice(len(kinds), size=len(ends), p=p)]
        g = CircuitGraph(nodes, tuple((k, u, v) for k, (u, v) in zip(kind_list, ends)))
        try:
            check_wellposed(incidence(g), kind_list)
        except WellPosednessError:
            continue
        counters.clear()
        lines = []
        for kind, (u, v) in zip(kind_list, ends):
            counters[kind] = counters.get(kind, 0) + 1
            name = f"{kind}{counters[kind]}"
            val = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
            if kind in ("V", "I") and sources == "wave":
                w = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
                value = "{" + f"{_fmt(val)}*sin({_fmt(w)}*t)" + "}"
            else:
                value = _fmt(val)
            lines.append(f"edge {name} {kind} {u + 1} {v + 1} {value}")
        return parse_netlist("\n".join(lines) + "\n")
    raise GenerationFailed(f"no well-posed circuit after {max_tries} attempts")
