"""Observed global convergence orders of fixed-step BDF1/BDF2 on the
source-free RC loop (exact solution exp(-t)), plus the order of the
initial derivative estimate."""
import numpy as np

from cphdae import circuits
from cphdae.dae import build_model2
from cphdae.graph import normal_tree_kruskal
from cphdae.model import CircuitModel
from cphdae.solver import IntegratorConfig, consistent_point, estimate_derivative, integrate


def main():
    model = CircuitModel.from_spec(circuits.rc_loop())
    s = build_model2(model, normal_tree_kruskal(model.graph))
    cp = consistent_point(s, 0.0, guess=1.0, fixed_choice=["q_C"])
    hs = [2.0**-k for k in range(6, 11)]
    for order in (1, 2):
        errs = []
        for h in hs:
            tr = integrate(s, cp, IntegratorConfig(order=order, h=h, newton_tol=1e-13), 1.0)
            errs.append(abs(tr.column("q_C")[-1] - np.exp(-1.0)))
        print(f"BDF{order}")
        for k, (h, e) in enumerate(zip(hs, errs)):
            rate = "" if k == 0 else f"  order {np.log2(errs[k - 1] / e):.3f}"
            print(f"  h=2^-{k + 6:<2d} error {e:.3e}{rate}")
    print("derivative estimate")
    prev = None
    for h in (1e-2, 5e-3, 2.5e-3, 1.25e-3):
        e = np.abs(estimate_derivative(s, cp, h=h).xdot - [-1.0, 1.0]).max()
        rate = "" if prev is None else f"  order {np.log2(prev / e):.3f}"
        print(f"  h={h:<8g} error {e:.3e}{rate}")
        prev = e


if __name__ == "__main__":
    main()
