"""Acceptance criteria 1 to 12, one test each.

Every test records a [PASS]/[FAIL] line through the ``acceptance`` fixture;
the lines are printed together in the terminal summary.
"""
import time

import numpy as np
import pytest

from cphdae import circuits, validation
from cphdae.dae import build_model2
from cphdae.graph import CircuitGraph, incidence, normal_tree_kruskal, normal_tree_rref, validate_tree
from cphdae.lti import assemble_lti, char_poly_degree, finite_eigenvalues
from cphdae.sigma import analyze, provisional_offsets, signature_matrix
from cphdae.solver import consistent_point, energy_audit, estimate_derivative

from test_graph import F_RUNNING, _incremental_ranks
from test_linalg import A_RUNNING, LEMMA_SUITES
from test_lti import closed_form
from test_sigma import SIGMA_RUNNING
from test_solver import observed_orders, reduced_closed_form_error, reduced_vs_dae
from util import REFERENCE_TREE, model_of, random_corpus, running_system, system_of


def test_criterion_01_running_example_structure(acceptance):
    t0 = time.perf_counter()
    g = CircuitGraph.from_spec(circuits.running_example())
    A = incidence(g)
    nt = validate_tree(g, REFERENCE_TREE)
    elapsed = time.perf_counter() - t0
    ok = (A == A_RUNNING).all() and (nt.F == F_RUNNING).all() and elapsed < 1.0
    acceptance(1, "incidence and F exact, < 1 s", ok, f"{elapsed * 1e3:.2f} ms")
    assert ok


def test_criterion_02_normal_tree_counts(acceptance):
    g = CircuitGraph.from_spec(circuits.running_example())
    ranks = tuple(int(r) for r in _incremental_ranks(incidence(g), g.kinds))
    kr, rr = normal_tree_kruskal(g), normal_tree_rref(g)
    ok = (ranks == (1, 2, 3, 4)
          and kr.twig_counts == rr.twig_counts == (1, 1, 1, 1)
          and kr.link_counts == rr.link_counts == (1, 1, 1, 1)
          and kr.ranks == rr.ranks == ranks)
    bad = 0
    for spec in random_corpus(200, seed0=100):
        h = CircuitGraph.from_spec(spec)
        a, b = normal_tree_kruskal(h), normal_tree_rref(h)
        expect = _incremental_ranks(incidence(h), h.kinds)
        bad += not (a.twig_counts == b.twig_counts and a.link_counts == b.link_counts
                    and a.ranks == b.ranks == expect)
    ok = ok and bad == 0
    acceptance(2, "normal tree counts and ranks", ok, f"running ranks {ranks}; {bad}/200 random disagree")
    assert ok


def test_criterion_03_sigma_verdict(acceptance):
    s = running_system()
    S = signature_matrix(s)
    off = provisional_offsets(s)
    sa = analyze(s)
    ok = (np.array_equal(S, SIGMA_RUNNING)
          and off.c.tolist() == [1, 0, 1, 0, 1, 1] and off.d.tolist() == [1] * 6
          and off.value() == sa.dof == 2 and sa.structural_index == 1
          and sa.amenable and sa.sv_ratio > 1e-9)
    acceptance(3, "signature matrix, offsets, Val = dof = 2, index 1", ok,
               f"sv ratio {sa.sv_ratio:.2e}")
    assert ok


def test_criterion_04_index_branches(acceptance):
    got = {}
    for name, spec in (("LC", circuits.lc_loop()), ("VR", circuits.vr_loop())):
        m = model_of(spec)
        rep = validation.oracle_index(build_model2(m, normal_tree_kruskal(m.graph)))
        got[name] = (rep.passed, int(rep.measured))
    ok = got == {"LC": (True, 0), "VR": (True, 1)}
    acceptance(4, "LC loop index 0, VR loop index 1", ok, str(got))
    assert ok


def test_criterion_05_lti_eigenvalues(acceptance):
    lti = assemble_lti(running_system())
    eig = finite_eigenvalues(lti)
    ref = closed_form()
    err = np.abs(eig.eigenvalues - ref).max() / np.abs(ref).max()
    degree = char_poly_degree(lti)
    ok = len(eig.eigenvalues) == 2 and err <= 1e-10 and degree == 2
    acceptance(5, "two finite eigenvalues match closed form", ok, f"rel err {err:.1e}, degree {degree}")
    assert ok


def test_criterion_06_ode_reduction(acceptance):
    red, worst = reduced_closed_form_error()
    gap, estimate, _, sol, _ = reduced_vs_dae()
    slack = 1e-10 * (1 + np.abs(sol.y).max(axis=1))
    ok = red.names == ("q_C1", "phi_L2") and worst <= 1e-12 and bool(np.all(gap <= estimate + slack))
    acceptance(6, "reduced ODE closed form and DAE agreement", ok,
               f"rhs rel err {worst:.1e}; end gap {gap.max():.1e} vs tolerance estimate {estimate.max():.1e}")
    assert ok


def test_criterion_07_convergence_orders(acceptance):
    r1, r2 = observed_orders(1), observed_orders(2)
    s = system_of(circuits.rc_loop())
    cp = consistent_point(s, 0.0, guess=1.0, fixed_choice=["q_C"])
    hs = [1e-2, 5e-3, 2.5e-3]
    errs = [np.abs(estimate_derivative(s, cp, h=h).xdot - [-1.0, 1.0]).max() for h in hs]
    rc = [np.log2(a / b) for a, b in zip(errs, errs[1:])]
    ok = (all(abs(r - 1) <= 0.25 for r in r1) and all(abs(r - 2) <= 0.25 for r in r2)
          and all(abs(r - 2) <= 0.3 for r in rc))
    fmt = lambda rs: ",".join(f"{r:.3f}" for r in rs)
    acceptance(7, "BDF1/BDF2/derivative-estimate orders", ok,
               f"BDF1 [{fmt(r1)}] BDF2 [{fmt(r2)}] CIC [{fmt(rc)}]")
    assert ok


def test_criterion_08_energy_balance(acceptance, running_run, diode_run, lc_run):
    run_a = energy_audit(running_run[2], running_run[0]).max_relative
    dio_a = energy_audit(diode_run[2], diode_run[0]).max_relative
    H = lc_run[2].H
    drift = float(np.abs(H - H[0]).max() / H[0])
    ok = run_a <= 1e-6 and dio_a <= 1e-6 and drift <= 1e-6
    acceptance(8, "pointwise power balance and LC energy", ok,
               f"running {run_a:.1e}, diode {dio_a:.1e}, LC drift {drift:.1e}")
    assert ok


def test_criterion_09_diode_clipper(acceptance, diode_run):
    _, _, tr = diode_run
    t = tr.t
    vI = tr.column("v_I")
    V = (2 * t / 0.03) * np.sin(2 * np.pi * 1000 * t)
    low = 2 * t / 0.03 <= 0.1               # source amplitude far below the diode knee
    follow = float(np.abs(vI[low] - V[low]).max())
    peak = float(np.abs(vI).max())
    ok = t[-1] == pytest.approx(0.03) and peak < 1.0 and np.abs(V).max() > 1.9 and follow <= 1e-3
    acceptance(9, "diode clipper clips and follows at low amplitude", ok,
               f"max|v_I| {peak:.3f}, low-phase gap {follow:.1e} over {int(low.sum())} points")
    assert ok


def test_criterion_10_lemma_suites(acceptance):
    results = {name: fn() for name, fn in LEMMA_SUITES.items()}
    ok = all(results.values())
    acceptance(10, "PD/PDMP property suites, 1000 instances each", ok,
               f"{sum(results.values())}/{len(results)} suites")
    assert ok


def test_criterion_11_tellegen(acceptance):
    trees = bad = 0
    for k, spec in enumerate(random_corpus(200, seed0=300)):
        g = CircuitGraph.from_spec(spec)
        for nt in (normal_tree_kruskal(g), normal_tree_rref(g)):
            trees += 1
            bad += not validation.oracle_tellegen(nt, g.b, seed=k).passed
    ok = bad == 0
    acceptance(11, "exact Tellegen orthogonality", ok, f"{trees} trees, {bad} failures")
    assert ok


def test_criterion_12_tree_scaling(acceptance):
    res = validation.tree_scaling()
    ok = res["slope_kruskal"] < res["slope_rref"]
    acceptance(12, "Kruskal scales better than RREF", ok,
               f"slopes {res['slope_kruskal']:.2f} vs {res['slope_rref']:.2f}")
    assert ok
