"""Acceptance checks; each prints one PASS/FAIL line, repeated in the terminal summary."""
import math
import time

import numpy as np
import pytest

from recpriv.binaryexample import (
    BinaryExampleParams,
    erasure_source,
    example_channels,
    example_point,
    min_distortion_curve,
    no_side_info_point,
    saturation,
)
from recpriv.codesim import SimParams, build_codebook, exact_equivocation
from recpriv.frontier import OptOptions, max_equivocation
from recpriv.probcore import (
    Alphabet,
    CondPmf,
    JointPmf,
    compose_joint,
    conditional_entropy,
    entropy,
    mutual_information,
)
from recpriv.regions import AuxChannels, SourceSpec, eval_inner_causal, evaluate

from conftest import ACCEPTANCE_LINES, random_instance


def report(label, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print("\n" + line)
    assert ok, detail


# independent oracles: plain-float bisection and entropy, no package code
def h_ref(p):
    return 0.0 if p in (0.0, 1.0) else -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def h_inv_ref(v):
    lo, hi = 0.0, 0.5
    for _ in range(200):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if h_ref(mid) < v else (lo, mid)
    return (lo + hi) / 2


def test_ac1_saturation():
    t0 = time.perf_counter()
    d_sat, d_min = saturation(0.7136, 0.5)
    dt = time.perf_counter() - t0
    q = h_inv_ref(1 - 0.7136)
    want_sat, want_min = h_ref(0.5 * q), 0.5 * q
    ok = (abs(d_sat - want_sat) <= 1e-3 and abs(d_min - want_min) <= 1e-3
          and abs(d_sat - 0.16866) <= 1e-3 and abs(d_min - 0.02500) <= 1e-3 and dt < 1.0)
    report("AC1 saturation", ok,
           f"delta_sat={d_sat:.6f} (oracle {want_sat:.6f}), d_min={d_min:.6f} (oracle {want_min:.6f}), {dt:.3f}s")


def test_ac2_closed_form_equivalence():
    t0 = time.perf_counter()
    grid = np.round(np.arange(0, 0.5 + 1e-9, 0.05), 10)
    worst = 0.0
    for p_e in (0.0, 0.25, 0.5, 1.0):
        src = erasure_source(p_e)
        for p_u in grid:
            for p_2 in grid:
                a = example_point(BinaryExampleParams(p_u, p_2, p_e))
                b = eval_inner_causal(src, example_channels(p_u, p_2))
                worst = max(worst, abs(a.rate - b.rate), abs(a.distortion - b.distortion),
                            abs(a.equivocation - b.equivocation))
    dt = time.perf_counter() - t0
    report("AC2 closed form vs generic evaluator", worst <= 1e-9 and dt < 10,
           f"max deviation {worst:.2e} over {4 * grid.size ** 2} points, {dt:.2f}s")


def test_ac3_curve_shape():
    t0 = time.perf_counter()
    grid = [round(0.01 * i, 10) for i in range(61)]
    free = min_distortion_curve(0.7136, 0.5, grid)
    det = min_distortion_curve(0.7136, 0.5, grid, deterministic=True)
    dt = time.perf_counter() - t0
    d = np.array([p.d_min for p in free.points])
    dd = np.array([p.d_min for p in det.points])
    g = np.array(grid)
    flat = np.all(np.abs(d[g <= 0.16866] - 0.025) <= 1e-3)
    tail = d[g > 0.18]
    rising = np.all(np.diff(tail) > 0)
    dominated = np.all(dd >= d - 1e-12)
    gain = np.any(dd[g > 0.16866] > d[g > 0.16866])
    report("AC3 distortion-equivocation curve", bool(flat and rising and dominated and gain and dt < 30),
           f"flat={flat}, increasing beyond 0.18={rising}, deterministic>=free={dominated}, "
           f"strict gain={gain} (max {np.max(dd - d):.4f}), {dt:.2f}s")


def test_ac4_optimizer_soundness():
    t0 = time.perf_counter()
    src = erasure_source(0.5)
    res = max_equivocation(src, "eve_causal", 0.7136, 0.07, OptOptions(restarts=64, u_size=2, seed=0))
    dt = time.perf_counter() - t0
    pt = evaluate(src, res.witness, "eve_causal")
    consistent = abs(pt.equivocation - res.value) <= 1e-9
    feasible = pt.rate <= 0.7136 + 1e-9 and pt.distortion <= 0.07 + 1e-9
    ok = res.value >= 0.38432 - 1e-3 and consistent and feasible and dt < 300
    report("AC4 optimizer soundness", ok,
           f"delta*={res.value:.6f} (target >= {0.38432 - 1e-3:.5f}), re-evaluated {pt.equivocation:.12f}, "
           f"rate {pt.rate:.6f}, distortion {pt.distortion:.6f}, {res.feasible_restarts}/64 feasible, {dt:.1f}s")


def _bit_source():
    x, y, z = Alphabet("X", 2), Alphabet("Y", 1), Alphabet("Z", 1)
    return SourceSpec(JointPmf((x, y, z), np.full((2, 1, 1), 0.5)), Alphabet("F", 2), Alphabet("Xhat", 2),
                      [[0], [1]], 1 - np.eye(2))


def _flip(p_u, p_2):
    x, u, y, h = Alphabet("X", 2), Alphabet("U", 2), Alphabet("Y", 1), Alphabet("Xhat", 2)
    b = lambda p: np.array([[1 - p, p], [p, 1 - p]])
    return AuxChannels(CondPmf((x,), (u,), b(p_u)), CondPmf((u, y), (h,), b(p_2)[:, None, :]))


def test_ac5_degenerate_exactness():
    t0 = time.perf_counter()
    rows = []
    ok = True
    for n in (2, 4, 6):
        det = exact_equivocation(build_codebook(_bit_source(), _flip(0.1, 0.0), SimParams(n=n, seed=n)))
        noisy = exact_equivocation(build_codebook(_bit_source(), _flip(0.1, 0.2), SimParams(n=n, seed=n)))
        ok &= abs(det) <= 1e-12 and abs(noisy - h_ref(0.2)) <= 1e-12
        rows.append(f"n={n}: {det:.1e}/{noisy - h_ref(0.2):+.1e}")
    t_n6 = time.perf_counter()
    cb = build_codebook(erasure_source(0.5), example_channels(0.05, 0.1), SimParams(n=6, seed=0,
                                                                                    enumeration_budget=2 ** 24))
    full = exact_equivocation(cb)
    dt6 = time.perf_counter() - t_n6
    ok &= 0.0 <= full <= 1.0 and dt6 < 60
    report("AC5 simulator degenerate exactness", ok,
           f"{', '.join(rows)} (deterministic / flip error); full n=6 oracle {full:.6f} in {dt6:.2f}s, "
           f"total {time.perf_counter() - t0:.2f}s")


@pytest.mark.parametrize("setting", ["eve", "eve_causal", "helper"])
def test_ac6_inner_outer_dominance(setting):
    rng = np.random.default_rng({"eve": 1, "eve_causal": 2, "helper": 3}[setting])
    violations, worst = 0, np.inf
    for _ in range(1000):
        src, ch = random_instance(rng, t_function=True)
        inner = evaluate(src, ch, setting, "inner").equivocation
        outer = evaluate(src, ch.with_constant_v(), setting, "outer").equivocation
        worst = min(worst, outer - inner)
        violations += outer < inner - 1e-10
    report(f"AC6 inner <= outer ({setting})", violations == 0,
           f"{violations} violations in 1000 instances, min(outer - inner) = {worst:.3e}")


def test_ac7_information_properties():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = {"chain": 0.0, "cmi": 0.0, "marginal": 0.0, "markov": 0.0}
    for _ in range(1000):
        k = lambda: int(rng.integers(1, 5))
        src, ch = random_instance(rng, nx=k(), ny=k(), nz=k(), nu=k(), nh=k(), nt=k())
        j = compose_joint(src, ch)
        chain = entropy(j, ("X", "U", "Xhat")) - (entropy(j, "X") + conditional_entropy(j, "U", "X")
                                                   + conditional_entropy(j, "Xhat", ("X", "U")))
        worst["chain"] = max(worst["chain"], abs(chain))
        worst["cmi"] = min(worst["cmi"], mutual_information(j, "Xhat", "Z", ("T", "Y")))
        worst["marginal"] = max(worst["marginal"],
                                float(np.abs(j.marginal(("X", "Y", "Z")) - src.pxyz.weights).max()))
        worst["markov"] = max(worst["markov"], mutual_information(j, "Xhat", ("X", "Z", "T"), ("U", "Y")))
    dt = time.perf_counter() - t0
    ok = (worst["chain"] <= 1e-10 and worst["cmi"] >= 0.0 and worst["marginal"] <= 1e-12
          and worst["markov"] <= 1e-10 and dt < 30)
    report("AC7 information primitives", ok,
           f"chain err {worst['chain']:.1e}, min CMI {worst['cmi']:.1e}, marginal err {worst['marginal']:.1e}, "
           f"Markov residual {worst['markov']:.1e}, 1000 instances, {dt:.2f}s")


def test_ac8_no_side_information():
    d = no_side_info_point(0.7136, 0.4690)
    d0 = no_side_info_point(0.7136, 0.0)
    q = h_inv_ref(1 - 0.7136)
    ok = abs(d - 0.14) <= 1e-4 and abs(d0 - q) <= 1e-6
    report("AC8 no side information", ok, f"D(0.4690)={d:.7f} (target 0.14), D(0)={d0:.9f} (oracle {q:.9f})")
