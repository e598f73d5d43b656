"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line; ``conftest.py`` prints them at the end of
the run.  Running this file directly prints the lines as well.
"""

import itertools
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from qrepbench import analytic as an
from qrepbench import gridsim as gs
from qrepbench import network as nw
from qrepbench import statevec as sv
from qrepbench.analytic import ECC_REPETITION as ECC, PURIFICATION as PUR
from qrepbench.errors import InstanceTooLarge

RESULTS: dict[int, tuple[bool, str]] = {}
GRID = sv.p_grid(21)


def record(n, ok, detail):
    RESULTS[n] = (bool(ok), detail)
    print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


def test_criterion_1_purification_oracle():
    def go():
        dev_f = dev_a = 0.0
        for p in GRID:
            r = sv.purification_experiment(p)
            q = 1 - p
            dev_f = max(dev_f, abs(r.conditional_bell_fidelity - q * q / (q * q + p * p)))
            dev_a = max(dev_a, abs(r.accept_probability - (q * q + p * p)))
        return dev_f, dev_a

    (dev_f, dev_a), dt = timed(go)
    record(1, dev_f < 1e-12 and dev_a < 1e-12 and dt < 1.0,
           f"fidelity dev {dev_f:.2e}, acceptance dev {dev_a:.2e}, {dt:.2f}s")


def test_criterion_2_repetition_oracle():
    def go():
        return max(abs(sv.repetition_code_experiment(p).root_success - ((1 - p) ** 3 + 3 * p * (1 - p) ** 2))
                   for p in GRID)

    dev, dt = timed(go)
    record(2, dev < 1e-12 and dt < 1.0, f"max dev {dev:.2e}, {dt:.2f}s")


def _majority(bits):
    while len(bits) > 1:
        bits = [int(sum(bits[i : i + 3]) >= 2) for i in range(0, len(bits), 3)]
    return bits[0]


def test_criterion_3_concatenation():
    def go():
        p = Fraction(1, 10)
        exact = sum(
            p ** bin(m).count("1") * (1 - p) ** (9 - bin(m).count("1"))
            for m in range(2**9)
            if _majority([m >> i & 1 for i in range(9)]) == 0
        )
        s = 1 - p
        for _ in range(2):
            s = s**3 + 3 * (1 - s) * s**2
        dev = max(
            abs(sv.concatenated_success_probability(2, x, brute_force=True)
                - sv.concatenated_success_probability(2, x, brute_force=False))
            for x in GRID
        )
        spot = sv.concatenated_success_probability(2, 0.1, brute_force=True)
        return exact, s, dev, spot

    (exact, rec, dev, spot), dt = timed(go)
    ok = exact == rec and dev < 1e-12 and abs(spot - 0.9976918) < 2e-7 and dt < 5.0
    record(3, ok, f"exact {exact} == recursion, state-vector dev {dev:.2e}, p=0.1 -> {spot:.9f}, {dt:.2f}s")


def test_criterion_4_trajectories():
    n_pur = an.iterations_to_target(PUR, 0.51, 0.99)
    n_ecc = an.iterations_to_target(ECC, 0.51, 0.99)
    dominated = []
    for F0 in (0.51, 0.53, 0.55, 0.57, 0.59):
        p = an.fidelity_trajectory(PUR, F0, 10)
        e = an.fidelity_trajectory(ECC, F0, 10)
        dominated.append(all(b >= a - 1e-12 for a, b in zip(p, e)))
    record(4, n_pur == 7 and n_ecc == 3 and all(dominated),
           f"purification n={n_pur}, ecc n={n_ecc}, ecc dominates for all five F0: {all(dominated)}")


def test_criterion_5_bounds():
    def go():
        rng = np.random.default_rng(5)
        F0s = rng.uniform(0.501, 0.999, 200)
        epss = 2.0 ** -rng.uniform(3.33, 20, 200)
        bad = 0
        for F0, eps in zip(F0s, epss):
            if an.iterations_to_target(PUR, F0, 1 - eps) > an.purification_iteration_bound(F0, eps):
                bad += 1
            F, n = F0, 0
            while F < 1 - eps:
                F, n = an.ecc_single_qubit_step(F), n + 1
            if n > an.ecc_iteration_bound(F0, eps):
                bad += 1
        return bad

    bad, dt = timed(go)
    b = an.purification_iteration_bound(2 / 3, 2**-16)
    record(5, bad == 0 and b == 4 and dt < 1.0, f"{bad} violations in 200 samples, bound(2/3, 2^-16)={b}, {dt:.2f}s")


def test_criterion_6_resource_formulas():
    spots = (
        an.memory_required(PUR, 1, 1), an.memory_required(ECC, 1, 1),
        an.operations_required(PUR, 1, 2), an.operations_required(ECC, 1, 2),
    )
    mono = all(
        an.memory_required(s, n + 1, l) > an.memory_required(s, n, l)
        and an.memory_required(s, n, l + 1) > an.memory_required(s, n, l)
        for s in (PUR, ECC) for n in range(1, 13) for l in range(1, 13)
    )
    record(6, spots == (2, 3, 7, 4) and mono, f"spot values {spots}, monotone over n, ell <= 12: {mono}")


def test_criterion_7_resource_ordering():
    lines, ok = [], True
    for ell in (4, 6, 8):
        p = an.resource_profile(PUR, 0.51, 0.99, ell)
        e = an.resource_profile(ECC, 0.51, 0.99, ell)
        ops_ok = e.operations < p.operations
        q_ok = e.qubits > p.qubits
        ok &= ops_ok and q_ok
        lines.append(f"ell={ell}: ops {e.operations}<{p.operations} {ops_ok}, qubits {e.qubits}>{p.qubits} {q_ok}")
    record(7, ok, "; ".join(lines))


def test_criterion_8_grid_statistics():
    def go():
        exact = all(gs.reversal_probability_exact(k) == Fraction(1, 2) + Fraction(1, 2 * k) for k in range(1, 51))
        k, runs, seed = 10, 100_000, 8
        rt = gs.router(k)
        hits = trials = 0
        crossing_ok = True
        crossings = []
        for run in range(runs):
            act, dest = gs.draw_run(k, 0.5, seed, run)
            if 0 in dest and 1 in dest:
                trials += 1
                hits += dest[0] >= dest[1]
            masks = [rt.mask(u, dest[u]) for u in act]
            c = gs.count_crossings(masks)
            crossings.append(c)
            crossing_ok &= c >= gs.count_reversals(act, dest)
        return exact, hits, trials, crossing_ok, float(np.mean(crossings))

    (exact, hits, trials, crossing_ok, mean_c), dt = timed(go)
    p0 = 0.55
    freq = hits / trials
    se = math.sqrt(p0 * (1 - p0) / trials)
    within = abs(freq - p0) < 3 * se
    bound = gs.expected_crossings_bound(10, 0.5)
    record(8, exact and within and crossing_ok and dt < 60.0,
           f"exact for k<=50: {exact}; pair (0,1) freq {freq:.5f} vs 0.55 ({trials} trials, "
           f"{abs(freq - p0) / se:.2f} SE); crossings >= reversals: {crossing_ok}; "
           f"mean crossings {mean_c:.3f}, closed-form bound {bound}; {dt:.1f}s")


def test_criterion_9_full_sweep(tmp_path):
    from qrepbench import cli

    def go():
        outs = []
        for name in ("a", "b"):
            code = cli.main(["gridsim", "--seed", "2024", "--out", str(tmp_path / name)])
            assert code == 0
            outs.append({f.name: f.read_bytes() for f in sorted((tmp_path / name).iterdir())})
        return outs

    (a, b), dt = timed(go)
    identical = a == b
    medians = []
    for k in range(10, 21):
        rs = gs.run_scenario(gs.GridScenario(k=k, runs=50, seed=2024))
        medians.append(gs.summarize(rs)["congestion"].median)
    up = sum(1 for x, y in zip(medians, medians[1:]) if y >= x)
    # both sweeps (two schemes each) ran inside dt, so one sweep is about dt / 2
    record(9, identical and up >= 9 and dt / 2 < 120.0,
           f"byte-identical: {identical}; non-decreasing in {up}/{len(medians) - 1} steps, "
           f"medians {medians}; {dt / 2:.1f}s per sweep")


def test_criterion_10_toy_capacity():
    # two pairs, each with two equal-length routes
    G = nw.NetworkGraph.build(
        ["x1", "x2", "y1", "y2"], ["a1", "b1", "a2", "b2"],
        [("a1", "x1"), ("x1", "b1"), ("a1", "y1"), ("y1", "b1"), ("a2", "x1"), ("x1", "b2"),
         ("a2", "y2"), ("y2", "b2"), ("x1", "x2"), ("y1", "y2")],
    )
    pairs = [("a1", "b1"), ("a2", "b2")]
    two = (nw.induced_capacity(nw.minimize_induced_capacity(G, pairs=pairs)), nw.brute_force_min_capacity(G, pairs)[1])
    star = nw.NetworkGraph.build(["hub"], [f"t{i}" for i in range(4)], [(f"t{i}", "hub") for i in range(4)])
    st_ = (nw.induced_capacity(nw.minimize_induced_capacity(star)), nw.brute_force_min_capacity(star)[1])

    rng = random.Random(10)
    beaten = tested = equal = 0
    while tested < 50:
        nr = rng.randint(2, 4)
        reps = [f"r{i}" for i in range(nr)]
        terms = ["a", "b", "c", "d"]
        edges = {e for e in itertools.combinations(reps, 2) if rng.random() < 0.6}
        for t in terms:
            for r in rng.sample(reps, rng.randint(1, 2)):
                edges.add((t, r))
        H = nw.NetworkGraph.build(reps, terms, sorted(edges))
        dem = [("a", "b"), ("c", "d")]
        if not nw.validate_graph(H).ok:
            continue
        try:
            if any(len(nw.simple_paths(H, s, t, limit=4)) == 0 for s, t in dem):
                continue
        except InstanceTooLarge:
            continue
        tested += 1
        opt = nw.brute_force_min_capacity(H, dem, max_paths_per_pair=4)[1]
        h = nw.induced_capacity(nw.minimize_induced_capacity(H, pairs=dem))
        beaten += h < opt
        equal += h == opt
    ok = two == (1, 1) and st_ == (6, 6) and beaten == 0
    record(10, ok, f"two-route (heuristic, exact) {two}; star {st_}; random: optimum never beaten "
                   f"({beaten} violations), heuristic optimal on {equal}/50")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
