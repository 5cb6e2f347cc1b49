"""Acceptance checks, one test per numbered criterion.

Run with ``pytest tests/test_acceptance.py``; a PASS/FAIL line per criterion
is printed in the terminal summary.
"""

import subprocess
import sys
import time

import numpy as np
import pytest
from scipy.spatial.distance import pdist, squareform

from netlayout.bhtree import build_tree, coulomb_forces, direct_coulomb_all
from netlayout.community import (
    Partition,
    greedy_modularity,
    label_agreement,
    modularity,
    refine_recursive,
)
from netlayout.generators import planted_partition, ring_with_trees
from netlayout.graph import Graph
from netlayout.layout import BodyState, SimParams, pair_spacing, random_init, relax, step
from netlayout.mds import mds_init

from oracles import modularity_from_scratch, random_graph, set_partitions


def criterion(n, title):
    return pytest.mark.criterion(n, title)


def max_rel_err(f, ref):
    return float((np.linalg.norm(f - ref, axis=1) / np.linalg.norm(ref, axis=1)).max())


@criterion(1, "greedy Q never beats brute force; modularity matches scratch to 1e-12")
def test_modularity_oracle(record_property):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    parts_cache = {n: np.array(list(set_partitions(n))) for n in range(2, 9)}
    checked = 0
    worst_gap = 0.0
    worst_mod = 0.0
    while checked < 240:
        n = int(rng.integers(2, 9))
        pairs = random_graph(rng, n, float(rng.uniform(0.15, 0.8)))
        if not pairs:
            continue
        g = Graph.from_edges(n, pairs)
        part, _ = greedy_modularity(g)
        q_greedy = modularity(g, part)
        # all partitions at once: Q = sum_ij B_ij [c_i == c_j] / 2M
        A = np.zeros((n, n))
        for u, v in pairs:
            A[u, v] = A[v, u] = 1
        k = A.sum(1)
        B = (A - np.outer(k, k) / k.sum()) / k.sum()
        P = parts_cache[n]
        same = P[:, :, None] == P[:, None, :]
        q_all = (same * B).sum(axis=(1, 2))
        best = q_all.max()
        worst_gap = max(worst_gap, q_greedy - best)
        for labels in (part.assignment, P[rng.integers(len(P))]):
            ours = modularity(g, Partition.from_labels(labels))
            worst_mod = max(worst_mod, abs(ours - modularity_from_scratch(n, pairs, labels)))
        checked += 1
    elapsed = time.perf_counter() - t0
    record_property("detail", f"{checked} graphs, max(Q_greedy - Q_opt)={worst_gap:.2e}, "
                              f"max |dQ| vs scratch={worst_mod:.1e}, {elapsed:.1f}s")
    assert worst_gap <= 1e-12
    assert worst_mod <= 1e-12
    assert elapsed < 60


@criterion(2, "planted 4x32 graph: Q > 0.55 and >= 90% label agreement")
def test_strong_structure(record_property):
    t0 = time.perf_counter()
    g, truth = planted_partition(4, 32, 0.3, 0.01, seed=0)
    part, _ = greedy_modularity(g)
    q = modularity(g, part)
    agree = label_agreement(part.assignment, truth)
    elapsed = time.perf_counter() - t0
    record_property("detail", f"Q={q:.4f}, agreement={agree:.3f}, C={part.count}, {elapsed:.2f}s")
    assert q > 0.55
    assert agree >= 0.9
    assert elapsed < 5


@criterion(3, "tree force error <= 1% at theta 0.5, <= 0.1% at 0.2, theta 0 exact")
def test_barnes_hut_accuracy(record_property):
    t0 = time.perf_counter()
    errs = {0.5: 0.0, 0.2: 0.0, 0.0: 0.0}
    for seed in range(3):
        rng = np.random.default_rng(seed)
        x = rng.random((1000, 3))
        q = np.ones(1000)
        tree = build_tree(x, q)
        ref = direct_coulomb_all(1.0, q, x)
        for theta in errs:
            errs[theta] = max(errs[theta], max_rel_err(coulomb_forces(tree, theta), ref))
    elapsed = time.perf_counter() - t0
    record_property("detail", f"max rel err: theta=0.5 {errs[0.5]:.2e}, theta=0.2 {errs[0.2]:.2e}, "
                              f"theta=0 {errs[0.0]:.1e}, {elapsed:.1f}s")
    assert errs[0.5] <= 1e-2
    assert errs[0.2] <= 1e-3
    assert errs[0.0] <= 1e-12
    assert elapsed < 30


@criterion(4, "N=20000: tree force evaluation > 2x faster than direct")
def test_barnes_hut_scaling(record_property):
    t0 = time.perf_counter()
    # compile both paths on a small input first
    small = np.random.default_rng(0).random((50, 3))
    coulomb_forces(build_tree(small, np.ones(50)), 0.5)
    direct_coulomb_all(1.0, np.ones(50), small)

    x = np.random.default_rng(1).random((20_000, 3))
    q = np.ones(20_000)
    t = time.perf_counter()
    coulomb_forces(build_tree(x, q), 0.5)
    t_tree = time.perf_counter() - t
    t = time.perf_counter()
    direct_coulomb_all(1.0, q, x)
    t_direct = time.perf_counter() - t
    ratio = t_direct / t_tree
    elapsed = time.perf_counter() - t0
    record_property("detail", f"tree {t_tree:.2f}s (incl. build), direct {t_direct:.2f}s, "
                              f"ratio {ratio:.1f}, {elapsed:.1f}s")
    assert ratio > 2
    assert elapsed < 120


@criterion(5, "default relax: total energy non-increasing and final max speed < v_stop")
def test_dissipation(record_property):
    t0 = time.perf_counter()
    g, _ = planted_partition(4, 25, 0.3, 0.02, seed=0)
    p = SimParams()
    res = relax(g, random_init(g.n, 3, p.box_width, p.seed), p, energy_every=1)
    total = np.array([sum(e[1:]) for e in res.energy_trace])
    rise = float(np.max((total[1:] - total[:-1]) / np.abs(total[:-1])))
    v_stop = p.resolved(g.n, 3).v_stop
    elapsed = time.perf_counter() - t0
    record_property("detail", f"{res.steps} steps, max rel energy rise {rise:.1e}, "
                              f"final max speed {res.max_speed:.2e} (v_stop {v_stop:g}), {elapsed:.1f}s")
    assert rise <= 1e-6
    assert res.converged and res.max_speed < v_stop
    assert elapsed < 60


@criterion(6, "friction-only speed follows v0 exp(-gamma t / m) within 1%")
def test_friction_decay(record_property):
    t0 = time.perf_counter()
    m, gamma = 1.0, 2.7
    p = SimParams(mass=m, gamma=gamma, C=0.0, dt=1e-3 * m / gamma)
    g = Graph.from_edges(1, [])
    s = BodyState.at_rest(np.zeros((1, 3)), p)
    v0 = np.array([[0.6, -0.8, 0.0]])
    s = BodyState(s.x, v0, s.m, s.q)
    n_steps = 2000
    for _ in range(n_steps):
        s = step(s, g, p)
    t = n_steps * p.dt
    expect = np.exp(-gamma * t / m)
    got = s.max_speed()
    err = abs(got - expect) / expect
    elapsed = time.perf_counter() - t0
    record_property("detail", f"t={t:.3f}, speed {got:.6f} vs {expect:.6f}, rel err {err:.1e}, {elapsed:.2f}s")
    assert err <= 0.01
    assert elapsed < 1


@criterion(7, "planted 4-block layout: intra < 0.7 x inter distance for >= 4 of 5 seeds")
def test_layout_coherence(record_property):
    t0 = time.perf_counter()
    g, labels = planted_partition(4, 32, 0.3, 0.01, seed=0)
    same = labels[:, None] == labels[None, :]
    upper = np.triu(np.ones_like(same), 1)
    ratios = []
    for seed in range(5):
        p = SimParams(seed=seed)
        res = relax(g, random_init(g.n, 3, p.box_width, seed), p)
        d = squareform(pdist(res.state.x))
        ratios.append(d[same & upper].mean() / d[~same & upper].mean())
    good = sum(r < 0.7 for r in ratios)
    elapsed = time.perf_counter() - t0
    record_property("detail", f"ratios {', '.join(f'{r:.3f}' for r in ratios)}, {elapsed:.1f}s")
    assert good >= 4
    assert elapsed < 120


@criterion(8, "ring-with-trees: median steps from mds init < from random init")
def test_mds_init_benefit(record_property):
    t0 = time.perf_counter()
    # a common, coarser stopping speed and a longer step than the defaults keep
    # ten 1500-node runs inside the time budget
    p = SimParams(dt=0.3, v_stop=2e-3, max_steps=2000)
    steps = {"mds": [], "random": []}
    for seed in range(5):
        g = ring_with_trees(500, 1000, seed=seed)
        starts = {
            "mds": mds_init(g, 2, seed=seed, spacing=pair_spacing(p)),
            "random": random_init(g.n, 2, p.box_width, seed),
        }
        for mode, x0 in starts.items():
            steps[mode].append(relax(g, x0, p).steps)
    med = {k: float(np.median(v)) for k, v in steps.items()}
    elapsed = time.perf_counter() - t0
    record_property("detail", f"mds {steps['mds']} vs random {steps['random']} "
                              f"(cap {p.max_steps}), {elapsed:.0f}s")
    assert med["mds"] < med["random"]
    assert elapsed < 300


@criterion(9, "refine_recursive splits two merged planted blocks (>= 90% agreement)")
def test_recursive_refinement(record_property):
    t0 = time.perf_counter()
    g, truth = planted_partition(4, 32, 0.3, 0.01, seed=0)
    part, _ = greedy_modularity(g)
    a = part.assignment.copy()
    p0, p1 = a[truth == 0][0], a[truth == 1][0]
    a[a == p1] = p0
    merged = Partition.from_labels(a)
    tree = refine_recursive(g, merged, size_threshold=40)
    leaves = tree.leaf_partition(g.n)
    both = (truth == 0) | (truth == 1)
    agree = label_agreement(leaves.assignment[both], truth[both])
    elapsed = time.perf_counter() - t0
    record_property("detail", f"{merged.count} merged -> {leaves.count} leaves, "
                              f"agreement on merged blocks {agree:.3f}, {elapsed:.2f}s")
    assert agree >= 0.9
    assert elapsed < 10


def _pipeline(workdir):
    cli = [sys.executable, "-m", "netlayout.cli"]
    cmds = [
        ["gen", "planted-partition", "--seed", "7", "--out", "g.txt", "--labels", "truth.tsv"],
        ["communities", "g.txt", "--out", "comm.tsv"],
        ["layout", "g.txt", "--seed", "7", "--steps", "400", "--init", "mds",
         "--out", "layout.tsv", "--energy", "energy.csv"],
        ["render", "layout.tsv", "--communities", "comm.tsv", "--highlight", "0",
         "--plane", "xz", "--out", "fig.svg"],
    ]
    for c in cmds:
        subprocess.run(cli + c, cwd=workdir, check=True, capture_output=True)
    names = ["g.txt", "truth.tsv", "comm.tsv", "comm.qtrace.csv", "layout.tsv", "energy.csv", "fig.svg"]
    return {n: (workdir / n).read_bytes() for n in names}


@criterion(10, "gen -> communities -> layout -> render is byte-identical across runs")
def test_end_to_end_determinism(tmp_path, record_property):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    out_a, out_b = _pipeline(a), _pipeline(b)
    differ = [n for n in out_a if out_a[n] != out_b[n]]
    record_property("detail", f"{len(out_a)} files compared, {len(differ)} differ")
    assert not differ
