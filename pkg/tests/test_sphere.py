import math

import numpy as np
import pytest

from mimodec import (CapExceededError, SearchNode, Strategy, TraceRecorder,
                     WorkPool, branch, evaluate_incremental, make_constellation,
                     make_root, ml_bruteforce, preprocess, scratch_pd, sd_decode)
from mimodec.linalg import PreprocessedProblem
from mimodec.sphere import _sd_pooled

from conftest import problem_for


# ---------------------------------------------------------------- work pool

def _nodes(pds):
    return [SearchNode(pd, 1, (i,), np.zeros(1, complex)) for i, pd in enumerate(pds)]


def test_pool_bfs_fifo():
    pool = WorkPool("bfs")
    batch = _nodes([3.0, 1.0, 2.0])
    pool.push_batch(batch)
    assert [pool.pop().syms for _ in range(3)] == [(0,), (1,), (2,)]


def test_pool_dfs_lifo():
    pool = WorkPool("dfs")
    pool.push_batch(_nodes([3.0, 1.0, 2.0]))
    assert [pool.pop().syms for _ in range(3)] == [(2,), (1,), (0,)]


def test_pool_bestfs_sorted_batches():
    pool = WorkPool("bestfs")
    pool.push_batch(_nodes([3.0, 1.0, 2.0]))
    assert pool.pop().pd == 1.0
    # a fresh batch takes priority over the previous one's leftovers
    pool.push_batch(_nodes([9.0, 5.0]))
    assert pool.pop().pd == 5.0
    assert pool.pop().pd == 9.0
    assert pool.pop().pd == 2.0
    assert pool.pop().pd == 3.0


def test_pool_bestfs_tie_breaks_by_child_order():
    pool = WorkPool("bestfs")
    pool.push_batch(_nodes([1.0, 1.0, 0.5]))
    assert pool.pop().syms == (2,)
    assert pool.pop().syms == (0,)  # tie: earlier child index first
    assert pool.pop().syms == (1,)


# ---------------------------------------------------------------- branching

def test_branch_bpsk_root_two_children():
    inst, prob = problem_for("bpsk", 3, 3, 5.0, 1)
    kids = branch(make_root(3), inst.constellation, 1, prob.r, prob.y_bar)
    assert [k.syms for k in kids] == [(0,), (1,)]
    values = {complex(inst.constellation.points[k.syms[0]]) for k in kids}
    assert values == {-1 + 0j, 1 + 0j}


def test_branch_bpsk_grouped_four_children():
    inst, prob = problem_for("bpsk", 3, 3, 5.0, 1)
    kids = branch(make_root(3), inst.constellation, 2, prob.r, prob.y_bar)
    assert [k.syms for k in kids] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert all(k.level == 2 for k in kids)


def test_branch_clamps_at_leaf():
    inst, prob = problem_for("bpsk", 3, 3, 5.0, 1)
    node = branch(make_root(3), inst.constellation, 2, prob.r, prob.y_bar)[0]
    kids = branch(node, inst.constellation, 2, prob.r, prob.y_bar)
    assert len(kids) == 2  # only one level left
    assert all(k.level == 3 for k in kids)


def test_branch_pds_match_scratch_seed11():
    inst, prob = problem_for("qam16", 6, 6, 9.0, 11, radius="infinite")
    pts = inst.constellation.points
    node = make_root(6)
    for sym in (3, 7):
        node = branch(node, inst.constellation, 1, prob.r, prob.y_bar)[sym]
    kids = branch(node, inst.constellation, 1, prob.r, prob.y_bar)
    assert len(kids) == 16
    for k in kids:
        ref = scratch_pd(pts[list(k.syms)], prob.r, prob.y_bar)
        assert abs(k.pd - ref) <= 1e-9 * max(ref, 1.0)
        assert k.pd >= node.pd


# ---------------------------------------------------- incremental evaluation

def test_evaluate_incremental_root_term():
    inst, prob = problem_for("qpsk", 4, 4, 8.0, 2)
    w = inst.constellation.points[2]
    pd, _ = evaluate_incremental(make_root(4), [w], prob.r, prob.y_bar)
    expected = abs(prob.y_bar[3] - prob.r[3, 3] * w) ** 2
    assert pd == pytest.approx(expected, rel=1e-12)


def test_evaluate_incremental_true_path_noise_free():
    inst, prob = problem_for("qam16", 5, 5, float("inf"), 6, radius="infinite")
    pts = inst.constellation.points
    node = make_root(5)
    pd, cache = evaluate_incremental(node, pts[inst.s_true][::-1], prob.r, prob.y_bar)
    assert pd <= 1e-18


def test_evaluate_incremental_depth7_matches_scratch_seed4():
    rng = np.random.default_rng(4)
    inst, prob = problem_for("qam16", 10, 10, 14.0, 4, radius="infinite")
    pts = inst.constellation.points
    idx = rng.integers(0, 16, 7)
    node = make_root(10)
    for i in idx:
        node = branch(node, inst.constellation, 1, prob.r, prob.y_bar)[i]
    ref = scratch_pd(pts[idx], prob.r, prob.y_bar)
    assert abs(node.pd - ref) <= 1e-9 * max(ref, 1.0)


def test_evaluate_incremental_overrun():
    _, prob = problem_for("bpsk", 2, 2, 5.0, 0)
    with pytest.raises(ValueError):
        evaluate_incremental(make_root(2), [1.0, 1.0, 1.0], prob.r, prob.y_bar)


# ------------------------------------------------------------------ decoding

STRATEGIES = ["bfs", "dfs", "bestfs"]


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_noise_free_decodes_truth(strategy):
    inst, prob = problem_for("qam16", 4, 4, float("inf"), 3, radius="infinite")
    rep = sd_decode(prob, strategy)
    assert np.array_equal(rep.decoded, inst.s_true)
    assert rep.dist <= 1e-15


def test_all_strategies_match_ml_4x4_bpsk():
    inst, prob = problem_for("bpsk", 4, 4, 2.0, 8, radius="infinite")
    ml = ml_bruteforce(prob)
    for strategy in STRATEGIES:
        rep = sd_decode(prob, strategy)
        assert abs(rep.dist - ml.dist) <= 1e-9


@pytest.mark.parametrize("kind,m", [("bpsk", 6), ("qpsk", 5), ("qam16", 3)])
@pytest.mark.parametrize("j", [1, 2, 3])
def test_optimality_randomized(kind, m, j):
    for seed in range(12):
        inst, prob = problem_for(kind, m, m + (seed % 2), 6.0, 100 + seed,
                                 radius="infinite")
        ml = ml_bruteforce(prob)
        for strategy in STRATEGIES:
            rep = sd_decode(prob, strategy, j=j)
            assert abs(rep.dist - ml.dist) <= 1e-9, (kind, m, j, strategy, seed)


def test_metric_strategy_and_group_independent():
    inst, prob = problem_for("qam16", 5, 5, 10.0, 21, radius="formula")
    dists = {sd_decode(prob, s, j=j).dist for s in STRATEGIES for j in (1, 2)}
    assert max(dists) - min(dists) <= 1e-9


def test_group_counter_relation():
    inst, prob = problem_for("qpsk", 6, 6, 8.0, 5, radius="infinite")
    reports = {}
    for j in (1, 2, 3):
        rep = sd_decode(prob, "bestfs", j=j)
        assert rep.pd_calcs == rep.visited_nodes * 4**j  # m divisible by j
        reports[j] = rep
    # wider fan-out per branching costs more successor evaluations overall
    assert reports[2].pd_calcs >= reports[1].pd_calcs
    assert reports[3].pd_calcs >= reports[1].pd_calcs


def test_group_shortens_evaluation_stages():
    _, prob = problem_for("qam16", 5, 5, 12.0, 7, radius="infinite")
    for j, stages in ((1, 5), (2, 3), (3, 2)):
        rec = TraceRecorder()
        rep = sd_decode(prob, "bestfs", j=j, trace=rec)
        best = tuple(rep.decoded[::-1].tolist())
        path_levels = sorted(ev.level for ev in rec.events()
                             if ev.kind == "expand"
                             and best[:ev.level] == ev.suffix)
        # the winning path is evaluated in ceil(m / j) branchings
        assert len(path_levels) == stages


def test_fast_bfs_equals_generic_pool():
    for kind, m, j, seed in [("bpsk", 5, 1, 0), ("bpsk", 5, 2, 1),
                             ("qpsk", 4, 1, 2), ("qam16", 3, 2, 3),
                             ("qam16", 4, 1, 4)]:
        for radius in ("formula", "infinite"):
            inst, prob = problem_for(kind, m, m, 8.0, seed, radius=radius)
            fast = sd_decode(prob, "bfs", j=j)
            radius_state, visited, pd_calcs = _sd_pooled(prob, Strategy.BFS, j, None)
            assert visited == fast.visited_nodes
            assert pd_calcs == fast.pd_calcs
            assert radius_state.best_dist == fast.dist  # bit-identical paths
            assert radius_state.value == fast.final_radius_sq


def test_bfs_radius_constant_until_first_leaf():
    _, prob = problem_for("bpsk", 6, 6, 4.0, 7)
    rec = TraceRecorder()
    sd_decode(prob, "bfs", trace=rec)
    events = rec.events()
    first_leaf = next(i for i, ev in enumerate(events) if ev.kind == "leaf")
    for ev in events[:first_leaf]:
        assert ev.kind != "radius_update"
        if ev.kind in ("expand", "prune"):
            assert ev.radius_sq == prob.radius_sq


def test_radius_trajectory_non_increasing_and_pd_monotone():
    _, prob = problem_for("qam16", 4, 4, 9.0, 17)
    rec = TraceRecorder()
    sd_decode(prob, "dfs", trace=rec)
    updates = [ev.radius_sq for ev in rec.events() if ev.kind == "radius_update"]
    assert all(b <= a for a, b in zip(updates, updates[1:]))


def test_empty_sphere_is_erasure_not_error():
    inst, _ = problem_for("qam16", 4, 4, 8.0, 9)
    prob = preprocess(inst, 1e-12)
    rep = sd_decode(prob, "bestfs")
    assert rep.erasure
    assert rep.decoded is None
    assert rep.dist == math.inf
    assert rep.final_radius_sq == pytest.approx(1e-12)
    assert rep.visited_nodes <= 1


def test_sd_rejects_bad_args():
    _, prob = problem_for("bpsk", 2, 2, 5.0, 0)
    with pytest.raises(ValueError):
        sd_decode(prob, "sideways")
    with pytest.raises(ValueError):
        sd_decode(prob, "bfs", j=0)


# ----------------------------------------------------------------- ML oracle

def test_ml_scalar_example():
    c = make_constellation("bpsk")
    prob = PreprocessedProblem(m=1, constellation=c,
                               r=np.array([[1.0 + 0j]]),
                               y_bar=np.array([0.2 + 0j]),
                               radius_sq=math.inf)
    rep = ml_bruteforce(prob)
    assert rep.decoded.tolist() == [1]  # the +1 point
    assert rep.dist == pytest.approx(0.64)


def test_ml_noise_free():
    inst, prob = problem_for("qam16", 3, 3, float("inf"), 5, radius="infinite")
    rep = ml_bruteforce(prob)
    assert np.array_equal(rep.decoded, inst.s_true)
    assert rep.dist <= 1e-15


def test_ml_cross_check_with_sd_seed8():
    inst, prob = problem_for("qam16", 4, 4, 10.0, 8, radius="infinite")
    ml = ml_bruteforce(prob)
    sd = sd_decode(prob, "bestfs")
    assert abs(ml.dist - sd.dist) <= 1e-9
    assert np.array_equal(ml.decoded, sd.decoded)
    assert ml.pd_calcs == 16**4


def test_ml_cap():
    _, prob = problem_for("qam16", 8, 8, 10.0, 0, radius="infinite")
    with pytest.raises(CapExceededError):
        ml_bruteforce(prob, cap=1 << 20)
