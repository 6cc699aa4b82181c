import json

import numpy as np
import pytest

from adjrobust.adjustable import (CutPool, Digitization, DualizedSet,
                                  InconclusiveSeparationError, SeparationError,
                                  adjustable_special_case,
                                  build_separation_mip, separate,
                                  solve_adjustable,
                                  solve_adjustable_vertex_oracle)
from adjrobust.instances import (Instance, InstanceError, RandomSpec,
                                 UncertaintySet, budget_set,
                                 enumerate_vertices, gen_iid, gen_worst_case)
from adjrobust.mip import solve_mip

SQRT2 = float(np.sqrt(2.0))


def box_instance():
    """m = n = 1, B = [1], U = [0, 1]: max h*w = 1 at the corner."""
    uset = UncertaintySet.hrep(np.array([[1.0]]), np.array([1.0]))
    return Instance(m=1, n=1, c=np.zeros(1), A=np.zeros((1, 1)),
                    B=np.array([[1.0]]), d_bar=1.0, uncertainty=uset, seed=0)


def identity_instance(m=2):
    return Instance(m=m, n=m, c=np.zeros(m), A=np.zeros((m, m)),
                    B=np.eye(m), d_bar=1.0, uncertainty=budget_set(m), seed=0)


def mixed_instance(m, n, seed, vrep=False):
    rng = np.random.default_rng(seed)
    uset = enumerate_vertices(budget_set(m)) if vrep else budget_set(m)
    return Instance(m=m, n=n, c=0.2 * rng.random(n), A=0.3 * rng.random((m, n)),
                    B=0.1 + rng.random((m, n)), d_bar=1.0,
                    uncertainty=uset, seed=seed)


# ---------------------------------------------------------------------------
# digitization bookkeeping


def test_digitization_fields():
    dig = Digitization.from_instance(identity_instance(), 0.01)
    # caps are 1 on both sides, so both exponents collapse to zero
    assert dig.delta_u == 0 and dig.delta_w == 0
    # 2^-s * m * (1 + 2^du) <= eps
    assert 2.0 ** (-dig.s) * 2 * 2 <= 0.01 + 1e-15
    assert 2.0 ** (-(dig.s - 1)) * 2 * 2 > 0.01
    assert dig.eps_total == pytest.approx(0.01 * 2)
    assert dig.bits_u == dig.s + 1
    assert dig.binaries(2) == 2 * (dig.bits_u + dig.bits_w)


def test_digitization_rejects_bad_eps():
    with pytest.raises(ValueError):
        Digitization.from_instance(box_instance(), 0.0)


def test_digitization_unbounded_w():
    inst = Instance(m=2, n=1, c=np.zeros(1), A=np.zeros((2, 1)),
                    B=np.array([[1.0], [0.0]]), d_bar=1.0,
                    uncertainty=budget_set(2), seed=0)
    with pytest.raises(SeparationError):
        Digitization.from_instance(inst, 0.1)


def test_dualized_set():
    inst = mixed_instance(3, 2, seed=0)
    W = DualizedSet.of(inst)
    assert W.is_bounded
    uset = W.uncertainty()
    assert uset.is_hrep
    assert uset.R.shape == (2, 3)          # one row per second-stage column
    np.testing.assert_allclose(uset.R, inst.B.T)
    np.testing.assert_allclose(uset.r, np.ones(2))
    bad = DualizedSet(np.array([[1.0], [0.0]]), 1.0)
    assert not bad.is_bounded


# ---------------------------------------------------------------------------
# separation MIP


def test_separation_zero_set():
    # U = {0}: the only demand is zero, nothing to separate
    uset = UncertaintySet.hrep(np.eye(2), np.zeros(2))
    inst = Instance(m=2, n=2, c=np.zeros(2), A=np.zeros((2, 2)), B=np.eye(2),
                    d_bar=1.0, uncertainty=uset, seed=0)
    dig = Digitization.from_instance(inst, 0.1)
    prob = build_separation_mip(inst, np.zeros(2), dig)
    sol = solve_mip(prob, mip_tol=1e-6)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(sol.x[:2], 0.0, atol=1e-9)


def test_separation_box_corner():
    inst = box_instance()
    dig = Digitization.from_instance(inst, 0.02)
    h, w, val = separate(inst, np.zeros(1), -np.inf, dig, mip_tol=5e-3)
    assert abs(val - 1.0) <= dig.eps_total + 5e-3
    assert val <= 1.0 + 5e-3 + 1e-9       # digitized points are feasible
    assert h[0] == pytest.approx(1.0, abs=dig.eps_total)
    assert w[0] == pytest.approx(1.0, abs=dig.eps_total)


def test_separation_identity_budget():
    inst = identity_instance()
    dig = Digitization.from_instance(inst, 0.25)
    h, w, val = separate(inst, np.zeros(2), -np.inf, dig, mip_tol=0.1)
    assert abs(val - SQRT2) <= dig.eps_total + 0.1
    assert val <= SQRT2 + 0.1 + 1e-9


def test_separation_returns_feasible_pair():
    inst = mixed_instance(2, 2, seed=3)
    dig = Digitization.from_instance(inst, 0.25)
    x_hat = np.full(2, 0.2)
    h, w, val = separate(inst, x_hat, -np.inf, dig, mip_tol=0.05)
    R, r = inst.uncertainty.R, inst.uncertainty.r
    assert (h >= -1e-9).all() and (w >= -1e-9).all()
    assert (R @ h <= r + 1e-8).all()
    assert (inst.B.T @ w <= inst.d_bar + 1e-8).all()
    # the reported value is the exact bilinear value of the returned pair
    assert val == pytest.approx(float((h - inst.A @ x_hat) @ w), abs=1e-12)


def test_separation_no_violation():
    inst = box_instance()
    dig = Digitization.from_instance(inst, 0.02)
    assert separate(inst, np.zeros(1), 1.01, dig, mip_tol=5e-3) is None


def test_separation_budget_guard():
    inst = identity_instance(3)
    dig = Digitization.from_instance(inst, 1e-6)
    with pytest.raises(SeparationError, match="relax epsilon"):
        build_separation_mip(inst, np.zeros(3), dig, binary_budget=64)


def test_separation_needs_hrep():
    inst = mixed_instance(2, 2, seed=0, vrep=True)
    dig = Digitization(epsilon=0.1, s=4, delta_u=0, delta_w=0)
    with pytest.raises(InstanceError):
        build_separation_mip(inst, np.zeros(2), dig)


def test_separation_node_limit_inconclusive():
    inst = identity_instance()
    dig = Digitization.from_instance(inst, 0.25)
    with pytest.raises(InconclusiveSeparationError):
        separate(inst, np.zeros(2), -np.inf, dig, mip_tol=0.1, node_limit=1)


# ---------------------------------------------------------------------------
# cut pool


def test_cut_pool_roundtrip(tmp_path):
    pool = CutPool()
    pool.add([0.5, 0.0], [1.0, 1.0], 0.5)
    pool.add([0.0, 1.0], [0.0, 1.0], 1.0)
    assert len(pool) == 2
    assert pool.contains([0.5, 0.0], [1.0, 1.0])
    assert pool.contains([0.5 + 1e-10, 0.0], [1.0, 1.0])
    assert not pool.contains([0.5, 0.1], [1.0, 1.0])
    path = tmp_path / "cuts.json"
    pool.save(path)
    data = json.loads(path.read_text())
    assert [c["value"] for c in data["cuts"]] == [0.5, 1.0]
    assert data["cuts"][0]["h"] == [0.5, 0.0]


# ---------------------------------------------------------------------------
# cutting-plane solver


def test_adjustable_zero_uncertainty():
    uset = UncertaintySet.vrep(np.zeros((1, 2)))
    inst = Instance(m=2, n=2, c=np.ones(2), A=np.zeros((2, 2)), B=np.eye(2),
                    d_bar=1.0, uncertainty=uset, seed=0)
    res = solve_adjustable(inst, eps=0.1)
    assert res.status == "optimal"
    assert res.z_ar == pytest.approx(0.0, abs=1e-8)


def test_adjustable_vrep_matches_oracle():
    for seed in (0, 1, 2):
        inst = mixed_instance(3 + seed, 3, seed, vrep=True)
        res = solve_adjustable(inst, eps=1e-3)
        z = solve_adjustable_vertex_oracle(inst)
        assert res.status == "optimal"
        assert abs(res.z_ar - z) <= 1e-3 + 1e-5
        assert res.bracket[0] <= res.bracket[1] + 1e-12


def test_adjustable_hrep_digitized_loop():
    # full loop with MIP separation, coarse digitization
    inst = mixed_instance(3, 3, seed=42)
    dig = Digitization.from_instance(inst, 0.5)
    res = solve_adjustable(inst, eps=0.5, mip_tol=0.05)
    z = solve_adjustable_vertex_oracle(inst)
    assert res.status == "optimal"
    # master is a relaxation; separation certifies up to its own slack
    assert res.z_ar <= z + 1e-7
    assert res.z_ar >= z - (dig.eps_total + 10 * 0.05) - 1e-7


def test_adjustable_iteration_limit_brackets_oracle():
    inst = mixed_instance(4, 3, seed=8, vrep=True)
    res = solve_adjustable(inst, eps=1e-3, max_iters=1)
    z = solve_adjustable_vertex_oracle(inst)
    assert res.status in ("iteration_limit", "optimal")
    if res.status == "iteration_limit":
        lo, hi = res.bracket
        assert lo - 1e-7 <= z <= hi + 1e-7


def test_adjustable_rejects_bad_max_iters():
    with pytest.raises(ValueError):
        solve_adjustable(box_instance(), eps=0.1, max_iters=0)


def test_adjustable_unbounded_w():
    inst = Instance(m=2, n=1, c=np.zeros(1), A=np.zeros((2, 1)),
                    B=np.array([[1.0], [0.0]]), d_bar=1.0,
                    uncertainty=budget_set(2), seed=0)
    with pytest.raises(SeparationError):
        solve_adjustable(inst, eps=0.1)


def test_special_case_requires_degenerate_first_stage():
    with pytest.raises(InstanceError):
        adjustable_special_case(mixed_instance(2, 2, seed=0, vrep=True))


def test_special_case_matches_full_loop():
    b = gen_iid(3, 3, RandomSpec("uniform"), 17)
    inst = b.with_uncertainty(enumerate_vertices(b.uncertainty))
    sp = adjustable_special_case(inst, eps=1e-3)
    full = solve_adjustable(inst, eps=1e-3)
    assert sp == pytest.approx(full.z_ar, abs=1e-6)


# ---------------------------------------------------------------------------
# vertex oracle


def test_oracle_identity_budget():
    assert solve_adjustable_vertex_oracle(identity_instance()) == pytest.approx(
        SQRT2, abs=1e-8)


def test_oracle_worst_case_family():
    # perfectly adjustable recourse covers the structured family at cost 1
    for m in (4, 9):
        assert solve_adjustable_vertex_oracle(gen_worst_case(m)) == pytest.approx(
            1.0, abs=1e-8)


def test_oracle_accepts_hrep():
    inst = mixed_instance(3, 2, seed=5)
    a = solve_adjustable_vertex_oracle(inst)
    b = solve_adjustable_vertex_oracle(
        inst.with_uncertainty(enumerate_vertices(inst.uncertainty)))
    assert a == pytest.approx(b, abs=1e-10)
