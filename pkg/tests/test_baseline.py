import numpy as np
import pytest

from optistack.baseline import (
    GRID_POINTS,
    DiscreteDesign,
    _apply_action,
    action_space_size,
    run_discrete_dqn,
)
from optistack.rewards import DEFAULT_REWARD_PARAMS


class TestActionSpace:
    def test_size_formula(self, task2):
        # per layer: 2 thickness moves plus |N|-1 material swaps
        assert action_space_size(8, 4) == 8 * (2 + 3) == 40

    def test_grid_has_1501_points(self):
        assert GRID_POINTS == 1501


class TestApplyAction:
    def design(self):
        return DiscreteDesign(material_ids=np.array([1, 2, 3, 4]),
                              thickness_idx=np.array([0, 750, 1500, 10]))

    def test_increment_and_clamp_high(self):
        d = _apply_action(self.design(), 2 * 5 + 0, (1, 2, 3, 4))  # layer 2 inc
        assert d.thickness_idx[2] == 1500  # clamped at 150.0 nm

    def test_decrement_and_clamp_low(self):
        d = _apply_action(self.design(), 0 * 5 + 1, (1, 2, 3, 4))  # layer 0 dec
        assert d.thickness_idx[0] == 0

    def test_thickness_moves_are_one_grid_step(self):
        d = _apply_action(self.design(), 1 * 5 + 0, (1, 2, 3, 4))
        assert d.thickness_idx[1] == 751
        d = _apply_action(self.design(), 1 * 5 + 1, (1, 2, 3, 4))
        assert d.thickness_idx[1] == 749

    def test_material_swap_excludes_current(self):
        base = self.design()
        seen = set()
        for j in range(3):
            d = _apply_action(base, 0 * 5 + 2 + j, (1, 2, 3, 4))
            seen.add(int(d.material_ids[0]))
        assert seen == {2, 3, 4}  # every material except the current (1)

    def test_designs_stay_on_grid(self, rng):
        d = self.design()
        for _ in range(200):
            d = _apply_action(d, int(rng.integers(20)), (1, 2, 3, 4))
            assert np.all((d.thickness_idx >= 0) & (d.thickness_idx <= 1500))
            assert np.allclose(d.thicknesses_nm(), np.round(d.thicknesses_nm(), 1))


class TestRunDiscreteDqn:
    def test_sim_call_accounting(self, task2, catalog):
        result = run_discrete_dqn(task2, catalog, DEFAULT_REWARD_PARAMS,
                                  episodes=2, steps=10, seed=0)
        assert result.sim_calls == 20

    def test_best_trace_non_decreasing(self, task2, catalog):
        result = run_discrete_dqn(task2, catalog, DEFAULT_REWARD_PARAMS,
                                  episodes=3, steps=15, seed=1)
        series = [m["best_reward"] for m in result.metrics]
        assert all(b >= a for a, b in zip(series, series[1:]))

    def test_seeded_run_reproducible(self, task2, catalog):
        a = run_discrete_dqn(task2, catalog, DEFAULT_REWARD_PARAMS,
                             episodes=2, steps=12, seed=5)
        b = run_discrete_dqn(task2, catalog, DEFAULT_REWARD_PARAMS,
                             episodes=2, steps=12, seed=5)
        assert a.best.reward == b.best.reward
        assert a.best.layers == b.best.layers

    def test_episodes_restart_from_same_initial_stack(self, task2, catalog):
        # with zero exploration influence aside, the first mutation of each
        # episode starts from the same design: check via metrics determinism
        # of a 1-step episode run
        a = run_discrete_dqn(task2, catalog, DEFAULT_REWARD_PARAMS,
                             episodes=3, steps=1, seed=7)
        # 3 episodes of 1 greedy/random step each from the same initial stack
        assert a.sim_calls == 3

    def test_fixed_layer_count(self, task2, catalog):
        result = run_discrete_dqn(task2, catalog, DEFAULT_REWARD_PARAMS,
                                  episodes=1, steps=5, seed=3)
        assert len(result.best.layers) == task2.layer_budget
