import json

import numpy as np
import pytest

from optistack.errors import ConfigurationError, InvalidInputError
from optistack.tasks import (
    builtin_task,
    load_task,
    resolve_task,
    task_from_dict,
    task_summary,
    task_to_dict,
)


class TestBuiltinTasks:
    def test_task1_linear_ramp(self, task1):
        lam, _ = task1.grid.flattened()
        assert task1.target[0] == pytest.approx(400 / 375 - 16 / 15)
        assert task1.target[0] == pytest.approx(0.0, abs=1e-12)
        assert task1.target[-1] == pytest.approx(0.8)
        assert task1.layer_budget == 8
        assert task1.material_ids == (1, 2, 3, 4)

    def test_task2_tanh_edge(self, task2):
        lam, _ = task2.grid.flattened()
        idx_549 = list(lam).index(549.0)
        idx_550 = list(lam).index(550.0)
        idx_551 = list(lam).index(551.0)
        assert task2.target[idx_550] == pytest.approx(0.5)
        assert task2.target[idx_549] == pytest.approx(0.5 * (1 - np.tanh(-1)))
        assert task2.target[idx_551] == pytest.approx(0.5 * (1 - np.tanh(1)))
        assert task2.target[0] > 0.99
        assert task2.target[-1] < 0.01

    def test_task3_constant_with_band(self, task3):
        assert np.all(task3.target == 1.0)
        assert task3.layer_budget == 34
        assert task3.material_ids == (1, 4)
        assert task3.mu == 0.1
        assert task3.spec_band is not None
        assert np.all(task3.spec_band == 0.95)
        assert len(task3.grid) == 671

    def test_unknown_builtin(self):
        with pytest.raises(InvalidInputError):
            builtin_task("task9")


class TestTaskIO:
    def test_roundtrip_through_dict(self, task2):
        doc = task_to_dict(task2)
        again = task_from_dict(doc)
        assert np.allclose(again.target, task2.target)
        assert again.grid.wavelengths == task2.grid.wavelengths
        assert again.material_ids == task2.material_ids

    def test_explicit_array_target(self):
        doc = {
            "id": "custom",
            "grid": {"lambda_start": 500, "lambda_end": 502, "lambda_step": 1.0},
            "target": [0.1, 0.2, 0.3],
            "layer_budget": 4,
            "material_ids": [1, 2],
        }
        task = task_from_dict(doc)
        assert np.allclose(task.target, [0.1, 0.2, 0.3])

    def test_load_from_file(self, tmp_path, task1):
        p = tmp_path / "t.json"
        p.write_text(json.dumps(task_to_dict(task1)))
        loaded = load_task(p)
        assert np.allclose(loaded.target, task1.target)

    def test_resolve_prefers_builtin_then_path(self, tmp_path):
        assert resolve_task("task1").id == "task1"
        with pytest.raises(InvalidInputError):
            resolve_task("nonexistent.json")

    def test_target_length_mismatch_rejected(self):
        doc = {
            "id": "bad",
            "grid": {"lambda_start": 500, "lambda_end": 502, "lambda_step": 1.0},
            "target": [0.1, 0.2],
            "layer_budget": 4,
            "material_ids": [1, 2],
        }
        with pytest.raises(ConfigurationError):
            task_from_dict(doc)

    def test_target_out_of_bounds_rejected(self):
        doc = {
            "id": "bad",
            "grid": {"lambda_start": 500, "lambda_end": 501, "lambda_step": 1.0},
            "target": [0.5, 1.5],
            "layer_budget": 4,
            "material_ids": [1, 2],
        }
        with pytest.raises(ConfigurationError):
            task_from_dict(doc)

    def test_unknown_formula_rejected(self):
        doc = {
            "id": "bad",
            "grid": {"lambda_start": 500, "lambda_end": 501, "lambda_step": 1.0},
            "target": {"kind": "mystery"},
            "layer_budget": 4,
            "material_ids": [1, 2],
        }
        with pytest.raises(ConfigurationError):
            task_from_dict(doc)

    def test_summary_fields(self, task3):
        s = task_summary(task3)
        assert s["id"] == "task3"
        assert s["grid_size"] == 671
        assert s["has_spec_band"]

    def test_with_mu_override(self, task1):
        assert task1.with_mu(0.1).mu == 0.1
        assert task1.mu == 0.0  # original untouched
