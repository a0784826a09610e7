import pytest

from optistack.dbr import design_dbr
from optistack.errors import InvalidInputError
from optistack.optics import reflectivity


class TestDesignDbr:
    def test_reference_values(self, catalog):
        spec, stack = design_dbr(1.457, 2.327, 550.0, 4, catalog)
        assert spec.lambda0 == pytest.approx(424.59, abs=0.01)
        assert spec.t1 == pytest.approx(72.85, abs=0.01)
        assert spec.t2 == pytest.approx(45.62, abs=0.01)
        assert stack.total_thickness() == pytest.approx(473.88, abs=0.01)
        assert len(stack.layers) == 8

    def test_quarter_wave_identity_exact(self, catalog):
        spec, _ = design_dbr(1.457, 2.327, 550.0, 4, catalog)
        assert spec.n1 * spec.t1 == pytest.approx(spec.lambda0 / 4, abs=1e-12)
        assert spec.n2 * spec.t2 == pytest.approx(spec.lambda0 / 4, abs=1e-12)
        assert spec.lambda0 + spec.delta_lambda == pytest.approx(spec.band_edge, abs=1e-12)

    def test_low_index_layer_first(self, catalog):
        _, stack = design_dbr(1.457, 2.327, 550.0, 3, catalog)
        assert stack.layers[0][0] == 1
        assert stack.layers[1][0] == 4
        assert len(stack.layers) == 6

    def test_vanishing_contrast_limit(self):
        from optistack.materials import Material, MaterialCatalog
        eps = 1e-9
        cat = MaterialCatalog((Material(1, "a", n_const=complex(1.457, 0)),
                               Material(2, "b", n_const=complex(1.457 + eps, 0))))
        spec, _ = design_dbr(1.457, 1.457 + eps, 550.0, 1, cat)
        assert spec.delta_lambda == pytest.approx(0.0, abs=1e-6)
        assert spec.lambda0 == pytest.approx(550.0, abs=1e-6)

    def test_single_period(self, catalog):
        spec, stack = design_dbr(1.457, 2.327, 550.0, 1, catalog)
        assert len(stack.layers) == 2
        assert stack.total_thickness() == pytest.approx(spec.t1 + spec.t2)

    def test_rejects_inverted_indexes(self, catalog):
        with pytest.raises(InvalidInputError):
            design_dbr(2.327, 1.457, 550.0, 4, catalog)

    def test_stopband_reflects_more_than_passband(self, catalog):
        spec, stack = design_dbr(1.457, 2.327, 550.0, 4, catalog)
        r_center = reflectivity(stack, catalog, spec.lambda0, 0.0, "s")
        r_pass = reflectivity(stack, catalog, 650.0, 0.0, "s")
        assert r_center > 0.5
        assert r_center > r_pass
