"""Tests for the plant families and class-membership validation."""

import numpy as np
import pytest

from pidcert import matrix_kernel as mk
from pidcert import plant_models as pm
from pidcert.errors import PlantError, UsageError
from pidcert.gain_sets import FIRST_ORDER, UncertaintyBounds


def sin_plant():
    return pm.build_family("sinusoidal_scalar", {"c1": 1.0, "c2": 1.0})


class TestBuildFamily:
    def test_unknown_id(self):
        with pytest.raises(UsageError):
            pm.build_family("does_not_exist")

    def test_pure_integrator_chain(self):
        p = pm.build_family(
            "linear_matrix", {"A1": [[0.0]], "A2": [[0.0]], "Theta": [[1.0]]}
        )
        out = p.f(np.array([3.0]), np.array([4.0]), np.array([2.5]))
        np.testing.assert_array_equal(out, [2.5])
        assert p.declared_bounds.L1 == 0.0
        assert p.declared_bounds.b_lower == 1.0

    def test_nonaffine_control_jacobian(self):
        p = pm.build_family("nonaffine_cubic_u", {"c1": 1.0, "c2": 1.0, "b_lower": 1.0})
        ju = p.jac_u(np.zeros(1), np.zeros(1), np.array([2.0]))
        assert ju[0, 0] == 5.0  # b + u^2 at u = 2
        lam, _ = mk.eig_extrema(mk.symmetrize(ju))
        assert lam >= 1.0

    def test_rotation_gain_skew_cancels(self):
        p = pm.build_family("rotation_gain", {"b_lower": 1.0, "s": 10.0})
        ju = p.jac_u(np.zeros(2), np.zeros(2), np.zeros(2))
        np.testing.assert_allclose(mk.symmetrize(ju), np.eye(2))
        assert mk.operator_norm(ju) >= 10.0

    def test_tanh_coupled_dimension(self):
        p = pm.build_family("tanh_coupled", {"n": 3, "l1": 0.5, "l2": 0.7, "b_lower": 2.0})
        assert p.n == 3
        assert p.declared_bounds.L1 == 0.5
        # rank-one PSD bump leaves the symmetric floor at b_lower exactly
        lam, _ = mk.eig_extrema(mk.symmetrize(p.jac_u(np.zeros(3), np.zeros(3), np.zeros(3))))
        assert abs(lam - 2.0) < 1e-12

    def test_first_order_variants(self):
        for fam, params in [
            ("linear_matrix", {"order": FIRST_ORDER, "A": [[1.0]], "Theta": [[1.0]]}),
            ("sinusoidal_scalar", {"order": FIRST_ORDER, "c1": 1.0}),
            ("nonaffine_cubic_u", {"order": FIRST_ORDER, "c1": 1.0, "b_lower": 1.0}),
        ]:
            p = pm.build_family(fam, params)
            assert p.order == FIRST_ORDER
            assert p.declared_bounds.order == FIRST_ORDER


class TestValidateClassMembership:
    def test_linear_plant_exact_bounds(self):
        p = pm.build_family(
            "linear_matrix",
            {"A1": [[1.0]], "A2": [[-1.0]], "Theta": [[1.0]]},
        )
        rep = pm.validate_class_membership(p, samples=200, seed=5)
        assert rep.passes
        np.testing.assert_allclose(rep.max_norm_jac_x1, 1.0)
        np.testing.assert_allclose(rep.max_norm_jac_x2, 1.0)
        np.testing.assert_allclose(rep.min_sym_jac_u, 1.0)

    def test_sin_plant_passes_declared(self):
        rep = pm.validate_class_membership(sin_plant(), samples=300, seed=1)
        assert rep.passes
        assert rep.max_norm_jac_x1 <= 1.0 + 1e-8

    def test_sin_plant_fails_tighter_claim(self):
        p = sin_plant()
        tight = pm.PlantModel(
            n=1,
            order=p.order,
            f=p.f,
            jac_x1=p.jac_x1,
            jac_x2=p.jac_x2,
            jac_u=p.jac_u,
            declared_bounds=UncertaintyBounds(0.5, 1.0, 1.0),
        )
        rep = pm.validate_class_membership(tight, samples=500, seed=2)
        assert not rep.passes
        assert rep.max_norm_jac_x1 > 0.5

    @pytest.mark.parametrize(
        "fam,params",
        [
            ("linear_matrix", {"A1": [[0.4, 0.1], [0.0, 0.3]], "A2": [[0.2, 0.0], [0.1, 0.5]], "Theta": [[2.0, 0.3], [0.1, 1.5]]}),
            ("sinusoidal_scalar", {"c1": 0.8, "c2": 1.2}),
            ("tanh_coupled", {"n": 2, "l1": 1.0, "l2": 0.5, "b_lower": 1.0}),
            ("nonaffine_cubic_u", {"c1": 1.0, "c2": 0.5, "b_lower": 0.7}),
            ("rotation_gain", {"b_lower": 1.0, "s": 10.0, "a1": 0.5, "a2": 0.2}),
        ],
    )
    def test_every_family_passes_own_bounds(self, fam, params):
        p = pm.build_family(fam, params)
        rep = pm.validate_class_membership(p, samples=1000, box_radius=10.0, seed=3)
        assert rep.passes, rep

    def test_fd_jacobians_match_analytic(self):
        rng = np.random.default_rng(9)
        for fam, params in [
            ("sinusoidal_scalar", {"c1": 1.0, "c2": 1.0}),
            ("nonaffine_cubic_u", {"c1": 0.5, "c2": 1.0, "b_lower": 1.0}),
            ("rotation_gain", {"b_lower": 2.0, "s": 5.0, "a1": 0.3, "a2": 0.1}),
        ]:
            p = pm.build_family(fam, params)
            for _ in range(100):
                args = [rng.uniform(-5, 5, p.n) for _ in range(3)]
                for idx, jac_fn in enumerate((p.jac_x1, p.jac_x2, p.jac_u)):
                    analytic = np.asarray(jac_fn(*args))

                    def slice_fn(v, idx=idx):
                        call = list(args)
                        call[idx] = v
                        return p.f(*call)

                    fd = pm.fd_jacobian(slice_fn, args[idx])
                    denom = 1.0 + np.linalg.norm(analytic)
                    assert np.max(np.abs(fd - analytic)) / denom < 1e-5

    def test_nan_plant_raises(self):
        bad = pm.custom_plant(
            n=1,
            order="second_order",
            f=lambda x1, x2, u: np.array([np.nan if x1[0] < 0 else x1[0]]),
            declared_bounds=UncertaintyBounds(1, 1, 1),
        )
        with pytest.raises(PlantError):
            pm.validate_class_membership(bad, samples=50, seed=0)


class TestEquilibriumShiftCheck:
    def test_origin(self):
        assert pm.equilibrium_shift_check(sin_plant(), [0.0])

    def test_pi_point(self):
        assert pm.equilibrium_shift_check(sin_plant(), [np.pi])

    def test_half_pi_rejected(self):
        assert not pm.equilibrium_shift_check(sin_plant(), [np.pi / 2])

    def test_first_order_rejected(self):
        p = pm.build_family("sinusoidal_scalar", {"order": FIRST_ORDER})
        with pytest.raises(UsageError):
            pm.equilibrium_shift_check(p, [0.0])


class TestCustomPlant:
    def test_fd_fallback_jacobians(self):
        p = pm.custom_plant(
            n=1,
            order="second_order",
            f=lambda x1, x2, u: np.sin(x1) - x2 + u,
            declared_bounds=UncertaintyBounds(1, 1, 1),
        )
        rep = pm.validate_class_membership(p, samples=100, seed=4, fd_check=False)
        assert rep.passes
        j = p.jac_x1(np.array([0.0]), np.zeros(1), np.zeros(1))
        assert abs(j[0, 0] - 1.0) < 1e-6
