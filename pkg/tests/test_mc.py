import json

import numpy as np
import pytest

import ridgeband as rb
from ridgeband import mc


@pytest.fixture(scope="module")
def sharp_model():
    return rb.ElongatedGaussian(1.0, 0.3)


GRID_STARTS = np.stack([np.linspace(0.2, 0.5, 4), np.full(4, 0.08)], axis=-1)


def small_config(model, **kw):
    base = dict(
        model=model,
        n_grid=(8000,),
        reps=5,
        seed=13,
        starts=GRID_STARTS,
        t_max=0.2,
        bounds=(-4.0, 4.0, -3.0, 3.0),
        normalize_v=True,
    )
    base.update(kw)
    return mc.ExperimentConfig(**base)


class TestConfig:
    def test_zero_reps_rejected(self, sharp_model):
        with pytest.raises(ValueError):
            small_config(sharp_model, reps=0)

    def test_nondecreasing_grid_rejected(self, sharp_model):
        with pytest.raises(ValueError):
            small_config(sharp_model, n_grid=(4000, 2000))

    def test_gaussfield_spacing_cap(self):
        with pytest.raises(ValueError):
            mc.GaussFieldConfig(
                h_grid=(0.5,), reps=5, seed=1, filament=np.array([[0.0, 0.0], [1.0, 0.0]]),
                noise_spacing=0.25,
            )

    def test_gaussfield_bandwidths_in_unit_interval(self):
        with pytest.raises(ValueError):
            mc.GaussFieldConfig(
                h_grid=(1.5,), reps=5, seed=1, filament=np.array([[0.0, 0.0], [1.0, 0.0]])
            )


class TestLimitLaw:
    def test_reference_values(self):
        assert mc.limit_law_cdf(0.0) == pytest.approx(np.exp(-2.0), rel=1e-12)
        assert mc.limit_law_cdf(2.0) == pytest.approx(np.exp(-2.0 * np.exp(-2.0)), rel=1e-12)
        assert mc.limit_law_cdf(2.0) == pytest.approx(0.763, abs=2e-4)

    def test_monotone(self):
        z = np.linspace(-3, 5, 50)
        assert np.all(np.diff(mc.limit_law_cdf(z)) > 0)


class TestSupDeviation:
    def test_smoke_and_determinism(self, sharp_model, constants):
        cfg = small_config(sharp_model)
        out1 = mc.run_sup_deviation(cfg, constants)
        out2 = mc.run_sup_deviation(cfg, constants)
        assert json.dumps(out1, sort_keys=True) == json.dumps(out2, sort_keys=True)
        per_n = out1["per_n"][0]
        assert len(per_n["records"]) == 5
        zs = sorted(per_n["p_at_z"])
        probs = [per_n["p_at_z"][z] for z in zs]
        assert all(b >= a for a, b in zip(probs, probs[1:]))

    def test_seed_changes_records_not_schema(self, sharp_model, constants):
        a = mc.run_sup_deviation(small_config(sharp_model), constants)
        b = mc.run_sup_deviation(small_config(sharp_model, seed=14), constants)
        assert a["per_n"][0].keys() == b["per_n"][0].keys()
        assert a["per_n"][0]["records"] != b["per_n"][0]["records"]

    def test_workers_match_serial(self, sharp_model, constants):
        serial = mc.run_sup_deviation(small_config(sharp_model), constants)
        threaded = mc.run_sup_deviation(small_config(sharp_model, workers=4), constants)
        for r1, r2 in zip(serial["per_n"][0]["records"], threaded["per_n"][0]["records"]):
            assert r1["rep"] == r2["rep"]
            assert r1["sup"] == pytest.approx(r2["sup"], abs=1e-12)


class TestPointwise:
    def test_theory_assembled_two_ways(self, sharp_model, constants):
        cfg = small_config(sharp_model, reps=3)
        out = mc.run_pointwise(cfg, [0.3, 0.08], constants)
        pn = out["per_n"][0]
        assert pn["variance_theory"] == pytest.approx(
            pn["variance_theory_ratio_form"], rel=1e-12
        )

    def test_failure_budget_enforced(self, constants):
        # a start in the far tail fails to produce crossings at tiny n
        model = rb.ElongatedGaussian(1.0, 0.3)
        cfg = mc.ExperimentConfig(
            model=model,
            n_grid=(64,),
            reps=6,
            seed=3,
            starts=np.array([[2.8, 0.1]]),
            t_max=0.2,
            bounds=(-4.0, 4.0, -3.0, 3.0),
            normalize_v=True,
        )
        with pytest.raises(mc.ExperimentError):
            mc.run_pointwise(cfg, [2.8, 0.1], constants)


class TestRate:
    def test_regression_self_test(self):
        # least-squares slope of y = x data is exactly one
        x = np.array([1.0, 2.0, 3.0])
        slope, _ = np.polyfit(np.log(x), np.log(x), 1)
        assert slope == pytest.approx(1.0, abs=1e-12)

    def test_needs_three_sizes(self, sharp_model):
        with pytest.raises(ValueError):
            mc.run_rate(small_config(sharp_model, n_grid=(1000, 2000)))

    def test_smoke_monotone_medians(self, sharp_model):
        cfg = small_config(
            sharp_model,
            n_grid=(2000, 8000, 32000),
            reps=10,
            starts=np.array([[0.3, 0.0]]),
            t_max=0.035,
            normalize_v=False,
            step_factor=0.006,
        )
        out = mc.run_rate(cfg)
        meds = [pn["median_sup"] for pn in out["per_n"]]
        assert meds[-1] < meds[0]
        assert np.isfinite(out["slope"])


class TestGaussField:
    def test_variance_normalized_and_far_cov_zero(self, constants):
        model = rb.ElongatedGaussian(2.0, 1.0)
        cfg = mc.GaussFieldConfig(
            h_grid=(0.5,), reps=50, seed=2, filament=model.axis_segment(0.4, 2.4, 41)
        )
        out = mc.simulate_gauss_field(cfg, model, constants)
        ph = out["per_h"][0]
        assert ph["var_probe_max_abs_err"] < 0.03
        assert ph["far_dist"] >= 2.0
        assert ph["far_cov_weights"] == 0.0
        assert abs(ph["far_cov_mc"]) < 3 * ph["far_cov_mc_se"] + 1e-12
        zs = sorted(ph["p_at_z"])
        probs = [ph["p_at_z"][z] for z in zs]
        assert all(b >= a for a, b in zip(probs, probs[1:]))

    def test_cell_budget_guard(self, constants):
        model = rb.ElongatedGaussian(2.0, 1.0)
        cfg = mc.GaussFieldConfig(
            h_grid=(0.125,),
            reps=2,
            seed=2,
            filament=model.axis_segment(0.4, 2.4, 41),
            cell_budget=100,
        )
        with pytest.raises(mc.ExperimentError):
            mc.simulate_gauss_field(cfg, model, constants)

    def test_deterministic(self, constants):
        model = rb.ElongatedGaussian(2.0, 1.0)
        cfg = mc.GaussFieldConfig(
            h_grid=(0.5,), reps=10, seed=5, filament=model.axis_segment(0.4, 2.4, 21)
        )
        a = mc.simulate_gauss_field(cfg, model, constants)
        b = mc.simulate_gauss_field(cfg, model, constants)
        assert a["per_h"][0]["sups"] == b["per_h"][0]["sups"]


@pytest.fixture(scope="module")
def expansion_report(constants):
    model = rb.ElongatedGaussian(2.0, 1.0)
    return mc.covariance_expansion_check(
        model, constants, x=np.array([0.8, 0.35]) / 0.05, h=0.05
    )


class TestCovarianceExpansion:

    def test_self_correlation_is_one(self, expansion_report):
        assert abs(expansion_report["r_at_zero_minus_one"]) < 1e-12

    def test_symmetry(self, expansion_report):
        assert expansion_report["symmetry_residual"] < 1e-10

    def test_zero_beyond_support_overlap(self, expansion_report):
        assert np.linalg.norm(expansion_report["far_displacement"]) > 2.0
        assert expansion_report["far_abs_value"] < 1e-12

    def test_quadratic_fit_matches_model(self, expansion_report):
        assert expansion_report["rel_frobenius"] < 0.05
        # at small h the kernel term dominates the local expansion
        assert expansion_report["rel_frobenius_kernel_only"] < 0.05
        assert np.max(np.abs(expansion_report["linear_coef"])) < 1e-6
