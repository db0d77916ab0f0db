"""Estimator behavior: reductions, selection, effects, inference, serde."""

import numpy as np
import pytest

from warpmix import model, warp
from warpmix.errors import SpecificationError


def _linear_data(rng, n=200, noise=0.7, coords=True):
    c = rng.normal(size=(n, 2)) if coords else None
    x1 = rng.uniform(size=n)
    x2 = rng.normal(size=n)
    y = 3.0 + 2.0 * x1 - 1.0 * x2 + noise * rng.normal(size=n)
    data = model.Dataset(
        y=y, x=np.column_stack([x1, x2]), covariate_names=["x1", "x2"], coords=c
    )
    return data, (3.0, 2.0, -1.0)


def _svc_data(rng, n=300):
    coords = rng.normal(size=(n, 2))
    x1 = rng.uniform(size=n)
    b1 = 1.5 + np.sin(coords[:, 0]) + 0.5 * coords[:, 1]
    y = 2.0 + b1 * x1 + 0.4 * rng.normal(size=n)
    return model.Dataset(y=y, x=x1[:, None], covariate_names=["x1"], coords=coords), b1


def test_identity_fit_matches_ols(rng):
    data, truth = _linear_data(rng, coords=False)
    spec = model.ModelSpec(tr_num=0, allow_svc=False, spatial_intercept=False)
    fit = model.fit_camm(data, spec)
    n = data.n
    X = np.column_stack([np.ones(n), data.x])
    beta_ols = np.linalg.lstsq(X, data.y, rcond=None)[0]
    np.testing.assert_allclose(fit.beta, beta_ols, atol=1e-10)
    assert fit.coef_type == ["Const", "Const", "Const"]
    # prediction is the linear predictor itself at depth 0
    np.testing.assert_allclose(model.predict(fit, data), X @ beta_ols, atol=1e-10)


def test_stepwise_keeps_constant_on_constant_truth(rng):
    data, _ = _linear_data(rng)
    spec = model.ModelSpec(
        tr_num=0, select_types=True, allow_svc=True, allow_nvc=True,
        spatial_intercept=True, max_eigenvectors=15,
    )
    fit = model.fit_camm(data, spec)
    assert fit.coef_type == ["Const", "Const", "Const"]


def test_stepwise_detects_svc(rng):
    data, b1 = _svc_data(rng)
    spec = model.ModelSpec(tr_num=0, select_types=True, max_eigenvectors=20)
    fit = model.fit_camm(data, spec)
    assert fit.coef_type[1] == "SVC"
    est = fit.varying["x1"]["total"]
    assert np.corrcoef(est, b1)[0, 1] > 0.7


def test_depth_selection_prefers_warp_on_warped_data(rng):
    n = 400
    x1 = rng.uniform(size=n)
    z = 1.0 + 2.0 * x1 + 0.5 * rng.normal(size=n)
    y = np.sinh(z / 1.5)
    data = model.Dataset(y=y, x=x1[:, None], covariate_names=["x1"])
    spec = model.ModelSpec(
        tr_num="select", d_candidates=(0, 1), allow_svc=False,
        spatial_intercept=False,
    )
    fit = model.fit_camm(data, spec)
    assert fit.d == 1
    assert len(fit.bic_by_d) == 2
    bics = dict(fit.bic_by_d)
    assert bics[1] < bics[0]


def test_discrete_response_refused(rng):
    data = model.Dataset(
        y=rng.integers(0, 30, size=100).astype(float),
        x=rng.uniform(size=(100, 1)),
        covariate_names=["x1"],
    )
    with pytest.raises(SpecificationError, match="density"):
        model.fit_camm(data, model.ModelSpec(tr_num=0, allow_svc=False,
                                             spatial_intercept=False))


def test_missing_values_refused(rng):
    y = rng.normal(size=50)
    y[3] = np.nan
    data = model.Dataset(y=y, x=rng.uniform(size=(50, 1)), covariate_names=["x1"])
    with pytest.raises(SpecificationError, match="missing"):
        model.fit_camm(data, model.ModelSpec(tr_num=0, allow_svc=False,
                                             spatial_intercept=False))


def test_marginal_effects_identity_equals_coefficients(rng):
    data, truth = _linear_data(rng, coords=False)
    spec = model.ModelSpec(tr_num=0, allow_svc=False, spatial_intercept=False)
    fit = model.fit_camm(data, spec)
    me = model.marginal_effects(fit, data)
    assert me["x1"]["median"] == pytest.approx(fit.beta[1], rel=1e-10)
    assert me["x2"]["median"] == pytest.approx(fit.beta[2], rel=1e-10)


def test_marginal_effects_log_scale_oracle(rng):
    # y = exp(mu + eps): coefficient beta on log(y) means dy/dx = beta * y;
    # fitting with a trainable stack should report effects close to the
    # finite-difference derivative of the fitted prediction surface
    n = 500
    x1 = rng.uniform(size=n)
    y = np.exp(0.5 + 0.8 * x1 + 0.3 * rng.normal(size=n))
    data = model.Dataset(y=y, x=x1[:, None], covariate_names=["x1"])
    spec = model.ModelSpec(tr_num=1, allow_svc=False, spatial_intercept=False)
    fit = model.fit_camm(data, spec)
    me = model.marginal_effects(fit, data)

    h = 1e-5
    up = model.Dataset(y=y, x=(x1 + h)[:, None], covariate_names=["x1"])
    dn = model.Dataset(y=y, x=(x1 - h)[:, None], covariate_names=["x1"])
    fd = (model.predict(fit, up) - model.predict(fit, dn)) / (2 * h)
    # compare the median effect to the median finite-difference derivative
    # where the fitted value is close to the observation (effects are
    # evaluated at the observed y)
    pred = model.predict(fit, data)
    close = np.abs(pred - y) < np.quantile(np.abs(pred - y), 0.5)
    assert me["x1"]["median"] == pytest.approx(np.median(fd[close]), rel=0.25)


def test_inference_coverage_identity(rng):
    # nominal-level sanity: with Gaussian noise and a constant coefficient,
    # the 95% interval for beta_1 should cover the truth most of the time
    hits = 0
    for rep in range(40):
        r = np.random.default_rng(rep)
        data, truth = _linear_data(r, n=150, coords=False)
        fit = model.fit_camm(
            data, model.ModelSpec(tr_num=0, allow_svc=False, spatial_intercept=False)
        )
        lo = fit.beta[1] - 1.96 * fit.se_beta[1]
        hi = fit.beta[1] + 1.96 * fit.se_beta[1]
        hits += int(lo <= truth[1] <= hi)
    assert hits >= 32  # ~95% nominal, generous lower bound


def test_se_scales_with_noise(rng):
    data_lo, _ = _linear_data(np.random.default_rng(5), n=400, noise=0.5, coords=False)
    data_hi, _ = _linear_data(np.random.default_rng(5), n=400, noise=1.0, coords=False)
    spec = model.ModelSpec(tr_num=0, allow_svc=False, spatial_intercept=False)
    se_lo = model.fit_camm(data_lo, spec).se_beta[1]
    se_hi = model.fit_camm(data_hi, spec).se_beta[1]
    assert se_hi == pytest.approx(2.0 * se_lo, rel=0.05)


def test_group_intercepts_recovered(rng):
    n = 300
    gids = rng.integers(0, 5, size=n)
    offsets = np.array([2.0, -1.0, 0.5, 1.0, -2.5])
    x1 = rng.uniform(size=n)
    y = 1.0 + x1 + offsets[gids] + 0.3 * rng.normal(size=n)
    data = model.Dataset(
        y=y, x=x1[:, None], covariate_names=["x1"],
        group_ids={"site": gids},
    )
    spec = model.ModelSpec(tr_num=0, allow_svc=False, spatial_intercept=False)
    fit = model.fit_camm(data, spec)
    term = [t for t in fit.terms if t.group_column == "site"][0]
    est = np.asarray(term.gamma)
    center = lambda v: v - v.mean()
    assert np.corrcoef(center(est), center(offsets))[0, 1] > 0.99


def test_serde_round_trip_bit_exact(rng):
    data, b1 = _svc_data(rng)
    spec = model.ModelSpec(tr_num=1, select_types=False, max_eigenvectors=15)
    fit = model.fit_camm(data, spec)
    clone = model.from_json(model.to_json(fit))
    np.testing.assert_array_equal(model.predict(fit, data), model.predict(clone, data))
    # a second serialization round trip is byte-identical
    assert model.to_json(clone) == model.to_json(fit)


def test_predict_unknown_group_uses_prior_mean(rng):
    n = 200
    gids = rng.integers(0, 4, size=n)
    y = 1.0 + gids.astype(float) + 0.2 * rng.normal(size=n)
    x = rng.uniform(size=(n, 1))
    data = model.Dataset(y=y, x=x, covariate_names=["x1"], group_ids={"g": gids})
    fit = model.fit_camm(
        data, model.ModelSpec(tr_num=0, allow_svc=False, spatial_intercept=False)
    )
    new = model.Dataset(
        y=np.zeros(2), x=np.full((2, 1), 0.5), covariate_names=["x1"],
        group_ids={"g": np.array([0, 99])},
    )
    p = model.predict(fit, new)
    term = [t for t in fit.terms if t.group_column == "g"][0]
    # row with unseen group id differs from a known group by that group's
    # fitted offset (the unseen group contributes zero)
    assert p[0] - p[1] == pytest.approx(fit.scale_a * term.gamma[0], rel=1e-8)


def test_nvc_term_out_of_sample_evaluation(rng):
    n = 400
    x1 = rng.uniform(0, 4, size=n)
    beta_x = 1.0 + 0.5 * np.sin(x1)
    y = 2.0 + beta_x * x1 + 0.2 * rng.normal(size=n)
    data = model.Dataset(y=y, x=x1[:, None], covariate_names=["x1"])
    spec = model.ModelSpec(
        tr_num=0, allow_svc=False, spatial_intercept=False,
        allow_nvc=True, select_types=False,
    )
    fit = model.fit_camm(data, spec)
    assert fit.coef_type[1] == "NVC"
    # in-sample stored path equals the path recomputed through the term
    paths = model.coefficient_paths(fit, data)
    np.testing.assert_allclose(paths["x1"], fit.varying["x1"]["total"], atol=1e-10)
    # prediction tracks the curved surface
    pred = model.predict(fit, data)
    assert np.sqrt(np.mean((pred - y) ** 2)) < 0.3
