"""Transformation stack: round-trip, Jacobian, monotonicity, packing."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fd_log_jacobian, random_stack
from warpmix import warp
from warpmix.errors import DomainViolation, SpecificationError


def test_identity_sa_is_identity():
    y = np.linspace(-5, 5, 101)
    step = warp.sa_step()
    stack = warp.WarpStack((step,))
    np.testing.assert_allclose(warp.forward(stack, y), y, atol=1e-14)
    assert warp.log_jacobian(stack, y) == pytest.approx(0.0, abs=1e-12)


def test_round_trip_random_stacks(rng):
    worst = 0.0
    for _ in range(200):
        stack, y = random_stack(rng)
        z = warp.forward(stack, y)
        back = warp.inverse(stack, z)
        worst = max(worst, float(np.max(np.abs(back - y))))
    assert worst < 1e-8


@pytest.mark.parametrize(
    "make_step,y",
    [
        (lambda: warp.sa_step((0.3, 1.4, 0.8, -0.2)), np.linspace(-3, 3, 41)),
        (lambda: warp.box_cox_step(0.5), np.linspace(0.1, 5, 41)),
        (lambda: warp.box_cox_step(0.0), np.linspace(0.1, 5, 41)),
        (lambda: warp.log_step(), np.linspace(0.1, 5, 41)),
        (lambda: warp.standardize_step(1.0, 2.0), np.linspace(-3, 3, 41)),
        (lambda: warp.shift_step(0.7), np.linspace(0.1, 5, 41)),
    ],
)
def test_jacobian_each_step_kind(make_step, y):
    stack = warp.WarpStack((make_step(),))
    analytic = warp.log_jacobian(stack, y)
    numeric = fd_log_jacobian(stack, y)
    assert analytic == pytest.approx(numeric, rel=1e-5, abs=1e-6)


def test_jacobian_composed_stacks(rng):
    for _ in range(50):
        stack, y = random_stack(rng)
        analytic = warp.log_jacobian(stack, y)
        numeric = fd_log_jacobian(stack, y)
        assert analytic == pytest.approx(numeric, rel=1e-5, abs=1e-6)


def test_log_deriv_samples_sums_to_jacobian(rng):
    stack, y = random_stack(rng)
    per = warp.log_deriv_samples(stack, y)
    assert float(per.sum()) == pytest.approx(warp.log_jacobian(stack, y), rel=1e-12)


def test_identity_stack_jacobian_is_scale_term(rng):
    # standardize-only stack: derivative 1/sd everywhere
    y = rng.normal(size=80) * 3.0 + 1.0
    stack = warp.fit_standardize(warp.default_template(0), y)
    expected = -y.shape[0] * np.log(y.std())
    assert warp.log_jacobian(stack, y) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(
    seed=st.integers(0, 10**6),
    lo=st.floats(-3, 2.9),
)
def test_monotonicity_property(seed, lo):
    rng = np.random.default_rng(seed)
    stack, _ = random_stack(rng)
    y = np.linspace(lo, lo + 1.0, 50)
    if any(s.kind in (warp.BOX_COX, warp.LOG) for s in stack.steps):
        y = np.abs(y) + 0.1
    z = warp.forward(stack, np.sort(y))
    assert np.all(np.diff(z) > 0)


def test_fit_standardize_output_moments(rng):
    y = rng.gamma(3.0, 1.0, size=200)
    stack = warp.fit_standardize(warp.nonneg_template(2, y), y)
    z = warp.forward(stack, y)
    assert z.mean() == pytest.approx(0.0, abs=1e-12)
    assert z.std() == pytest.approx(1.0, rel=1e-12)


def test_trainable_counts():
    assert warp.default_template(2).n_trainable == 8
    assert warp.default_template(0).n_trainable == 0
    y = np.linspace(0.1, 4.0, 30)
    assert warp.nonneg_template(2, y).n_trainable == 10


def test_pack_unpack_round_trip(rng):
    for _ in range(30):
        stack, y = random_stack(rng)
        v = warp.pack_params(stack)
        assert v.shape == (stack.n_trainable,)
        again = warp.pack_params(warp.unpack_params(stack, v))
        np.testing.assert_allclose(again, v, atol=1e-10)


def test_unpack_preserves_standardize_and_structure():
    y = np.linspace(0.5, 5.0, 40)
    stack = warp.fit_standardize(warp.nonneg_template(1, y), y)
    v = warp.pack_params(stack) + 0.25
    new = warp.unpack_params(stack, v)
    assert [s.kind for s in new.steps] == [s.kind for s in stack.steps]
    for s_old, s_new in zip(stack.steps, new.steps):
        if s_old.kind == warp.STANDARDIZE:
            assert s_new.params == s_old.params  # data-derived, not trainable


def test_json_round_trip(rng):
    stack, y = random_stack(rng)
    clone = warp.WarpStack.from_json(stack.to_json())
    assert clone == stack
    np.testing.assert_array_equal(warp.forward(clone, y), warp.forward(stack, y))
    doc = json.loads(stack.to_json())
    assert set(doc) == {"template", "steps"}


def test_domain_violation_reports_index():
    stack = warp.WarpStack((warp.log_step(),))
    y = np.array([1.0, 2.0, -3.0, 4.0])
    with pytest.raises(DomainViolation) as exc:
        warp.forward(stack, y)
    assert 2 in np.asarray(exc.value.indices)


def test_negative_depth_rejected():
    with pytest.raises(SpecificationError):
        warp.default_template(-1)


def test_shift_floor_keeps_box_cox_feasible():
    y = np.array([0.0, 0.5, 1.0, 2.0, 4.0])
    stack = warp.fit_standardize(warp.nonneg_template(1, y), y)
    z = warp.forward(stack, y)  # zero response must not blow up
    assert np.all(np.isfinite(z))
    assert np.isfinite(warp.log_jacobian(stack, y))
