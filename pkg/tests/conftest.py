"""Shared fixtures and independent oracles for the test suite."""

import numpy as np
import pytest

from warpmix import basis, reml, warp


def dense_restricted_loglik(x, e, prior_var, z):
    """Standard dense-matrix restricted likelihood with profiled noise
    variance: Sigma = I + E diag(prior_var) E'.  Used as an oracle for the
    inner-product implementation; O(N^3), fine for tiny N."""
    n, j = x.shape
    sigma = np.eye(n) + (e * prior_var[None, :]) @ e.T
    si = np.linalg.inv(sigma)
    xtsx = x.T @ si @ x
    beta = np.linalg.solve(xtsx, x.T @ si @ z)
    resid = z - x @ beta
    d = float(resid @ si @ z)
    sign1, logdet_sigma = np.linalg.slogdet(sigma)
    sign2, logdet_xtsx = np.linalg.slogdet(xtsx)
    assert sign1 > 0 and sign2 > 0
    ll = (
        -0.5 * (logdet_sigma + logdet_xtsx)
        - 0.5 * (n - j) * (1.0 + np.log(2.0 * np.pi * d / (n - j)))
    )
    return ll, beta, d


def dense_prior_variance(theta, info):
    """Per-column prior variance implied by a VarianceSpec."""
    return reml.prior_sd_diagonal(theta, info) ** 2


def random_instance(rng, n_max=50, j_max=3, k_max=2):
    """Small random mixed-model instance with known prior variances."""
    n = int(rng.integers(20, n_max + 1))
    j = int(rng.integers(1, j_max + 1))
    k = int(rng.integers(1, k_max + 1))
    x = np.column_stack([np.ones(n)] + [rng.normal(size=n) for _ in range(j - 1)])
    blocks = []
    for kk in range(k):
        cols = int(rng.integers(2, 5))
        b = rng.normal(size=(n, cols))
        if rng.random() < 0.5:
            eig = np.sort(rng.uniform(0.2, 3.0, size=cols))[::-1]
            blocks.append(
                basis.EffectBlock(
                    basis.SPATIAL_VC, b, eigenvalues=eig,
                    covariate_index=0, name=f"b{kk}",
                )
            )
        else:
            blocks.append(
                basis.EffectBlock(basis.NONSPATIAL_VC, b, covariate_index=0, name=f"b{kk}")
            )
    z = rng.normal(size=n)
    info = reml.BlockInfo.from_blocks(blocks)
    theta = reml.VarianceSpec(
        tau_sq=rng.uniform(0.1, 2.0, size=k),
        alpha=np.where(info.is_spatial, rng.uniform(-1.0, 1.5, size=k), 0.0),
    )
    e = np.hstack([b.basis for b in blocks])
    return x, blocks, e, z, theta, info


def random_stack(rng):
    """Random transformation stack drawn from both templates with
    perturbed parameters, plus a compatible response sample."""
    d = int(rng.integers(0, 4))
    if rng.random() < 0.5:
        stack = warp.default_template(d)
        y = rng.normal(loc=rng.uniform(-2, 2), scale=rng.uniform(0.5, 3), size=60)
    else:
        y = rng.gamma(2.0, 2.0, size=60)
        stack = warp.nonneg_template(d, y)
    stack = warp.fit_standardize(stack, y)
    v = warp.pack_params(stack)
    v = v + rng.uniform(-0.3, 0.3, size=v.shape)
    stack = warp.unpack_params(stack, v)
    stack = warp.fit_standardize(stack, y)
    return stack, y


def fd_log_jacobian(stack, y, h=1e-6):
    """Central finite-difference log-Jacobian oracle."""
    up = warp.forward(stack, y + h)
    dn = warp.forward(stack, y - h)
    return float(np.sum(np.log((up - dn) / (2.0 * h))))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
