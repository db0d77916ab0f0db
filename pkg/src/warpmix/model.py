"""User-facing estimator.

Assembles random-effect blocks (spatially varying coefficients via Moran
eigenvectors, covariate-dependent coefficients via natural splines, group
and temporal intercepts), selects coefficient types and transformation
depth by BIC, and reports coefficients, predictions on the original
response scale, marginal effects, and model-based standard errors.

Reporting scale: the likelihood is evaluated on the standardized
transformed response, which leaves an affine indeterminacy in how
coefficients are quoted.  Estimates are reported on the affine
representative of the fitted transformation that is identity-like at the
data's center (unit derivative at the median sample, median preserved).
When the fitted transformation is pure standardization this reproduces the
untransformed-response model exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import scipy.linalg as sla
from scipy.stats import norm

from . import basis as basismod
from . import reml as remlmod
from . import warp as warpmod
from .errors import DomainViolation, SpecificationError

SCHEMA_VERSION = 1

CONST = "Const"
SVC = "SVC"
NVC = "NVC"
SNVC = "SNVC"


@dataclass
class Dataset:
    """In-memory regression data.  ``x`` excludes the intercept column."""

    y: np.ndarray
    x: np.ndarray
    covariate_names: list[str]
    coords: np.ndarray | None = None
    location_id: np.ndarray | None = None
    group_ids: dict = field(default_factory=dict)
    time_id: np.ndarray | None = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        if self.x.shape[0] != self.y.shape[0]:
            self.x = self.x.T
        if self.coords is not None:
            self.coords = np.asarray(self.coords, dtype=float)

    @property
    def n(self):
        return self.y.shape[0]


@dataclass
class ModelSpec:
    """What to estimate.

    ``allow_svc`` / ``allow_nvc`` may be a single flag or a mapping from
    covariate name to flag.  ``tr_num`` is the number of sinh-arcsinh
    steps, or "select" to choose it from ``d_candidates`` by BIC.
    """

    covariates: list[str] | None = None
    allow_svc: bool | dict = True
    allow_nvc: bool | dict = False
    spatial_intercept: bool = True
    tr_num: int | str = 0
    tr_nonneg: bool = False
    d_candidates: tuple = (0, 1, 2, 3, 4)
    knot_count: int = 5
    kernel_range: float | None = None
    max_eigenvectors: int = basismod.MAX_EIGENVECTORS
    select_types: bool = True
    options: remlmod.FitOptions = field(default_factory=remlmod.FitOptions)

    def __post_init__(self):
        if self.tr_num != "select" and not isinstance(self.tr_num, int):
            raise SpecificationError('tr_num must be an integer or "select"')
        if self.tr_num == "select" and not self.d_candidates:
            raise SpecificationError("d_candidates must be non-empty")

    def svc_allowed(self, name):
        return self._flag(self.allow_svc, name)

    def nvc_allowed(self, name):
        return self._flag(self.allow_nvc, name)

    @staticmethod
    def _flag(flag, name):
        if isinstance(flag, dict):
            return bool(flag.get(name, False))
        return bool(flag)


@dataclass
class Term:
    """One fitted random-effect term plus what is needed to evaluate it at
    new data."""

    kind: str
    covariate: str | None
    gamma: np.ndarray
    eigenvalues: np.ndarray | None = None  # spatial kinds
    knots: np.ndarray | None = None  # nvc
    col_means: np.ndarray | None = None  # nvc
    categories: list | None = None  # group/temporal
    group_column: str | None = None


@dataclass
class FitResult:
    """Fitted model on the reporting scale (see module docstring)."""

    covariate_names: list[str]
    beta: np.ndarray
    se_beta: np.ndarray
    coef_type: list[str]
    varying: dict  # name -> {total, svc_part, nvc_part, se, p}
    theta: remlmod.VarianceSpec
    stack: warpmod.WarpStack
    sigma_sq: float
    log_restricted_lik: float
    bic: float
    converged: bool
    d: int
    bic_by_d: list
    scale_a: float
    scale_b: float
    terms: list
    spatial: basismod.SpatialBasis | None
    n: int
    trace: list = field(default_factory=list)
    reml_fit: remlmod.RemlFit | None = None


def _validate(data, x, names):
    if not np.all(np.isfinite(data.y)):
        raise SpecificationError("response contains missing or non-finite values")
    if not np.all(np.isfinite(x)):
        raise SpecificationError("covariates contain missing or non-finite values")
    if data.coords is not None and not np.all(np.isfinite(data.coords)):
        raise SpecificationError("coordinates contain missing or non-finite values")
    if np.all(data.y == np.round(data.y)):
        raise SpecificationError(
            "response looks discrete (all values are integers); convert counts "
            "to a density (e.g. divide by area or population) before fitting"
        )


def _design(data, spec):
    names = spec.covariates if spec.covariates is not None else list(data.covariate_names)
    idx = []
    for name in names:
        try:
            idx.append(data.covariate_names.index(name))
        except ValueError:
            raise SpecificationError(f"unknown covariate {name!r}") from None
    x = np.column_stack([np.ones(data.n)] + [data.x[:, i] for i in idx])
    return x, ["Intercept"] + list(names)


def _spatial_setup(data, spec):
    if data.coords is None:
        return None, None
    if data.location_id is not None:
        ids, first = np.unique(np.asarray(data.location_id), return_index=True)
        sb = basismod.moran_eigenvectors(
            data.coords[first], kernel_range=spec.kernel_range,
            ids=ids.tolist(), max_vectors=spec.max_eigenvectors,
        )
        expanded = basismod.expand_by_location(sb, np.asarray(data.location_id))
    else:
        uniq, inverse = np.unique(data.coords, axis=0, return_inverse=True)
        sb = basismod.moran_eigenvectors(
            uniq, kernel_range=spec.kernel_range,
            max_vectors=spec.max_eigenvectors,
        )
        expanded = sb.vectors[inverse]
    return sb, expanded


def _group_blocks(data):
    blocks = []
    for name, ids in data.group_ids.items():
        blocks.append(
            basismod.EffectBlock(
                basismod.GROUP_INTERCEPT, basismod.group_basis(ids), name=name
            )
        )
    if data.time_id is not None:
        blocks.append(
            basismod.EffectBlock(
                basismod.TEMPORAL_INTERCEPT,
                basismod.group_basis(data.time_id),
                name="time",
            )
        )
    return blocks


def _make_template(spec, d, y):
    if spec.tr_nonneg:
        return warpmod.nonneg_template(d, y)
    return warpmod.default_template(d)


def fit_camm(data, spec=None):
    """Fit the warped additive mixed model, selecting coefficient types and
    transformation depth by BIC."""
    spec = spec or ModelSpec()
    x, names = _design(data, spec)
    _validate(data, x, names)
    n, j = x.shape
    if n <= j + 10:
        raise SpecificationError("need N > J + 10 samples")

    sb, expanded = _spatial_setup(data, spec)
    base_blocks = _group_blocks(data)
    d_list = list(spec.d_candidates) if spec.tr_num == "select" else [spec.tr_num]

    candidates = []
    for d in d_list:
        template = _make_template(spec, d, data.y)
        if spec.select_types:
            blocks, types = _stepwise_types(
                data, spec, x, names, sb, expanded, base_blocks, template
            )
        else:
            blocks, types = _all_allowed_blocks(
                data, spec, x, names, sb, expanded, base_blocks
            )
        rf = remlmod.fit(x, blocks, data.y, template, spec.options)
        candidates.append((d, rf, blocks, types))

    bic_by_d = [(d, rf.bic) for d, rf, _, _ in candidates]
    d_best, rf, blocks, types = min(candidates, key=lambda c: c[1].bic)
    return _assemble_result(
        data, x, names, sb, expanded, rf, blocks, types, d_best, bic_by_d
    )


def _svc_block_for(k, names, x, expanded, sb):
    if k == 0:
        return basismod.EffectBlock(
            basismod.SPATIAL_INTERCEPT, expanded,
            eigenvalues=sb.eigenvalues, covariate_index=0, name="Intercept",
        )
    return basismod.vc_block(expanded, sb.eigenvalues, x[:, k], k, name=names[k])


def _nvc_block_for(k, names, x, knot_count):
    return basismod.nvc_block(x[:, k], k, knot_count=knot_count, name=names[k])


def _all_allowed_blocks(data, spec, x, names, sb, expanded, base_blocks):
    blocks = list(base_blocks)
    types = []
    for k, name in enumerate(names):
        has_svc = has_nvc = False
        if sb is not None and (spec.spatial_intercept if k == 0 else spec.svc_allowed(name)):
            blocks.append(_svc_block_for(k, names, x, expanded, sb))
            has_svc = True
        if k > 0 and spec.nvc_allowed(name):
            blocks.append(_nvc_block_for(k, names, x, spec.knot_count))
            has_nvc = True
        types.append(_type_of(has_svc, has_nvc))
    return blocks, types


def _stepwise_types(data, spec, x, names, sb, expanded, base_blocks, template):
    """Forward stepwise per covariate: start constant, accept a spatial and
    then a covariate-dependent part only when each lowers the BIC."""
    blocks = list(base_blocks)
    best = remlmod.fit(x, blocks, data.y, template, spec.options).bic
    types = []
    for k, name in enumerate(names):
        has_svc = has_nvc = False
        if sb is not None and (spec.spatial_intercept if k == 0 else spec.svc_allowed(name)):
            trial = blocks + [_svc_block_for(k, names, x, expanded, sb)]
            cand = remlmod.fit(x, trial, data.y, template, spec.options).bic
            if cand < best:
                blocks, best, has_svc = trial, cand, True
        if k > 0 and spec.nvc_allowed(name):
            trial = blocks + [_nvc_block_for(k, names, x, spec.knot_count)]
            cand = remlmod.fit(x, trial, data.y, template, spec.options).bic
            if cand < best:
                blocks, best, has_nvc = trial, cand, True
        types.append(_type_of(has_svc, has_nvc))
    return blocks, types


def _type_of(has_svc, has_nvc):
    if has_svc and has_nvc:
        return SNVC
    if has_svc:
        return SVC
    if has_nvc:
        return NVC
    return CONST


def reporting_scale(stack, y):
    """Affine anchor: unit derivative at the median sample, median kept."""
    z = warpmod.forward(stack, y)
    deriv = np.exp(warpmod.log_deriv_samples(stack, y))
    a = 1.0 / float(np.median(deriv))
    b = float(np.median(y)) - a * float(np.median(z))
    return a, b


def _assemble_result(data, x, names, sb, expanded, rf, blocks, types, d, bic_by_d):
    n, j = rf.n, rf.j
    a, b = reporting_scale(rf.stack, data.y)

    beta_rep = a * rf.beta.copy()
    beta_rep[0] += b

    terms = _terms_from_blocks(data, blocks, rf, names)
    cov = _coefficient_covariance(rf)
    se_beta = a * np.sqrt(np.maximum(np.diag(cov)[:j], 0.0))
    varying = _varying_summaries(
        data, names, expanded, blocks, rf, terms, cov, a
    )

    return FitResult(
        covariate_names=names,
        beta=beta_rep,
        se_beta=se_beta,
        coef_type=types,
        varying=varying,
        theta=rf.theta,
        stack=rf.stack,
        sigma_sq=a * a * rf.sigma_sq,
        log_restricted_lik=rf.log_restricted_lik,
        bic=rf.bic,
        converged=rf.converged,
        d=d,
        bic_by_d=bic_by_d,
        scale_a=a,
        scale_b=b,
        terms=terms,
        spatial=sb,
        n=n,
        trace=rf.trace,
        reml_fit=rf,
    )


def _terms_from_blocks(data, blocks, rf, names):
    terms = []
    for blk, gamma in zip(blocks, rf.gamma):
        t = Term(kind=blk.kind, covariate=None, gamma=gamma)
        if blk.is_spatial:
            t.covariate = names[blk.covariate_index]
            t.eigenvalues = np.asarray(blk.eigenvalues)
        elif blk.kind == basismod.NONSPATIAL_VC:
            t.covariate = names[blk.covariate_index]
            # Keep the spline geometry for out-of-sample evaluation.
            xk = data.x[:, _data_col(data, names, blk.covariate_index)]
            t.knots = np.quantile(xk, np.linspace(0.0, 1.0, blk.n_cols + 1))
            t.col_means = _raw_spline(xk, t.knots).mean(axis=0)
        else:
            t.group_column = blk.name
            if blk.kind == basismod.TEMPORAL_INTERCEPT:
                cats = np.unique(np.asarray(data.time_id))
            else:
                cats = np.unique(np.asarray(data.group_ids[blk.name]))
            t.categories = cats.tolist()
        terms.append(t)
    return terms


def _data_col(data, names, k):
    return data.covariate_names.index(names[k])


def _raw_spline(x, knots):
    cols = [x] + [
        basismod._natural_spline_col(x, knots, kk) for kk in range(len(knots) - 2)
    ]
    return np.column_stack(cols)


def _spline_eval(t, x):
    return _raw_spline(np.asarray(x, dtype=float), t.knots) - t.col_means


def _coefficient_covariance(rf):
    """sigma^2 times the inverse of the profiled block system."""
    p = remlmod.prior_sd_diagonal(rf.theta, rf.info)
    ip, j, ltot = rf.inner, rf.j, rf.info.total_cols
    r = np.empty((j + ltot, j + ltot))
    pm_ex = p[:, None] * ip.m_ex
    r[:j, :j] = ip.m_xx
    r[:j, j:] = pm_ex.T
    r[j:, :j] = pm_ex
    r[j:, j:] = p[:, None] * ip.m_ee * p[None, :]
    r[j:, j:][np.diag_indices(ltot)] += 1.0
    cf = sla.cho_factor(r, lower=True, check_finite=False)
    rinv = sla.cho_solve(cf, np.eye(j + ltot), check_finite=False)
    return rf.sigma_sq * rinv


def _varying_summaries(data, names, expanded, blocks, rf, terms, cov, a):
    """Per-sample coefficient paths, SEs, and normal-reference p-values.

    The per-sample coefficient for covariate k is beta_k plus the spatial
    eigenvector rows (not multiplied by the covariate) and the spline rows
    times their block coefficients; its variance is the quadratic form of
    the same design rows in the joint (beta, u) covariance.
    """
    j = rf.j
    p = remlmod.prior_sd_diagonal(rf.theta, rf.info)
    out = {}
    for k, name in enumerate(names):
        svc_part = np.zeros(rf.n)
        nvc_part = np.zeros(rf.n)
        design_cols = []
        col_idx = [k]
        for gi, (blk, term, sl) in enumerate(zip(blocks, terms, rf.info.slices)):
            if blk.covariate_index != k:
                continue
            if blk.is_spatial:
                rows = expanded
                svc_part += rows @ rf.gamma[gi]
            else:
                rows = _spline_eval(term, data.x[:, _data_col(data, names, k)])
                nvc_part += rows @ rf.gamma[gi]
            design_cols.append(rows * p[sl][None, :])
            col_idx.extend(range(j + sl.start, j + sl.stop))
        total = rf.beta[k] + svc_part + nvc_part
        m = np.column_stack([np.ones(rf.n)] + design_cols)
        sub = cov[np.ix_(col_idx, col_idx)]
        var = np.einsum("ij,jk,ik->i", m, sub, m)
        se = np.sqrt(np.maximum(var, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            tval = np.where(se > 0, total / se, np.inf)
        pval = 2.0 * norm.sf(np.abs(tval))
        out[name] = {
            "total": a * total,
            "svc_part": a * svc_part,
            "nvc_part": a * nvc_part,
            "se": a * se,
            "p": pval,
        }
    return out


def _spatial_rows(fit, newdata):
    """Eigenvector rows for new samples: stored rows for known location ids,
    kernel projection for new coordinates."""
    sb = fit.spatial
    if sb is None:
        raise SpecificationError("model has spatial terms but no spatial basis")
    rows = np.zeros((newdata.n, sb.vectors.shape[1]))
    known = np.zeros(newdata.n, dtype=bool)
    if newdata.location_id is not None:
        lookup = sb.id_to_row
        for i, lid in enumerate(np.asarray(newdata.location_id)):
            r = lookup.get(lid)
            if r is not None:
                rows[i] = sb.vectors[r]
                known[i] = True
    if not np.all(known):
        if newdata.coords is None:
            raise SpecificationError("new locations need coordinates or known ids")
        rows[~known] = basismod.project_locations(sb, np.atleast_2d(newdata.coords)[~known])
    return rows


def _group_contribution(term, newdata):
    ids = (
        newdata.time_id
        if term.kind == basismod.TEMPORAL_INTERCEPT
        else newdata.group_ids.get(term.group_column)
    )
    if ids is None:
        raise SpecificationError(
            f"new data is missing group column {term.group_column!r}"
        )
    lookup = {c: i for i, c in enumerate(term.categories)}
    out = np.zeros(newdata.n)
    for i, gid in enumerate(np.asarray(ids)):
        gi = lookup.get(gid)
        if gi is not None:  # unseen groups fall back to the prior mean 0
            out[i] += term.gamma[gi]
    return out


def _covariate_column(newdata, name):
    if name not in newdata.covariate_names:
        raise SpecificationError(f"new data is missing covariate {name!r}")
    return newdata.x[:, newdata.covariate_names.index(name)]


def coefficient_paths(fit, newdata):
    """Reporting-scale per-sample coefficients at new data, from the stored
    terms only (works on reloaded fits)."""
    beta_std = fit.beta / fit.scale_a
    beta_std[0] = (fit.beta[0] - fit.scale_b) / fit.scale_a
    spatial_rows = None
    if any(t.kind in (basismod.SPATIAL_VC, basismod.SPATIAL_INTERCEPT) for t in fit.terms):
        spatial_rows = _spatial_rows(fit, newdata)
    paths = {}
    for k, name in enumerate(fit.covariate_names):
        total = np.full(newdata.n, beta_std[k])
        for term in fit.terms:
            if term.covariate != name:
                continue
            if term.kind in (basismod.SPATIAL_VC, basismod.SPATIAL_INTERCEPT):
                total = total + spatial_rows @ term.gamma
            elif term.kind == basismod.NONSPATIAL_VC:
                xk = _covariate_column(newdata, name)
                total = total + _spline_eval(term, xk) @ term.gamma
        paths[name] = fit.scale_a * total
    # the intercept path absorbs the reporting offset
    paths[fit.covariate_names[0]] += fit.scale_b
    return paths


def linear_predictor(fit, newdata):
    """Reporting-scale conditional mean at new data."""
    paths = coefficient_paths(fit, newdata)
    mu = paths[fit.covariate_names[0]].copy()
    for name in fit.covariate_names[1:]:
        mu += paths[name] * _covariate_column(newdata, name)
    for term in fit.terms:
        if term.kind in (basismod.GROUP_INTERCEPT, basismod.TEMPORAL_INTERCEPT):
            mu += fit.scale_a * _group_contribution(term, newdata)
    return mu


def predict(fit, newdata):
    """Predictions on the original response scale (median-type predictor:
    the inverse transformation of the conditional mean)."""
    return predict_detail(fit, newdata)[0]


def predict_detail(fit, newdata):
    """(predictions, ok_mask, reporting-scale linear predictor)."""
    mu_rep = linear_predictor(fit, newdata)
    mu_std = (mu_rep - fit.scale_b) / fit.scale_a
    out = np.full_like(mu_std, np.nan)
    ok = np.ones(mu_std.shape[0], dtype=bool)
    try:
        out = warpmod.inverse(fit.stack, mu_std)
    except DomainViolation:
        for i in range(mu_std.shape[0]):
            try:
                out[i] = warpmod.inverse(fit.stack, mu_std[i : i + 1])[0]
            except DomainViolation:
                ok[i] = False
    return out, ok, mu_rep


def marginal_effects(fit, data):
    """Per-covariate effects on the raw response: the per-sample coefficient
    divided by the transformation derivative, summarized by the median.
    The result does not depend on the reporting convention."""
    log_d = warpmod.log_deriv_samples(fit.stack, data.y)
    deriv_rep = fit.scale_a * np.exp(log_d)
    if np.any(deriv_rep <= 0):
        raise SpecificationError("transformation derivative vanished at a sample")
    paths = coefficient_paths(fit, data)
    out = {}
    for name in fit.covariate_names:
        effects = paths[name] / deriv_rep
        out[name] = {"effects": effects, "median": float(np.median(effects))}
    return out


def coefficient_inference(fit):
    """Estimates, SEs, t statistics, and two-sided normal p-values."""
    rows = []
    for k, name in enumerate(fit.covariate_names):
        est, se = float(fit.beta[k]), float(fit.se_beta[k])
        t = est / se if se > 0 else math.inf
        rows.append(
            {
                "covariate": name,
                "estimate": est,
                "se": se,
                "t": t,
                "p": float(2.0 * norm.sf(abs(t))),
                "coef_type": fit.coef_type[k],
            }
        )
    return rows


def varying_coefficients_frame(fit):
    """Long-format per-sample coefficient table."""
    frames = []
    for name in fit.covariate_names:
        v = fit.varying[name]
        frames.append(
            pd.DataFrame(
                {
                    "row_id": np.arange(fit.n),
                    "covariate": name,
                    "beta_total": v["total"],
                    "beta_svc_part": v["svc_part"],
                    "beta_nvc_part": v["nvc_part"],
                    "se": v["se"],
                    "p": v["p"],
                }
            )
        )
    return pd.concat(frames, ignore_index=True)


def _arr(a):
    return np.asarray(a, dtype=float).tolist()


def to_json(fit):
    """Serialize everything prediction and reporting need."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "covariate_names": fit.covariate_names,
        "beta": _arr(fit.beta),
        "se_beta": _arr(fit.se_beta),
        "coef_type": fit.coef_type,
        "sigma_sq": fit.sigma_sq,
        "log_restricted_lik": fit.log_restricted_lik,
        "bic": fit.bic,
        "converged": fit.converged,
        "d": fit.d,
        "bic_by_d": [[int(d), float(v)] for d, v in fit.bic_by_d],
        "scale_a": fit.scale_a,
        "scale_b": fit.scale_b,
        "n": fit.n,
        "stack": json.loads(fit.stack.to_json()),
        "theta": {"tau_sq": _arr(fit.theta.tau_sq), "alpha": _arr(fit.theta.alpha)},
        "terms": [
            {
                "kind": t.kind,
                "covariate": t.covariate,
                "gamma": _arr(t.gamma),
                "eigenvalues": None if t.eigenvalues is None else _arr(t.eigenvalues),
                "knots": None if t.knots is None else _arr(t.knots),
                "col_means": None if t.col_means is None else _arr(t.col_means),
                "categories": t.categories,
                "group_column": t.group_column,
            }
            for t in fit.terms
        ],
        "spatial": None
        if fit.spatial is None
        else {
            "vectors": [_arr(row) for row in fit.spatial.vectors],
            "eigenvalues": _arr(fit.spatial.eigenvalues),
            "coords": [_arr(row) for row in fit.spatial.coords],
            "kernel_range": fit.spatial.kernel_range,
            "ids": list(fit.spatial.ids),
            "col_means": _arr(fit.spatial.col_means),
            "grand_mean": fit.spatial.grand_mean,
        },
    }
    return json.dumps(doc)


def from_json(text):
    """Rebuild a FitResult sufficient for prediction and reporting."""
    doc = json.loads(text)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SpecificationError(
            f"unsupported fit schema version {doc.get('schema_version')!r}"
        )
    spatial = None
    if doc["spatial"] is not None:
        s = doc["spatial"]
        spatial = basismod.SpatialBasis(
            vectors=np.asarray(s["vectors"], dtype=float),
            eigenvalues=np.asarray(s["eigenvalues"], dtype=float),
            coords=np.asarray(s["coords"], dtype=float),
            kernel_range=s["kernel_range"],
            ids=tuple(s["ids"]),
            col_means=np.asarray(s["col_means"], dtype=float),
            grand_mean=s["grand_mean"],
        )
    terms = [
        Term(
            kind=t["kind"],
            covariate=t["covariate"],
            gamma=np.asarray(t["gamma"], dtype=float),
            eigenvalues=None if t["eigenvalues"] is None else np.asarray(t["eigenvalues"]),
            knots=None if t["knots"] is None else np.asarray(t["knots"]),
            col_means=None if t["col_means"] is None else np.asarray(t["col_means"]),
            categories=t["categories"],
            group_column=t["group_column"],
        )
        for t in doc["terms"]
    ]
    return FitResult(
        covariate_names=doc["covariate_names"],
        beta=np.asarray(doc["beta"], dtype=float),
        se_beta=np.asarray(doc["se_beta"], dtype=float),
        coef_type=doc["coef_type"],
        varying={},
        theta=remlmod.VarianceSpec(
            np.asarray(doc["theta"]["tau_sq"], dtype=float),
            np.asarray(doc["theta"]["alpha"], dtype=float),
        ),
        stack=warpmod.WarpStack.from_json(json.dumps(doc["stack"])),
        sigma_sq=doc["sigma_sq"],
        log_restricted_lik=doc["log_restricted_lik"],
        bic=doc["bic"],
        converged=doc["converged"],
        d=doc["d"],
        bic_by_d=[(d, v) for d, v in doc["bic_by_d"]],
        scale_a=doc["scale_a"],
        scale_b=doc["scale_b"],
        terms=terms,
        spatial=spatial,
        n=doc["n"],
    )
