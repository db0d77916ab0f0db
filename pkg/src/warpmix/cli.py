"""Command-line front end.

Subcommands: ``fit`` (estimate from a CSV and write fit.json plus
coefficient/marginal-effect tables), ``predict`` (score new data from a
saved fit.json), ``simulate`` (run the Monte Carlo grid), and
``warp-check`` (fit the transformation-only model and report how Gaussian
the transformed response looks).

Exit codes: 0 success, 2 input/validation error, 3 fit did not converge
(artifacts are still written), 4 internal numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np
import pandas as pd
from scipy.stats import kurtosis, skew

from . import model as modelmod
from . import reml as remlmod
from . import simulate as simmod
from . import warp as warpmod
from .errors import DomainViolation, NumericalError, SpecificationError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NONCONVERGED = 3
EXIT_NUMERIC = 4


def _atomic_write(path, text):
    """Write via a temp file in the same directory, then rename."""
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_frame(path, df):
    _atomic_write(path, df.to_csv(index=False, lineterminator="\n"))


def _read_csv(path, required=()):
    try:
        df = pd.read_csv(path)
    except FileNotFoundError:
        raise SpecificationError(f"input file not found: {path}") from None
    except Exception as exc:
        raise SpecificationError(f"could not parse CSV {path}: {exc}") from None
    if df.columns.str.startswith("Unnamed").all():
        raise SpecificationError(f"{path}: header row required")
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise SpecificationError(f"{path}: missing column(s) {', '.join(missing)}")
    na_cols = df.columns[df.isna().any()].tolist()
    if na_cols:
        raise SpecificationError(
            f"{path}: missing values are not allowed (columns: {', '.join(na_cols)})"
        )
    return df


def _csv_list(value):
    return [v.strip() for v in str(value).split(",") if v.strip()]


def _load_config(args):
    """JSON config file merged with command-line flags; flags win."""
    cfg = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except FileNotFoundError:
            raise SpecificationError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise SpecificationError(f"invalid config JSON: {exc}") from None
        if not isinstance(cfg, dict):
            raise SpecificationError("config must be a JSON object")
    for key, value in vars(args).items():
        if key in ("config", "func") or value is None:
            continue
        cfg[key] = value
    return cfg


def _dataset_from_frame(df, cfg, need_response=True):
    response = cfg.get("response")
    if need_response and not response:
        raise SpecificationError("--response is required")
    covariates = cfg.get("covariates") or []
    if isinstance(covariates, str):
        covariates = _csv_list(covariates)
    required = ([response] if response else []) + list(covariates)
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise SpecificationError(f"missing column(s): {', '.join(missing)}")

    coords = None
    coord_cols = cfg.get("coords")
    if coord_cols:
        coord_cols = _csv_list(coord_cols) if isinstance(coord_cols, str) else list(coord_cols)
        if len(coord_cols) != 2:
            raise SpecificationError("--coords requires exactly two column names")
        bad = [c for c in coord_cols if c not in df.columns]
        if bad:
            raise SpecificationError(f"missing coordinate column(s): {', '.join(bad)}")
        coords = df[coord_cols].to_numpy(dtype=float)

    location_id = None
    if cfg.get("location_id"):
        col = cfg["location_id"]
        if col not in df.columns:
            raise SpecificationError(f"missing location id column: {col}")
        location_id = df[col].to_numpy()

    group_ids = {}
    for col in _csv_list(cfg.get("group_ids", "")) if isinstance(cfg.get("group_ids"), str) else (cfg.get("group_ids") or []):
        if col not in df.columns:
            raise SpecificationError(f"missing group column: {col}")
        group_ids[col] = df[col].to_numpy()

    time_id = None
    if cfg.get("time_id"):
        col = cfg["time_id"]
        if col not in df.columns:
            raise SpecificationError(f"missing time id column: {col}")
        time_id = df[col].to_numpy()

    x = (
        df[covariates].to_numpy(dtype=float)
        if covariates
        else np.zeros((len(df), 0))
    )
    y = df[response].to_numpy(dtype=float) if response else np.zeros(len(df))
    return modelmod.Dataset(
        y=y, x=x, covariate_names=list(covariates), coords=coords,
        location_id=location_id, group_ids=group_ids, time_id=time_id,
    )


def _modelspec_from_config(cfg):
    tr_num = cfg.get("tr_num", 0)
    if isinstance(tr_num, str) and tr_num != "select":
        tr_num = int(tr_num)
    d_candidates = cfg.get("d_candidates", (0, 1, 2, 3, 4))
    if isinstance(d_candidates, str):
        d_candidates = tuple(int(v) for v in _csv_list(d_candidates))
    x_nvc = cfg.get("x_nvc", False)
    if isinstance(x_nvc, str):
        if x_nvc.lower() in ("true", "1", "yes"):
            x_nvc = True
        elif x_nvc.lower() in ("false", "0", "no"):
            x_nvc = False
        else:
            x_nvc = {name: True for name in _csv_list(x_nvc)}
    return modelmod.ModelSpec(
        allow_nvc=x_nvc,
        tr_num=tr_num,
        tr_nonneg=bool(cfg.get("tr_nonneg", False)),
        d_candidates=tuple(d_candidates),
        knot_count=int(cfg.get("knot_count", 5)),
        max_eigenvectors=int(cfg.get("max_eigenvectors", 200)),
    )


def cmd_fit(args):
    cfg = _load_config(args)
    if not cfg.get("input"):
        raise SpecificationError("--input is required")
    out_dir = cfg.get("output_dir", ".")
    os.makedirs(out_dir, exist_ok=True)
    df = _read_csv(cfg["input"])
    data = _dataset_from_frame(df, cfg)
    spec = _modelspec_from_config(cfg)
    fit = modelmod.fit_camm(data, spec)

    _atomic_write(os.path.join(out_dir, "fit.json"), modelmod.to_json(fit))
    _write_frame(
        os.path.join(out_dir, "coefficients.csv"),
        modelmod.varying_coefficients_frame(fit),
    )
    effects = modelmod.marginal_effects(fit, data)
    _write_frame(
        os.path.join(out_dir, "marginal_effects.csv"),
        pd.DataFrame(
            {
                "covariate": list(effects),
                "median_effect": [effects[k]["median"] for k in effects],
            }
        ),
    )
    report = pd.DataFrame(fit.bic_by_d, columns=["d", "bic"])
    report["selected"] = report["d"] == fit.d
    _write_frame(os.path.join(out_dir, "bic_by_d.csv"), report)

    summary = pd.DataFrame(modelmod.coefficient_inference(fit))
    print(summary.to_string(index=False))
    print(f"selected D = {fit.d}  BIC = {fit.bic:.4f}  converged = {fit.converged}")
    return EXIT_OK if fit.converged else EXIT_NONCONVERGED


def cmd_predict(args):
    cfg = _load_config(args)
    for key in ("fit", "input"):
        if not cfg.get(key):
            raise SpecificationError(f"--{key} is required")
    out_dir = cfg.get("output_dir", ".")
    os.makedirs(out_dir, exist_ok=True)
    try:
        with open(cfg["fit"]) as fh:
            fit = modelmod.from_json(fh.read())
    except FileNotFoundError:
        raise SpecificationError(f"fit file not found: {cfg['fit']}") from None
    except json.JSONDecodeError as exc:
        raise SpecificationError(f"invalid fit JSON: {exc}") from None

    df = _read_csv(cfg["input"])
    cfg.setdefault("covariates", fit.covariate_names[1:])
    data = _dataset_from_frame(df, {**cfg, "response": None}, need_response=False)
    pred, ok, mu_rep = modelmod.predict_detail(fit, data)
    out = pd.DataFrame(
        {
            "row_id": np.arange(len(df)),
            "prediction": pred,
            "linear_predictor": mu_rep,
            "ok": ok,
        }
    )
    truth_col = cfg.get("truth_column")
    if truth_col:
        if truth_col not in df.columns:
            raise SpecificationError(f"missing truth column: {truth_col}")
        truth = df[truth_col].to_numpy(dtype=float)
        rmspe = float(np.sqrt(np.mean((pred[ok] - truth[ok]) ** 2)))
        print(f"RMSPE = {rmspe:.6f}")
    _write_frame(os.path.join(out_dir, "predictions.csv"), out)
    return EXIT_OK


def cmd_simulate(args):
    cfg = _load_config(args)
    out_dir = cfg.get("output_dir", ".")
    os.makedirs(out_dir, exist_ok=True)

    def _floats(key, default):
        v = cfg.get(key, default)
        return tuple(float(x) for x in (_csv_list(v) if isinstance(v, str) else v))

    econf = simmod.ExperimentConfig(
        g_values=_floats("g_values", (0.0, 0.5)),
        h_values=_floats("h_values", (0.0, 0.125, 0.25)),
        n_values=tuple(int(x) for x in _floats("n_values", (500,))),
        replicates=int(cfg.get("replicates", 20)),
        seed=int(cfg.get("seed", 0)),
        d=int(cfg.get("tr_num", 2) or 2),
        max_eigenvectors=int(cfg.get("max_eigenvectors", 25)),
    )
    df = simmod.run_experiment(econf)
    _write_frame(os.path.join(out_dir, "experiment.csv"), df)
    print(df.to_string(index=False))
    return EXIT_OK


def cmd_warp_check(args):
    cfg = _load_config(args)
    if not cfg.get("input") or not cfg.get("response"):
        raise SpecificationError("--input and --response are required")
    out_dir = cfg.get("output_dir", ".")
    os.makedirs(out_dir, exist_ok=True)
    df = _read_csv(cfg["input"], required=[cfg["response"]])
    y = df[cfg["response"]].to_numpy(dtype=float)
    d = int(cfg.get("tr_num", 2))
    bins = int(cfg.get("bins", 20))

    template = (
        warpmod.nonneg_template(d, y)
        if cfg.get("tr_nonneg")
        else warpmod.default_template(d)
    )
    rf = remlmod.fit(np.ones((y.shape[0], 1)), [], y, template)
    z = warpmod.forward(rf.stack, y)

    rows = []
    for label, v in (("before", (y - y.mean()) / y.std()), ("after", z)):
        counts, _ = np.histogram(v, bins=bins)
        rows.append(
            {
                "stage": label,
                "skewness": float(skew(v)),
                "excess_kurtosis": float(kurtosis(v)),
                "histogram": " ".join(str(c) for c in counts),
            }
        )
    out = pd.DataFrame(rows)
    _write_frame(os.path.join(out_dir, "warp_check.csv"), out)
    print(out[["stage", "skewness", "excess_kurtosis"]].to_string(index=False))
    return EXIT_OK if rf.converged else EXIT_NONCONVERGED


def _add_common(p):
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--input", help="input CSV")
    p.add_argument("--output-dir", dest="output_dir", help="artifact directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="reserved; accepted for compatibility")


def _add_model_flags(p):
    p.add_argument("--response")
    p.add_argument("--covariates", help="comma-separated covariate columns")
    p.add_argument("--coords", help="comma-separated x,y coordinate columns")
    p.add_argument("--location-id", dest="location_id")
    p.add_argument("--group-ids", dest="group_ids", help="comma-separated group columns")
    p.add_argument("--time-id", dest="time_id")
    p.add_argument("--tr-num", dest="tr_num", help='transformation count or "select"')
    p.add_argument("--tr-nonneg", dest="tr_nonneg", action="store_const", const=True)
    p.add_argument("--x-nvc", dest="x_nvc", help="true/false or comma-separated covariates")
    p.add_argument("--d-candidates", dest="d_candidates", help="comma-separated D values")
    p.add_argument("--knot-count", dest="knot_count", type=int)
    p.add_argument("--max-eigenvectors", dest="max_eigenvectors", type=int)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="warpmix",
        description="Transformed additive mixed models with varying coefficients",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model from a CSV")
    _add_common(p)
    _add_model_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict from a saved fit.json")
    _add_common(p)
    _add_model_flags(p)
    p.add_argument("--fit", help="path to fit.json")
    p.add_argument("--truth-column", dest="truth_column")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="run the Monte Carlo grid")
    _add_common(p)
    p.add_argument("--g-values", dest="g_values")
    p.add_argument("--h-values", dest="h_values")
    p.add_argument("--n-values", dest="n_values")
    p.add_argument("--replicates", type=int)
    p.add_argument("--tr-num", dest="tr_num")
    p.add_argument("--max-eigenvectors", dest="max_eigenvectors", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("warp-check", help="transformation-only diagnostics")
    _add_common(p)
    p.add_argument("--response")
    p.add_argument("--tr-num", dest="tr_num")
    p.add_argument("--tr-nonneg", dest="tr_nonneg", action="store_const", const=True)
    p.add_argument("--bins", type=int)
    p.set_defaults(func=cmd_warp_check)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SpecificationError, DomainViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, np.linalg.LinAlgError, OverflowError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
