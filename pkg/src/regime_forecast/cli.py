"""Command-line entry point: ``regime-forecast <command> [options]``.

Exit status is 0 on success, 1 for usage or configuration errors, 2 for
data errors and 3 for numeric failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .data import SynthSpec, load_flow_csv, split, standardize, synthesize, write_flow_csv
from .data.io import format_time
from .data.io import write_report as write_load_report
from .errors import DataError, NumericError
from .eval import (
    comparison_report, day_trace, metrics_csv, model_selection_table, regime_variance_table,
    selection_csv, selection_text, write_columns, write_feature_csv, write_report,
)
from .forecasters import (
    KINDS, ArchitectureSpec, TrainRun, ar_hmm_predict_series, build, fit_ar_hmm,
    load_ar_hmm, make_features, predict_split, save_ar_hmm, to_flow, train, write_predictions,
)
from .markov import FitConfig, GmmEmission, HsmmModel, baum_welch_fit, load_model, save_model, viterbi_decode
from .markov.model import dumps
from .neural import load_network, save_network

log = logging.getLogger("regime_forecast")

AR_HMM = "ar-hmm"
COMMANDS = ("fit-hmm", "decode", "train", "predict", "evaluate", "synth")
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- shared plumbing --------------------------------------------------------


def _out_dir(cfg) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def synth_spec(cfg) -> SynthSpec:
    M = len(cfg.synth_means)
    if M == 1:
        A = np.ones((1, 1))
    else:
        A = np.full((M, M), (1.0 - cfg.synth_stay) / (M - 1))
        np.fill_diagonal(A, cfg.synth_stay)
    em = GmmEmission(np.ones((M, 1)), np.array(cfg.synth_means, dtype=float)[:, None],
                     np.array(cfg.synth_variances, dtype=float)[:, None])
    model = HsmmModel(A, np.full(M, 1.0 / M), em)
    phi = np.array(cfg.synth_ar, dtype=float)[:, None] if cfg.synth_ar else None
    return SynthSpec(model, cfg.synth_length, seed=cfg.seed, ar_coefficients=phi, base_flow=cfg.synth_base_flow)


def _load_bundle(cfg):
    """The configured series, split and standardized with train statistics."""
    if cfg.data:
        try:
            bundle = load_flow_csv(cfg.data)
        except OSError as exc:
            raise DataError(f"cannot read data file {cfg.data}: {exc.strerror}") from None
    else:
        bundle = synthesize(synth_spec(cfg)).bundle
    return standardize(split(bundle))


def _fingerprint(bundle) -> dict:
    return {"length": len(bundle), "splits": list(bundle.splits), "mean": bundle.mean, "std": bundle.std}


def _read_hmm(path) -> HsmmModel:
    try:
        return load_model(path)
    except OSError as exc:
        raise DataError(f"cannot read model file {path}: {exc.strerror}") from None
    except (ValueError, KeyError, TypeError) as exc:
        raise DataError(f"{path}: not a usable HSMM model ({exc})") from None


def _read_checkpoint(path):
    """A trained network or AR-HMM, told apart by the document's format tag."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not JSON ({exc})") from None
    fmt = doc.get("format") if isinstance(doc, dict) else None
    try:
        if fmt == "regime-forecast/ar-hmm":
            return AR_HMM, load_ar_hmm(path)
        if fmt == "regime-forecast/network":
            return "network", load_network(path)
    except (ValueError, KeyError, TypeError) as exc:
        raise DataError(f"{path}: damaged checkpoint ({exc})") from None
    raise DataError(f"{path}: not a network or AR-HMM checkpoint (format={fmt!r})")


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _need_models(args, what: str) -> list:
    if not args.model:
        raise UsageError(f"{args.command} needs at least one --model {what}")
    return list(args.model)


# --- commands ---------------------------------------------------------------


def cmd_fit_hmm(cfg, args) -> int:
    bundle = _load_bundle(cfg)
    out = _out_dir(cfg)
    write_load_report(bundle.report, out / "data_report.json")
    x = bundle.part("train")
    fits, cells = [], []
    for M in cfg.states:
        for k in cfg.components:
            for family in cfg.families:
                name = f"hmm_{family}_m{M}_k{k}"
                cell = {"name": name, "states": M, "components": k, "family": family}
                try:
                    fc = FitConfig(M, k, family, max_duration=cfg.max_duration, max_iters=cfg.em_max_iters,
                                   tol=cfg.em_tol, seed=cfg.seed, restarts=cfg.em_restarts)
                    res = baum_welch_fit(x, fc)
                except (NumericError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
                    log.error("%s failed: %s", name, exc)
                    cells.append({**cell, "status": "failed", "error": str(exc)})
                    continue
                save_model(res.model, out / f"{name}.json")
                fits.append((fc, res.log_likelihood, res.model))
                cells.append({**cell, "status": "ok", "log_likelihood": res.log_likelihood,
                              "iterations": res.n_iter, "converged": res.converged})
                log.info("%s: logL %.3f after %d iterations", name, res.log_likelihood, res.n_iter)
    summary = {"train_points": int(x.size), "cells": cells}
    (out / "fit_hmm.json").write_text(dumps(summary), encoding="utf-8")
    if not fits:
        raise NumericError("every grid cell failed to fit")
    rows = model_selection_table(fits, int(x.size))
    (out / "selection.csv").write_text(selection_csv(rows), encoding="utf-8")
    (out / "selection.txt").write_text(selection_text(rows), encoding="utf-8")
    sys.stdout.write(selection_text(rows))
    return EXIT_OK


def cmd_decode(cfg, args) -> int:
    paths = _need_models(args, "HSMM file")
    bundle = _load_bundle(cfg)
    out = _out_dir(cfg)
    for path in paths:
        model = _read_hmm(path)
        states = viterbi_decode(model, bundle.standardized)
        target = out / f"states_{Path(path).stem}.csv"
        _write_rows(target, ["timestamp", "state"],
                    ((format_time(t), int(s)) for t, s in zip(bundle.delta_timestamps, states)))
        log.info("decoded %d observations with %s", states.size, path)
    return EXIT_OK


def cmd_train(cfg, args) -> int:
    arch = args.arch or KINDS[0]
    bundle = _load_bundle(cfg)
    out = _out_dir(cfg)
    if arch == AR_HMM:
        res = fit_ar_hmm(bundle.part("train"), cfg.ar_states, cfg.lags, max_iters=cfg.em_max_iters,
                         tol=cfg.em_tol, seed=cfg.seed, restarts=cfg.em_restarts)
        stem = f"ar-hmm-L{cfg.lags}"
        save_ar_hmm(res.model, out / f"{stem}.json")
        _write_rows(out / f"{stem}_history.csv", ["iteration", "log_likelihood"],
                    ((i + 1, float(v)) for i, v in enumerate(res.trace)))
        return EXIT_OK

    hmm = None
    hmm_ref = None
    if arch != "baseline":
        if not args.model:
            raise UsageError(f"architecture {arch} needs a fitted HMM (--model PATH)")
        if len(args.model) > 1:
            raise UsageError("train takes a single --model HMM file")
        hmm = _read_hmm(args.model[0])
        hmm_ref = Path(args.model[0]).name
    spec = ArchitectureSpec(arch, num_states=hmm.num_states if hmm else None, window=cfg.window, hmm_ref=hmm_ref)
    feats = make_features(spec, bundle, hmm, smoothed=cfg.smoothed_features)
    net = build(spec, cfg.seed)
    run = TrainRun(seed=cfg.seed, max_epochs=cfg.max_epochs, patience=cfg.patience, batch_size=cfg.batch_size,
                   learning_rate=cfg.learning_rate, rho=cfg.rho, epsilon=cfg.epsilon)
    net, run = train(net, feats["train"], feats["val"], run)
    net.meta.update({
        "data": _fingerprint(bundle),
        "smoothed_features": cfg.smoothed_features,
        "hmm": hmm.to_dict() if hmm else None,
        "training": run.config(),
        "best_epoch": run.best_epoch,
    })
    save_network(net, out / f"{arch}.json", run.optimizer)
    _write_rows(out / f"{arch}_history.csv", ["epoch", "train_mse", "val_mse"],
                ((int(e), float(tr), float(va)) for e, tr, va in run.history))
    log.info("%s: best validation mse %.6f at epoch %s", arch, run.best_val_mse, run.best_epoch)
    return EXIT_OK


def _network_outputs(net, bundle):
    meta = net.meta
    if meta.get("data") != _fingerprint(bundle):
        raise DataError("checkpoint was trained on a different series or split")
    spec = ArchitectureSpec.from_dict(meta["architecture"])
    hmm = HsmmModel.from_dict(meta["hmm"]) if meta.get("hmm") else None
    feats = make_features(spec, bundle, hmm, smoothed=meta.get("smoothed_features", True))
    test = feats["test"]
    pred, features = predict_split(net, test)
    return test.target_index, pred, features


def _gather(cfg, paths, bundle):
    """Standardized test predictions for every checkpoint on a shared index."""
    loaded = [(Path(p).stem, *_read_checkpoint(p)) for p in paths]
    names = [n for n, _, _ in loaded]
    if len(set(names)) != len(names):
        raise UsageError("checkpoint file names must be distinct")
    windows = {obj.window for _, kind, obj in loaded if kind == "network"}
    if len(windows) > 1:
        raise DataError(f"checkpoints use different windows {sorted(windows)}; test sets would differ")
    w = windows.pop() if windows else cfg.window
    b2 = bundle.splits[1]
    index = np.arange(b2 + w, len(bundle))
    if index.size == 0:
        raise DataError("test split is shorter than the window")
    results = {}
    for name, kind, obj in loaded:
        if kind == AR_HMM:
            pred = ar_hmm_predict_series(obj, bundle.standardized, index)
            results[name] = (pred, None)
        else:
            idx, pred, feats = _network_outputs(obj, bundle)
            if not np.array_equal(idx, index):
                raise DataError(f"{name}: test targets differ from the shared test index")
            results[name] = (pred, feats)
    return index, results


def cmd_predict(cfg, args) -> int:
    paths = _need_models(args, "checkpoint")
    bundle = _load_bundle(cfg)
    out = _out_dir(cfg)
    index, results = _gather(cfg, paths, bundle)
    for name, (pred, _) in results.items():
        write_predictions(out / f"predictions_{name}.csv", to_flow(bundle, index, pred))
    return EXIT_OK


def cmd_evaluate(cfg, args) -> int:
    paths = _need_models(args, "checkpoint")
    bundle = _load_bundle(cfg)
    out = _out_dir(cfg)
    index, results = _gather(cfg, paths, bundle)
    tables = {name: to_flow(bundle, index, pred) for name, (pred, _) in results.items()}
    report = comparison_report(tables)
    stamps = bundle.timestamps[index + 1]
    features = {name: f for name, (_, f) in results.items() if f is not None}
    try:
        report["regime_feature_variance"] = regime_variance_table(features, stamps)
    except ValueError as exc:
        raise DataError(f"cannot summarise features by regime: {exc}") from None
    write_report(report, out / "report.json")
    metrics_csv(report, out / "metrics.csv")
    write_columns(out / "trace.csv", day_trace(tables))
    for name, f in features.items():
        write_feature_csv(out / f"features_{name}.csv", f, stamps)
    for row in report["models"]:
        sys.stdout.write(f"{row['model']:<24} rmse {row['rmse']:.4f}  mape {row['mape']:.2f}  r2 {row['r2']:.4f}\n")
    return EXIT_OK


def cmd_synth(cfg, args) -> int:
    res = synthesize(synth_spec(cfg))
    out = _out_dir(cfg)
    b = res.bundle
    write_flow_csv(out / "synth.csv", b.timestamps, b.flow)
    _write_rows(out / "synth_labels.csv", ["timestamp", "state"],
                ((format_time(t), int(s)) for t, s in zip(b.delta_timestamps, res.labels)))
    return EXIT_OK


HANDLERS = {"fit-hmm": cmd_fit_hmm, "decode": cmd_decode, "train": cmd_train, "predict": cmd_predict,
            "evaluate": cmd_evaluate, "synth": cmd_synth}


# --- argument handling ------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", metavar="PATH", default=S, help="TOML run configuration")
    p.add_argument("--seed", type=int, metavar="N", default=S, help="run seed (overrides the config)")
    p.add_argument("--out", metavar="DIR", default=S, help="output directory (overrides the config)")
    p.add_argument("--model", metavar="PATH", action="append", default=S,
                   help="model or checkpoint file; repeat for several")
    p.add_argument("--arch", choices=(*KINDS, AR_HMM), default=S, help="forecaster to train")
    p.add_argument("--lags", type=int, metavar="N", default=S, help="AR-HMM lag order")
    p.add_argument("--print-config", action="store_true", default=S,
                   help="print the resolved configuration and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="regime-forecast", description="Regime-aware traffic-flow fluctuation forecasting.")
    _common(parser)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    helps = {
        "fit-hmm": "fit the HMM/HSMM grid and rank it by BIC",
        "decode": "write the Viterbi state path for each --model",
        "train": "train one forecaster (--arch)",
        "predict": "write test-split predictions for each --model checkpoint",
        "evaluate": "compare checkpoints on the test split",
        "synth": "generate a synthetic flow series with true regimes",
    }
    for name in COMMANDS:
        _common(sub.add_parser(name, help=helps[name]))
    return parser


def resolve_config(args) -> cfgmod.RunConfig:
    cfg = cfgmod.load_config(args.config) if getattr(args, "config", None) else cfgmod.RunConfig()
    overrides = {k: getattr(args, k) for k in ("seed", "out", "lags") if hasattr(args, k)}
    return cfgmod.from_mapping(overrides, cfg) if overrides else cfg


def _setup_logging() -> None:
    level = os.environ.get("REGIME_FORECAST_LOG", "WARNING").upper()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(getattr(logging, level, logging.WARNING))
    log.propagate = False


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, or a usage error reported by the parser
        return int(exc.code or 0)
    for attr in ("model", "arch"):
        if not hasattr(args, attr):
            setattr(args, attr, None)
    try:
        cfg = resolve_config(args)
        if getattr(args, "print_config", False):
            sys.stdout.write(cfgmod.dumps_config(cfg))
            return EXIT_OK
        if not args.command:
            raise UsageError("a command is required: " + ", ".join(COMMANDS))
        if args.arch is not None and args.command != "train":
            raise UsageError("--arch only applies to train")
        if args.arch is None and args.command == "train":
            raise UsageError("train needs --arch {" + "|".join((*KINDS, AR_HMM)) + "}")
        return HANDLERS[args.command](cfg, args)
    except (UsageError, cfgmod.ConfigError) as exc:
        sys.stderr.write(f"regime-forecast: error: {exc}\n")
        return EXIT_USAGE
    except DataError as exc:
        sys.stderr.write(f"regime-forecast: data error: {exc}\n")
        return EXIT_DATA
    except (NumericError, FloatingPointError) as exc:
        sys.stderr.write(f"regime-forecast: numeric failure: {exc}\n")
        return EXIT_NUMERIC
    except ValueError as exc:
        sys.stderr.write(f"regime-forecast: data error: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
