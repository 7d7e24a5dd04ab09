"""``fcmppt`` command-line entry point.

Exit codes: 0 success, 1 usage or config error, 2 domain or envelope
error, 3 training quality below threshold with ``--enforce``.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
import tempfile
from importlib import resources

from . import metrics
from .anfis import anfis_forward, anfis_train, rmse
from .config import DEFAULT_SEED, LabConfig, load_config
from .controllers import METHODS
from .errors import (ConfigError, DomainError, EnvelopeError, FcmpptError, InferenceError,
                     IntegrationError)
from .fuelcell import StackParams, sweep
from .fuzzy import FuzzySystem
from .ica import ica_train, mlp_forward
from .modelio import dumps, load_model, trace_csv
from .oracle import Dataset, find_mpp, generate_dataset, sweep_upper
from .simulation import (compare_csv, compare_table, evaluate_trace, plot_data_csv,
                         run_scenario)

log = logging.getLogger("fcmppt")

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_QUALITY = 0, 1, 2, 3
QUALITY = {"train_error": 0.01, "test_correlation": 0.98}
MODEL_FILES = {"anfis": "anfis.model", "ica-nn": "ica.model"}


class QualityError(FcmpptError):
    pass


def write_atomic(path, text):
    """Write via a temp file in the same directory, then rename over ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    log.info("wrote %s", path)


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _g(v):
    return f"{v:.9g}"


def parse_condition(text):
    try:
        t, lam = text.split(":")
        return float(t), float(lam)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected T:lambda, got {text!r}") from None


# -- datasets ---------------------------------------------------------------

def _bundled_dataset(name):
    return str(resources.files("fcmppt").joinpath(f"data/datasets/{name}.csv"))


def load_datasets(cfg: LabConfig):
    """Training and test datasets from configured paths, the shipped files or the oracle.

    The shipped files belong to the default stack, so a modified stack
    without explicit dataset paths regenerates them.
    """
    train_path = cfg.resolve(cfg.paths.train_data)
    test_path = cfg.resolve(cfg.paths.test_data)
    if train_path is None and cfg.stack == StackParams():
        train_path = _bundled_dataset("train")
        test_path = test_path or _bundled_dataset("test")
    if train_path is None:
        train = generate_dataset(cfg.stack, *cfg.dataset.train_grids())
    else:
        train = Dataset.from_csv(train_path)
    if test_path is None:
        test = generate_dataset(cfg.stack, *cfg.dataset.test_grids())
    else:
        test = Dataset.from_csv(test_path)
    return train, test


def _summary(rows):
    return _csv(("set", "MSE", "correlation"), [(n, _g(m), _g(c)) for n, m, c in rows])


def _check_quality(train_error, test_corr, enforce):
    ok = train_error <= QUALITY["train_error"] and test_corr >= QUALITY["test_correlation"]
    if not ok:
        msg = (f"training quality below threshold: train error {train_error:.4g} "
               f"(max {QUALITY['train_error']}), test correlation {test_corr:.4f} "
               f"(min {QUALITY['test_correlation']})")
        if enforce:
            raise QualityError(msg)
        log.warning(msg)


# -- subcommands ------------------------------------------------------------

def cmd_sweep(cfg: LabConfig, args):
    conditions = args.at or [(313.15, 12.0), (328.15, 12.0), (343.15, 12.0)]
    summary = []
    for temp, lam in conditions:
        cfg.stack.valid(temp, lam, 0.0)
        curve = sweep(cfg.stack, temp, lam, args.points, sweep_upper(cfg.stack, lam))
        rows = [(_g(i), _g(v), _g(p)) for i, v, p in
                zip(curve.current, curve.voltage, curve.power)]
        name = f"sweep_T{temp:g}_lambda{lam:g}.csv"
        write_atomic(os.path.join(args.out, name), _csv(("I_A", "V_fc_V", "P_fc_W"), rows))
        mpp = find_mpp(cfg.stack, temp, lam)
        summary.append((_g(temp), _g(lam), _g(mpp.i_max), _g(mpp.v_max), _g(mpp.p_max)))
        print(f"T={temp:g} K lambda={lam:g}: P_max={mpp.p_max:.1f} W at "
              f"I={mpp.i_max:.2f} A, V={mpp.v_max:.3f} V")
    write_atomic(os.path.join(args.out, "mpp.csv"),
                 _csv(("T_K", "lambda", "I_max_A", "V_max_V", "P_max_W"), summary))


def cmd_gen_dataset(cfg: LabConfig, args):
    train = generate_dataset(cfg.stack, *cfg.dataset.train_grids())
    test = generate_dataset(cfg.stack, *cfg.dataset.test_grids())
    write_atomic(os.path.join(args.out, "train.csv"), train.to_csv())
    write_atomic(os.path.join(args.out, "test.csv"), test.to_csv())
    print(f"training rows: {len(train)}, test rows: {len(test)}")


def cmd_train_anfis(cfg: LabConfig, args):
    train, test = load_datasets(cfg)
    x, y = train.normalized()
    xt, yt = test.normalized(train.norm)
    a = cfg.anfis
    model, trace = anfis_train(x, y, a.epochs, learning_rate=a.learning_rate,
                               decay=a.decay, ridge=a.ridge, norm=train.norm)
    pred, pred_t = anfis_forward(model, x[:, 0], x[:, 1]), anfis_forward(model, xt[:, 0], xt[:, 1])
    rows = [("training", metrics.mse(pred, y), metrics.correlation(pred, y)),
            ("testing", metrics.mse(pred_t, yt), metrics.correlation(pred_t, yt))]
    write_atomic(os.path.join(args.out, MODEL_FILES["anfis"]), dumps(model))
    write_atomic(os.path.join(args.out, "anfis_trace.csv"), trace_csv(("epoch", "rmse"), trace))
    write_atomic(os.path.join(args.out, "anfis_summary.csv"), _summary(rows))
    print(f"ANFIS: final training RMSE {trace[-1]:.6g}")
    for name, m, c in rows:
        print(f"  {name:9s} MSE {m:.6g}  correlation {c:.6f}")
    _check_quality(rmse(model, x, y), rows[1][2], args.enforce)


def cmd_train_ica(cfg: LabConfig, args):
    train, test = load_datasets(cfg)
    x, y = train.normalized()
    xt, yt = test.normalized(train.norm)
    result = ica_train(cfg.ica, x, y, norm=train.norm)
    net = result.network
    pred, pred_t = mlp_forward(net, x[:, 0], x[:, 1]), mlp_forward(net, xt[:, 0], xt[:, 1])
    rows = [("training", metrics.mse(pred, y), metrics.correlation(pred, y)),
            ("testing", metrics.mse(pred_t, yt), metrics.correlation(pred_t, yt))]
    write_atomic(os.path.join(args.out, MODEL_FILES["ica-nn"]), dumps(net))
    write_atomic(os.path.join(args.out, "ica_cost.csv"),
                 trace_csv(("decade", "best_cost"), result.best_cost_trace))
    write_atomic(os.path.join(args.out, "ica_summary.csv"), _summary(rows))
    print(f"ICA-NN (seed {cfg.ica.rng_seed}): final best cost {result.best_cost_trace[-1]:.6g}, "
          f"{result.empire_counts[-1]} empires left")
    for name, m, c in rows:
        print(f"  {name:9s} MSE {m:.6g}  correlation {c:.6f}")
    _check_quality(rows[0][1], rows[1][2], args.enforce)


def load_estimators(cfg: LabConfig, methods, out_dir):
    """Trained estimators for the reference methods among ``methods``.

    A configured model path must exist; otherwise the output directory is
    searched for the file a previous training run wrote.
    """
    configured = {"anfis": cfg.paths.anfis_model, "ica-nn": cfg.paths.ica_model}
    estimators = {}
    for m in methods:
        if m not in MODEL_FILES:
            continue
        path = cfg.resolve(configured[m])
        if path is None:
            path = os.path.join(out_dir, MODEL_FILES[m])
            if not os.path.exists(path):
                raise ConfigError(f"method {m!r} needs a trained model: set [paths] "
                                  f"{'anfis_model' if m == 'anfis' else 'ica_model'} "
                                  f"or run train-{'anfis' if m == 'anfis' else 'ica'} "
                                  f"with --out {out_dir}")
        estimators[m] = load_model(path)
        if estimators[m].norm is None:
            raise ConfigError(f"model {path} carries no normalization")
    return estimators


def _simulate(cfg: LabConfig, methods, out_dir):
    estimators = load_estimators(cfg, methods, out_dir)
    fuzzy = FuzzySystem.default(cfg.controllers[methods[0]].dd_max, cfg.rules,
                                cfg.resolution)
    traces, results = {}, {}
    for m in methods:
        if cfg.controllers[m].dd_max != fuzzy.out_var.hi:
            fz = FuzzySystem.default(cfg.controllers[m].dd_max, cfg.rules, cfg.resolution)
        else:
            fz = fuzzy
        try:
            trace = run_scenario(cfg.scenario.with_method(m), cfg.stack, cfg.converter,
                                 cfg.controllers[m], estimators, fz)
        except EnvelopeError as exc:
            if exc.trace is not None:
                path = os.path.join(out_dir, f"trace_{m}_partial.csv")
                write_atomic(path, exc.trace.to_csv())
                log.error("partial trace up to the abort written to %s", path)
            raise
        traces[m] = trace
        results[m] = evaluate_trace(trace)
        write_atomic(os.path.join(out_dir, f"trace_{m}.csv"), trace.to_csv())
    return traces, results


def _print_table(rows):
    print(f"{'method':13s} {'seg':>3s} {'T_K':>7s} {'lambda':>6s} {'T_s (s)':>8s} "
          f"{'Accuracy%':>9s} {'Max power (W)':>13s}")
    for method, seg, temp, lam, ts, _, acc, p, _ in rows:
        ts_txt = "-" if ts is None else f"{ts:.3f}"
        print(f"{method:13s} {seg:3d} {temp:7.2f} {lam:6g} {ts_txt:>8s} {acc:9.2f} {p:13.1f}")


def cmd_simulate(cfg: LabConfig, args):
    traces, results = _simulate(cfg, [cfg.method], args.out)
    rows = compare_table(results)
    write_atomic(os.path.join(args.out, f"metrics_{cfg.method}.csv"), compare_csv(rows))
    if args.plot_data:
        write_atomic(os.path.join(args.out, _plot_name(cfg)), plot_data_csv(traces))
    _print_table(rows)


def cmd_compare(cfg: LabConfig, args):
    traces, results = _simulate(cfg, list(METHODS), args.out)
    rows = compare_table(results)
    write_atomic(os.path.join(args.out, "compare.csv"), compare_csv(rows))
    if args.plot_data:
        write_atomic(os.path.join(args.out, _plot_name(cfg)), plot_data_csv(traces))
    _print_table(rows)


def _plot_name(cfg):
    return f"plot_{cfg.scenario.name or 'scenario'}_power.csv"


COMMANDS = {
    "sweep": (cmd_sweep, "sample P-I and P-V curves and locate the MPP"),
    "gen-dataset": (cmd_gen_dataset, "generate the training and test datasets"),
    "train-anfis": (cmd_train_anfis, "train the ANFIS V_max estimator"),
    "train-ica": (cmd_train_ica, "train the MLP V_max estimator with ICA"),
    "simulate": (cmd_simulate, "run one tracker on the configured scenario"),
    "compare": (cmd_compare, "run all trackers and emit a merged metrics table"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file (default: bundled default stack)")
    common.add_argument("--out", default=".", help="output directory (created if absent)")
    common.add_argument("--seed", type=int, default=None,
                        help=f"seed for ICA and sensor noise (default {DEFAULT_SEED})")
    common.add_argument("--method", choices=METHODS, default=None,
                        help="tracker for simulate (default from config)")
    common.add_argument("--plot-data", action="store_true",
                        help="also write power-versus-time series for plotting")
    common.add_argument("--enforce", action="store_true",
                        help="exit 3 when training quality misses its threshold")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="fcmppt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "sweep":
            p.add_argument("--at", type=parse_condition, action="append",
                           metavar="T:LAMBDA", help="condition to sweep (repeatable)")
            p.add_argument("--points", type=int, default=1000)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        if args.method is not None:
            cfg = cfg.with_method(args.method)
        os.makedirs(args.out, exist_ok=True)
        COMMANDS[args.command][0](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, IntegrationError, InferenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except QualityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_QUALITY
    except FcmpptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
