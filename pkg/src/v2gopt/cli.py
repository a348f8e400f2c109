"""Command-line interface.

Subcommands (all driven by a JSON run config, with a few flag
overrides):

  train      fit the degradation network on featurized cycling data
  predict    run a saved network over a feature CSV
  optimize   solve one smart-charging schedule
  sweep      trace the cost trade-off across a rho grid
  gen-synth  generate synthetic cycling data from the closed-form oracle

Exit codes: 0 success, 2 config error, 3 data error, 4 training
divergence, 5 infeasible problem, 6 non-convergence under --strict.
Errors print one machine-parseable line on stderr.
"""

import argparse
import json
import sys

from . import __version__
from .config import (
    RunConfig,
    arch_from_config,
    pack_from_config,
    rho_from_value,
    train_config_from_config,
    write_manifest,
)
from .data import (
    featurize,
    generate_synthetic_fleet,
    load_cycling_csv,
    load_samples_csv,
    samples_to_arrays,
    write_cycling_csv,
    write_samples_csv,
)
from .exceptions import (
    ConfigError,
    DataFormatError,
    DegenerateMetricError,
    InfeasibleProblemError,
    TrainingDivergedError,
    V2gOptError,
)
from .feasible import FeasibleSet
from .icnn import load_weights, save_weights
from .metrics import r_squared
from .objectives import ChargingProblem, TariffProfile, TempForecast
from .solver import SolveConfig, solve
from .sweep import DEFAULT_RHOS, points_to_json, sweep, write_sweep_csv
from .training import predict_samples, split_samples, train

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_TRAINING = 4
EXIT_INFEASIBLE = 5
EXIT_NONCONVERGED = 6


def _fail(kind: str, code: int, exc) -> int:
    print(f"error kind={kind} msg={json.dumps(str(exc))}", file=sys.stderr)
    return code


def _solve_config(cfg: RunConfig) -> SolveConfig:
    section = cfg.get("solve", {})
    if not isinstance(section, dict):
        raise ConfigError("solve must be a JSON object", field="solve")
    known = {"step_size", "max_iters", "stop_tol", "backtracking"}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(
            f"unknown solve fields: {', '.join(sorted(unknown))}",
            field="solve")
    return SolveConfig(seed=cfg.seed(), **section)


def _load_problem(cfg: RunConfig, rho: float) -> ChargingProblem:
    pack = pack_from_config(cfg.get("pack"))
    tariff = TariffProfile.from_csv(cfg.input_path("tariff"))
    temps = TempForecast.from_csv(cfg.input_path("temps"))
    age = float(cfg.get("battery_age_h", 1000.0))
    problem = ChargingProblem(pack=pack, tariff=tariff, temps=temps,
                              rho=rho, battery_age_h=age)
    # Surface infeasibility (with its reachability explanation) before
    # any solving starts.
    FeasibleSet.from_pack(pack, problem.horizon)
    return problem


def cmd_train(cfg: RunConfig, args) -> int:
    seed = cfg.seed()
    out = cfg.output_dir()
    records = load_cycling_csv(cfg.input_path("dataset"))
    window_s = float(cfg.get("window_s", 900.0))
    samples, report = featurize(records, window_s=window_s)
    arch = arch_from_config(cfg.get("arch"))
    tc = train_config_from_config(cfg.get("train"), seed)
    weights, train_report = train(samples, arch, tc)

    _, val_samples = split_samples(samples, tc)
    predictions = predict_samples(weights, val_samples)
    _, _, targets, _ = samples_to_arrays(val_samples)
    r2 = r_squared(predictions, targets)

    save_weights(weights, out / "weights.json")
    (out / "train_report.json").write_text(train_report.to_json() + "\n",
                                           encoding="utf-8")
    train_report.write_loss_csv(out / "loss.csv")
    (out / "featurize_report.json").write_text(report.to_json() + "\n",
                                               encoding="utf-8")
    write_manifest(out, cfg, "train", seed)
    if not args.no_plots:
        from .plots import plot_loss, plot_prediction

        plot_loss(train_report.train_mse, train_report.val_mse,
                  out / "loss.png")
        plot_prediction(targets, predictions, out / "prediction.png")
    print(f"trained on {train_report.n_train} samples, validated on "
          f"{train_report.n_val}")
    print(f"validation R^2: {r2!r}")
    return EXIT_OK


def cmd_predict(cfg: RunConfig, args) -> int:
    seed = cfg.seed()
    out = cfg.output_dir()
    weights = load_weights(cfg.input_path("weights"))
    samples, has_targets = load_samples_csv(cfg.input_path("features"))
    predictions = predict_samples(weights, samples)

    path = out / "predictions.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        cols = ["elapsed_h", "temp_c", "c_rate", "q_loss_pred_ah"]
        if has_targets:
            cols.append("q_loss_ah")
        fh.write(",".join(cols) + "\n")
        for s, pred in zip(samples, predictions):
            row = f"{s.elapsed_h!r},{s.temp_c!r},{s.c_rate!r},{float(pred)!r}"
            if has_targets:
                row += f",{s.q_loss_ah!r}"
            fh.write(row + "\n")
    write_manifest(out, cfg, "predict", seed)
    print(f"wrote {len(samples)} predictions to {path}")
    if has_targets:
        _, _, targets, _ = samples_to_arrays(samples)
        r2 = r_squared(predictions, targets)
        print(f"R^2: {r2!r}")
        if not args.no_plots:
            from .plots import plot_prediction

            plot_prediction(targets, predictions, out / "prediction.png")
    return EXIT_OK


def cmd_optimize(cfg: RunConfig, args) -> int:
    seed = cfg.seed()
    out = cfg.output_dir()
    rho = rho_from_value(cfg.require("rho") if args.rho is None
                         else args.rho)
    weights = load_weights(cfg.input_path("weights"))
    problem = _load_problem(cfg, rho)
    schedule = solve(problem, weights, _solve_config(cfg))

    schedule.to_csv(out / "schedule.csv")
    (out / "schedule.json").write_text(schedule.to_json() + "\n",
                                       encoding="utf-8")
    write_manifest(out, cfg, "optimize", seed)
    if not args.no_plots:
        from .plots import plot_schedule

        plot_schedule(schedule, problem.pack, out / "schedule.png")
    print(f"rho={schedule.rho!r} theta1_eur={schedule.theta1_value!r} "
          f"theta2_eur={schedule.theta2_value!r} "
          f"j_eur={schedule.j_value!r} converged={schedule.converged} "
          f"iterations={schedule.iterations}")
    if args.strict and not schedule.converged:
        return _fail("convergence", EXIT_NONCONVERGED,
                     f"solver did not converge in {schedule.iterations} "
                     f"iterations")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    seed = cfg.seed()
    out = cfg.output_dir()
    rhos = cfg.get("rhos", list(DEFAULT_RHOS))
    if not isinstance(rhos, list) or not rhos:
        raise ConfigError("rhos must be a non-empty list", field="rhos")
    rhos = [rho_from_value(r, field="rhos") for r in rhos]
    warm_start = bool(cfg.get("warm_start", True))
    weights = load_weights(cfg.input_path("weights"))
    problem = _load_problem(cfg, rhos[0])
    points = sweep(problem, weights, rhos, _solve_config(cfg),
                   warm_start=warm_start)

    write_sweep_csv(points, out / "sweep.csv")
    (out / "sweep.json").write_text(points_to_json(points) + "\n",
                                    encoding="utf-8")
    write_manifest(out, cfg, "sweep", seed)
    if not args.no_plots:
        from .plots import plot_tradeoff

        plot_tradeoff(points, out / "tradeoff.png")
    for pt in points:
        print(f"rho={pt.rho!r} theta1_eur={pt.theta1!r} "
              f"theta2_eur={pt.theta2!r} j_eur={pt.j_value!r} "
              f"converged={pt.converged}")
    bad = [pt for pt in points if not pt.converged]
    if args.strict and bad:
        return _fail("convergence", EXIT_NONCONVERGED,
                     f"{len(bad)} of {len(points)} sweep points did not "
                     f"converge")
    return EXIT_OK


def cmd_gen_synth(cfg: RunConfig, args) -> int:
    seed = cfg.seed()
    out = cfg.output_dir()
    duration_h = float(cfg.get("duration_h", 1200.0))
    if duration_h <= 0:
        raise ConfigError(f"duration_h must be positive, got {duration_h}",
                          field="duration_h")
    records = generate_synthetic_fleet(seed, duration_h=duration_h)
    path = out / "synthetic.csv"
    write_cycling_csv(path, records)
    window_s = float(cfg.get("window_s", 900.0))
    samples, _ = featurize(records, window_s=window_s)
    write_samples_csv(samples, out / "synthetic_features.csv")
    write_manifest(out, cfg, "gen-synth", seed)
    cells = sorted({r.cell_id for r in records})
    print(f"wrote {len(records)} rows for cells {', '.join(cells)} "
          f"to {path}")
    return EXIT_OK


_HANDLERS = {
    "train": cmd_train,
    "predict": cmd_predict,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "gen-synth": cmd_gen_synth,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="v2gopt",
        description="Battery-aware V2G smart-charging toolkit.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "train": "fit the degradation network on a cycling CSV",
        "predict": "run a saved network over a feature CSV",
        "optimize": "solve one smart-charging schedule",
        "sweep": "trace the cost trade-off across a rho grid",
        "gen-synth": "generate synthetic cycling data",
    }
    for name, help_text in helps.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("config", help="path to the JSON run config")
        sp.add_argument("--output-dir", default=None,
                        help="override the config's output directory")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config's seed")
        sp.add_argument("--no-plots", action="store_true",
                        help="skip figure rendering")
        if name in ("optimize", "sweep"):
            sp.add_argument("--strict", action="store_true",
                            help="exit 6 when the solver does not converge")
        if name == "optimize":
            sp.add_argument("--rho", type=float, default=None,
                            help="override the config's rho")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        if args.output_dir is not None:
            cfg.doc["output_dir"] = args.output_dir
        if args.seed is not None:
            cfg.doc["seed"] = args.seed
        return _HANDLERS[args.command](cfg, args)
    except ConfigError as exc:
        return _fail("config", EXIT_CONFIG, exc)
    except DataFormatError as exc:
        return _fail("data", EXIT_DATA, exc)
    except DegenerateMetricError as exc:
        return _fail("data", EXIT_DATA, exc)
    except TrainingDivergedError as exc:
        return _fail("training", EXIT_TRAINING, exc)
    except InfeasibleProblemError as exc:
        return _fail("infeasible", EXIT_INFEASIBLE, exc)
    except V2gOptError as exc:
        return _fail("internal", EXIT_ERROR, exc)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
