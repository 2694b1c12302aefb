"""Command-line front end.

    sfwm-polent dispersion  --config run.toml --width 700
    sfwm-polent predict     --width 1100
    sfwm-polent experiment  --width 1100 --seed 4
    sfwm-polent reconstruct --dataset out/dataset_w1100.csv
    sfwm-polent sweep       --config run.toml --out sweep_out

Exit status: 0 on success, 1 for usage or configuration errors, 2 for
numerical failures.  Every random draw derives from ``--seed`` (or the
config ``seed``) through ``(seed, subcommand, width, instance)`` keys.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import SweepSettings, width_sweep
from .bpw import predict
from .config import RunConfig, load_config
from .dispersion import (
    dgi,
    group_index,
    gvd,
    nm_from_omega,
    omega_from_nm,
    zero_dispersion_wavelength,
)
from .errors import NoRootError, NumericalError
from .polarization import (
    bell_state,
    density_from_state,
    density_to_json,
    state_metrics,
)
from .seeding import derive_seed
from .tomography import (
    mle_reconstruct,
    monte_carlo_errors,
    read_dataset_csv,
    reconstruction_report,
    simulate_dataset,
    write_dataset_csv,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2
FAILURE_MARKER = "FAILED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def _fmt(v) -> str:
    return repr(float(v))


def _single_width(args, cfg: RunConfig) -> float:
    if args.width and len(args.width) > 1:
        raise UsageError(f"{args.command} takes a single --width")
    return float(args.width[0]) if args.width else cfg.waveguide.width_nm


@contextlib.contextmanager
def _executor(cfg: RunConfig):
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            yield ex
    else:
        yield None


# --- subcommands ---------------------------------------------------------


def cmd_dispersion(cfg: RunConfig, width: float, out: Path) -> dict:
    spec = cfg.waveguide_spec(width)
    d = cfg.dispersion
    lam = np.linspace(d.wavelength_min_nm, d.wavelength_max_nm, d.n_points)
    w = omega_from_nm(lam)
    with (out / f"dispersion_w{width:g}.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["wavelength_nm", "ng_te", "ng_tm", "k2_te_ps2_per_km", "k2_tm_ps2_per_km"])
        cols = [group_index(spec.te, w), group_index(spec.tm, w), gvd(spec.te, w) * 1e27, gvd(spec.tm, w) * 1e27]
        for row in zip(lam, *cols):
            writer.writerow([_fmt(v) for v in row])
    zdw = {}
    for name, mode in (("te", spec.te), ("tm", spec.tm)):
        try:
            zdw[name] = zero_dispersion_wavelength(mode, d.zdw_bracket_nm)
        except NoRootError:
            zdw[name] = None
    w0 = cfg.pump_spectrum().omega0
    report = {
        "width_nm": width,
        "source": cfg.waveguide_source(),
        "zdw_te_nm": zdw["te"],
        "zdw_tm_nm": zdw["tm"],
        "dgi_pump": float(dgi(spec, w0)),
        "ng_te_pump": float(group_index(spec.te, w0)),
        "ng_tm_pump": float(group_index(spec.tm, w0)),
        "k2_te_pump": float(gvd(spec.te, w0)),
        "k2_tm_pump": float(gvd(spec.tm, w0)),
    }
    _write_json(out / f"dispersion_w{width:g}.json", report)
    return report


def _prediction(cfg: RunConfig, width: float, executor=None):
    spec = cfg.waveguide_spec(width)
    return spec, predict(
        spec, cfg.filter_function(), cfg.pump_spectrum(), cfg.grid.n, cfg.bpw_settings(), executor=executor
    )


def cmd_predict(cfg: RunConfig, width: float, out: Path, executor=None) -> dict:
    spec, pred = _prediction(cfg, width, executor)
    norms = pred.sector_norms()
    ah, av = 1.0 / math.sqrt(1 + pred.r**2), pred.r / math.sqrt(1 + pred.r**2)
    pump, filt = cfg.pump_spectrum(), cfg.filter_function()
    report = {
        "width_nm": width,
        "source": cfg.waveguide_source(),
        "r": pred.r,
        "pump_amplitudes": {"alpha_h": ah, "alpha_v": av},
        "dgi_pump": float(dgi(spec, pump.omega0)),
        "sector_norms": norms,
        "hh_vv_ratio": norms["HH"] / norms["VV"],
        "density_matrix": density_to_json(pred.rho),
        "metrics": state_metrics(pred.rho),
        "settings": {
            "pump_center_nm": pump.center_nm,
            "pump_bandwidth_hz": pump.bandwidth_hz,
            "signal_center_nm": filt.signal_center_nm,
            "idler_center_nm": filt.idler_center_nm,
            "filter_bandwidth_hz": filt.bandwidth_hz,
            "length_m": spec.length_m,
            "n_grid": cfg.grid.n,
            "n_pump": cfg.grid.n_pump,
            "phase": cfg.grid.phase,
        },
    }
    _write_json(out / f"prediction_w{width:g}.json", report)
    grid = pred.sectors["HH"].grid
    ws, wi = np.meshgrid(grid.omega_signal, grid.omega_idler, indexing="ij")
    with (out / f"sectors_w{width:g}.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["signal_nm", "idler_nm"]
        for k in ("HH", "VH", "HV", "VV"):
            header += [f"{k.lower()}_re", f"{k.lower()}_im"]
        writer.writerow(header)
        vals = [pred.sectors[k].values.ravel() for k in ("HH", "VH", "HV", "VV")]
        for i, (a, b) in enumerate(zip(nm_from_omega(ws).ravel(), nm_from_omega(wi).ravel())):
            row = [a, b]
            for v in vals:
                row += [v[i].real, v[i].imag]
            writer.writerow([_fmt(x) for x in row])
    return report


def _reconstruct_all(dataset, cfg: RunConfig, seed: int, subtract: bool, executor=None) -> dict:
    modes = [("raw", False)] + ([("acs", True)] if subtract else [])
    reports = {}
    for name, flag in modes:
        res = mle_reconstruct(dataset, use_accidental_subtraction=flag)
        metrics = state_metrics(res.rho)
        mc = None
        if cfg.experiment.monte_carlo > 0:
            mc = monte_carlo_errors(
                dataset, cfg.experiment.monte_carlo, seed, use_accidental_subtraction=flag, executor=executor
            )
        reports[name] = reconstruction_report(res, metrics, mc, seed, flag)
    return reports


def cmd_experiment(cfg: RunConfig, width: float, out: Path, subtract: bool, executor=None) -> dict:
    state = cfg.experiment.state
    if state == "predicted":
        _, pred = _prediction(cfg, width, executor)
        rho = pred.rho
    else:
        rho = density_from_state(bell_state("+" if state == "phi_plus" else "-"))
    params = cfg.experiment_params()
    dataset = simulate_dataset(rho, params, derive_seed(cfg.seed, "experiment", width))
    write_dataset_csv(out / f"dataset_w{width:g}.csv", dataset)
    reports = _reconstruct_all(dataset, cfg, derive_seed(cfg.seed, "experiment-mc", width), subtract, executor)
    report = {
        "width_nm": width,
        "state": state,
        "seed": cfg.seed,
        "source_density_matrix": density_to_json(rho),
        "experiment": dataclasses.asdict(params),
        "reconstructions": reports,
    }
    _write_json(out / f"reconstruction_w{width:g}.json", report)
    return report


def cmd_reconstruct(cfg: RunConfig, dataset_path: Path, out: Path, subtract: bool, executor=None) -> dict:
    dataset = read_dataset_csv(dataset_path)
    reports = _reconstruct_all(dataset, cfg, derive_seed(cfg.seed, "reconstruct-mc"), subtract, executor)
    report = {"dataset": dataset_path.name, "seed": cfg.seed, "reconstructions": reports}
    _write_json(out / f"{dataset_path.stem}_reconstruction.json", report)
    return report


def cmd_sweep(cfg: RunConfig, widths, out: Path, executor=None):
    if not widths:
        raise UsageError("sweep needs at least one width")
    settings = SweepSettings(
        n_replicas=cfg.sweep.replicas,
        noiseless=cfg.sweep.noiseless,
        n_grid=cfg.grid.n,
        bpw=cfg.bpw_settings(),
        filter=cfg.filter_function(),
        pump=cfg.pump_spectrum(),
    )
    result = width_sweep(
        cfg.waveguide_spec,
        widths,
        cfg.experiment_params(),
        derive_seed(cfg.seed, "sweep"),
        settings,
        executor=executor,
        fail_fast=False,
    )
    result = dataclasses.replace(result, family=cfg.waveguide_source())
    result.to_csv(out / "sweep.csv")
    result.write_json(out / "sweep.json")
    return result


# --- entry point ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run configuration")
    common.add_argument("--width", type=float, action="append", help="waveguide width in nm (repeatable for sweep)")
    common.add_argument("--seed", type=int, help="top-level seed (overrides the config)")
    common.add_argument("--out", type=Path, help="output directory (overrides the config)")
    common.add_argument(
        "--no-accidental-subtraction",
        action="store_true",
        help="only reconstruct raw counts",
    )
    parser = _Parser(prog="sfwm-polent", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("dispersion", parents=[common], help="group index, GVD, ZDW and DGI")
    sub.add_parser("predict", parents=[common], help="balanced pump ratio and predicted polarization state")
    sub.add_parser("experiment", parents=[common], help="simulate tomography counts and reconstruct")
    p = sub.add_parser("reconstruct", parents=[common], help="reconstruct from a dataset CSV")
    p.add_argument("--dataset", type=Path, required=True)
    sub.add_parser("sweep", parents=[common], help="width sweep of predicted and simulated metrics")
    return parser


def _summary(command: str, result) -> str:
    if command == "sweep":
        lines = ["width_nm  c_pure  c_raw  c_acs  s"]
        for r in result.records:
            lines.append(f"{r.width_nm:8g}  {r.c_pure:.4f}  {r.c_raw_mean:.4f}  {r.c_acs_mean:.4f}  {r.s_mean:.3f}")
        for w, msg in result.failures:
            lines.append(f"{w:8g}  FAILED: {msg}")
        return "\n".join(lines)
    if command == "dispersion":
        keys = ("zdw_te_nm", "zdw_tm_nm", "dgi_pump")
        return "\n".join(f"{k}: {result[k]}" for k in keys)
    if command == "predict":
        lines = [f"r: {result['r']:.6f}"] + [f"{k}: {v}" for k, v in result["metrics"].items()]
        return "\n".join(lines)
    lines = []
    for name, rep in result["reconstructions"].items():
        m, sd = rep["metrics"], rep["monte_carlo_std"] or {}
        lines.append(
            f"{name}: C = {m['concurrence']:.4f} +/- {sd.get('concurrence') or 0:.4f}, "
            f"S = {m['s']:.4f}, purity = {m['purity']:.4f}"
        )
    return "\n".join(lines)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    out = None
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        out = Path(args.out) if args.out is not None else Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / FAILURE_MARKER).unlink(missing_ok=True)
        subtract = cfg.experiment.accidental_subtraction and not args.no_accidental_subtraction
        with _executor(cfg) as ex:
            if args.command == "dispersion":
                result = cmd_dispersion(cfg, _single_width(args, cfg), out)
            elif args.command == "predict":
                result = cmd_predict(cfg, _single_width(args, cfg), out, ex)
            elif args.command == "experiment":
                result = cmd_experiment(cfg, _single_width(args, cfg), out, subtract, ex)
            elif args.command == "reconstruct":
                result = cmd_reconstruct(cfg, args.dataset, out, subtract, ex)
            else:
                widths = args.width if args.width else list(cfg.sweep.widths_nm)
                result = cmd_sweep(cfg, widths, out, ex)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        _mark_failure(out, exc)
        return EXIT_NUMERICAL
    except (UsageError, ValueError) as exc:
        # ConfigError and the other input-validation errors are ValueErrors
        print(f"error: {exc}", file=sys.stderr)
        _mark_failure(out, exc)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    print(_summary(args.command, result))
    if args.command == "sweep" and result.failures:
        for w, msg in result.failures:
            print(f"width {w:g} nm failed: {msg}", file=sys.stderr)
        kinds = {msg.split(":", 1)[0] for _, msg in result.failures}
        _mark_failure(out, "; ".join(f"width {w:g} nm: {m}" for w, m in result.failures))
        return EXIT_CONFIG if kinds <= {"ConfigError"} else EXIT_NUMERICAL
    return EXIT_OK


def _mark_failure(out: Path | None, exc) -> None:
    if out is not None and out.is_dir():
        (out / FAILURE_MARKER).write_text(f"{exc}\n")


if __name__ == "__main__":
    sys.exit(main())
