"""Command-line interface: ``locate``, ``run`` and ``validate``.

Exit codes: 0 success, 2 configuration error, 3 degenerate PA geometry,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
from importlib import metadata
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import experiments
from .channel import NoiseModel, dbm_to_watt
from .config import ConfigError, ConfigFile, config_dict, dump_config, load_config, parse_config, parse_power_dbm
from .positioning_mwmp import grid_search_locate
from .positioning_mwsp import DegenerateGeometry, locate as ls_locate
from .scenario import synthesize

EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("pinchsim")


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pinchsim", description="Pinching-antenna positioning and downlink simulator")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out: bool):
        sp.add_argument("--config", help="YAML configuration file (defaults apply when omitted)")
        sp.add_argument("--seed", type=_u64, help="override the configured master seed")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        if out:
            sp.add_argument("--out", required=True, help="output directory")
            sp.add_argument("--threads", type=_positive_int, default=1, help="worker processes")

    loc = sub.add_parser("locate", help="estimate one user position")
    common(loc, out=False)
    src = loc.add_mutually_exclusive_group(required=True)
    src.add_argument("--powers", help="comma-separated received powers with units, e.g. '-52.1 dBm,-49 dBm,1e-8 W'")
    src.add_argument("--true-position", help="X,Y of a user to synthesize measurements for")
    loc.add_argument("--noiseless", action="store_true", help="synthesize without noise")

    run = sub.add_parser("run", help="run the configured campaign")
    common(run, out=True)

    val = sub.add_parser("validate", help="check a configuration and print it normalized")
    val.add_argument("--config", required=True)
    return p


def _load(path: Optional[str]) -> ConfigFile:
    return load_config(path) if path else parse_config({})


def _parse_xy(text: str) -> np.ndarray:
    try:
        xy = np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ConfigError(f"--true-position: cannot parse {text!r}") from None
    if xy.shape != (2,):
        raise ConfigError("--true-position: expected X,Y")
    return xy


def _parse_powers(text: str, k: int) -> np.ndarray:
    items = [t for t in text.split(",") if t.strip()]
    if len(items) != k:
        raise ConfigError(f"--powers: expected {k} values, got {len(items)}")
    out = []
    for t in items:
        try:
            float(t)
        except ValueError:
            pass
        else:
            raise ConfigError(f"--powers: {t.strip()!r} needs a unit suffix (dBm, W, mW or uW)")
        try:
            out.append(parse_power_dbm(t))
        except ValueError as exc:
            raise ConfigError(f"--powers: {exc}") from None
    return dbm_to_watt(np.array(out))


def _emit(record: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(record, indent=1) + "\n"
    keys = list(record)
    return ",".join(keys) + "\n" + ",".join(experiments.fmt(record[k]) for k in keys) + "\n"


def cmd_locate(args) -> int:
    cfg = _load(args.config)
    campaign = cfg.to_campaign(args.seed)
    n = cfg.layout.N
    scenario = campaign.scenario(campaign.layout if campaign.pa_positions is None else "radial", n)
    k = len(scenario.placements)
    truth = None
    if args.powers is not None:
        measured = _parse_powers(args.powers, k)
    else:
        truth = _parse_xy(args.true_position)
        if not scenario.room.contains(truth):
            raise ConfigError("--true-position lies outside the room")
        sigma2 = 0.0 if args.noiseless else float(dbm_to_watt(cfg.power.sigma2_dbm))
        noise = NoiseModel(sigma2, campaign.seed)
        measured = synthesize(scenario, truth, noise, noise.generator(0, 0), campaign.uplink_model).received

    record: dict = {}
    if n == 1 and k == 3:
        est = ls_locate(measured, scenario.pa_coords(), scenario.pa_arcs(), scenario.p_s, scenario.channel, scenario.room)
        record.update(method="MWSP", x=float(est.x), y=float(est.y), det_a=est.det_a,
                      triangle_area=est.triangle_area, residual_norm=float(est.residual_norm))
    else:
        res = grid_search_locate(measured, scenario.power_model(), campaign.grid)
        record.update(method="MWMP", x=res.estimate.x, y=res.estimate.y, error_value=res.final_error_value,
                      iterations=res.iterations_used, points_evaluated=res.points_evaluated,
                      power_evaluations=res.power_evaluations)
    if truth is not None:
        record["error_m"] = float(np.hypot(record["x"] - truth[0], record["y"] - truth[1]))
    sys.stdout.write(_emit(record, args.format))
    return EXIT_OK


def _versions() -> dict:
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"pinchsim": pkg, "numpy": np.__version__, "python": platform.python_version()}


def cmd_run(args) -> int:
    cfg = _load(args.config)
    campaign = cfg.to_campaign(args.seed)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        log.error("cannot create %s: %s", out, exc.strerror)
        return EXIT_IO
    layout = campaign.layout if campaign.pa_positions is None else "radial"
    scenario = campaign.scenario(layout, campaign.n_elements[0] if layout != "radial" else 1)
    result = experiments.run(campaign, workers=args.threads)
    body = experiments.to_csv(result) if args.format == "csv" else experiments.to_json(result)
    stem = f"{campaign.kind.value}_{campaign.seed}"
    data_path = out / f"{stem}.{args.format}"
    manifest = {
        "kind": campaign.kind.value,
        "seed": campaign.seed,
        "scenario_hash": scenario.digest(),
        "output": data_path.name,
        "config": config_dict(cfg.model_copy(update={"campaign": cfg.campaign.model_copy(update={"seed": campaign.seed})})),
        "versions": _versions(),
    }
    try:
        data_path.write_text(body)
        (out / f"{stem}.manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    except OSError as exc:
        log.error("cannot write to %s: %s", out, exc.strerror)
        return EXIT_IO
    print(data_path)
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    sys.stdout.write(dump_config(cfg))
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = {"locate": cmd_locate, "run": cmd_run, "validate": cmd_validate}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error:\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateGeometry as exc:
        print(f"degenerate geometry: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
