"""``bagres`` command line: spectrum, sweep, gap and verify.

Exit codes: 0 success, 1 acceptance failure, 2 invalid input, 3 numerical failure.
Every CSV is accompanied by ``<out>.manifest.json``; gap and sweep also
write ``<out>.summary.json``.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import math
import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, linalg
from .acceptance import run_suite
from .core import BagresError, BoundaryParam, LabConfig, NumericalFailure, SpectralWindow, parse_tau
from .disk_oracle import disk_dirac_eigs, zigzag_spectrum_disk
from .lab import MODES, PROJECTOR_TOL, fit_rate, resolvent_gap, sweep_lambda1
from .radial_fd import RadialGrid, assemble_htau_radial, assemble_zigzag_radial
from .specialfun import ZeroCache, set_zero_cache

log = logging.getLogger("bagres")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.15g}"
    if v is None:
        return ""
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=Path(__file__).parent,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


@dataclass
class RunManifest:
    config: LabConfig
    command: str
    version: str
    timestamp: str
    outputs: list[str] = field(default_factory=list)
    arguments: dict = field(default_factory=dict)

    def write(self, path: Path) -> None:
        data = {
            "command": self.command,
            "arguments": self.arguments,
            "config": self.config.to_dict(),
            "version": self.version,
            "timestamp": self.timestamp,
            "outputs": self.outputs,
        }
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def load_config(args) -> LabConfig:
    """Flags > JSON config file > defaults."""
    data = LabConfig().to_dict()
    if getattr(args, "config", None):
        try:
            file_data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise BagresError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(file_data, dict):
            raise BagresError("config file must hold a JSON object")
        data.update(file_data)
    if getattr(args, "n", None) is not None:
        data["grid_points"] = args.n
    lo, hi = data["channel_range"]
    if getattr(args, "kmin", None) is not None:
        lo = args.kmin
    if getattr(args, "kmax", None) is not None:
        hi = args.kmax
    data["channel_range"] = [lo, hi]
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    try:
        return LabConfig.from_dict(data)
    except TypeError as exc:
        raise BagresError(f"bad config: {exc}") from exc


def _finish(args, cfg, out: Path, extra_outputs=()) -> None:
    args_dict = {k: v for k, v in vars(args).items() if k not in ("func",) and v is not None}
    man = RunManifest(cfg, args.command, _git_describe(),
                      _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
                      [str(out), *map(str, extra_outputs)], args_dict)
    man.write(out.with_name(out.name + ".manifest.json"))


def _out_path(args) -> Path:
    out = Path(args.out or f"{args.command}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def cmd_spectrum(args) -> int:
    cfg = load_config(args)
    prm = BoundaryParam(parse_tau(args.tau), args.mass, args.radius)
    window = SpectralWindow.parse(args.window)
    rows = []
    if args.source == "oracle":
        if prm.finite:
            res = disk_dirac_eigs(prm, cfg.channel_range, window, cfg.root_tol)
        else:
            res = zigzag_spectrum_disk(prm, window, cfg.channel_range)
        for msg in res.warnings:
            print(f"warning: {msg}", file=sys.stderr)
        rows = [(e.value, e.channel, e.residual, e.infinite_multiplicity, "oracle") for e in res.eigenvalues]
    else:
        grid = RadialGrid(prm.radius, cfg.grid_points)
        kernel_point = -prm.mass if prm.tau == math.inf else prm.mass
        for k in cfg.channel_range:
            op = assemble_htau_radial(k, prm, grid) if prm.finite else assemble_zigzag_radial(k, prm, grid)
            dec = linalg.eigh(op.matrix, op.weights)
            R = op.matrix @ dec.vectors - dec.vectors * dec.values
            resid = np.sqrt(np.sum(op.weights[:, None] * np.abs(R) ** 2, axis=0))
            for v, r in zip(dec.values, resid):
                if v in window:
                    kern = (not prm.finite) and abs(v - kernel_point) <= PROJECTOR_TOL
                    rows.append((float(v), k, float(r), kern, "discrete"))
        rows.sort(key=lambda r: (r[0], r[1]))
    out = _out_path(args)
    write_csv(out, ["value", "channel", "residual", "infinite_multiplicity", "provenance"], rows)
    _finish(args, cfg, out)
    return 0


def _parse_grid(text: str) -> np.ndarray:
    try:
        a, b, step = (float(t) for t in text.split(":"))
    except ValueError as exc:
        raise BagresError(f"tau grid must look like a:b:step, got {text!r}") from exc
    if step <= 0 or b < a:
        raise BagresError("tau grid needs step > 0 and b >= a")
    n = int(math.floor((b - a) / step + 1e-9)) + 1
    return a + step * np.arange(n)


def cmd_sweep(args) -> int:
    cfg = load_config(args)
    taus = _parse_grid(args.tau_grid)
    sw = sweep_lambda1(args.mass, args.radius, taus, cfg)
    out = _out_path(args)
    rows = [(t, v, sw.limits["minus_inf_target"], sw.limits["plus_inf_target"], p)
            for t, v, p in zip(sw.tau_grid, sw.lambda1_plus, sw.provenance)]
    write_csv(out, ["tau", "lambda1_plus", "minus_inf_target", "plus_inf_target", "provenance"], rows)
    summary = {
        "monotone": sw.monotone,
        "limits": sw.limits,
        "delta_at_max_tau": float(sw.lambda1_plus[-1] - sw.limits["plus_inf_target"]),
        "delta_at_min_tau": float(sw.lambda1_plus[0] - sw.limits["minus_inf_target"]),
    }
    summ = out.with_name(out.name + ".summary.json")
    summ.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _finish(args, cfg, out, [summ])
    return 0


def _parse_lambda(text: str) -> complex:
    try:
        re_, im_ = (float(t) for t in text.split(":"))
    except ValueError as exc:
        raise BagresError(f"lambda must look like re:im, got {text!r}") from exc
    if im_ == 0:
        raise BagresError("lambda must have nonzero imaginary part")
    return complex(re_, im_)


def cmd_gap(args) -> int:
    cfg = load_config(args)
    lam = _parse_lambda(args.lam)
    taus = _parse_grid(args.tau_grid)
    tau0 = None if args.tau0 is None else parse_tau(args.tau0)
    curve = resolvent_gap(taus, lam, args.mode, args.mass, args.radius, cfg, tau0=tau0, route=args.route)
    out = _out_path(args)
    proj = curve.projected_norms if curve.projected_norms is not None else [None] * len(taus)
    rows = [(t, r, p) for t, r, p in zip(curve.tau_grid, curve.raw_norms, proj)]
    write_csv(out, ["tau", "raw_norm", "projected_norm"], rows)
    summary = {"mode": args.mode, "lambda": [lam.real, lam.imag],
               "metadata": {k: v for k, v in curve.metadata.items() if k != "per_channel"}}
    xs = np.abs(taus - tau0) if args.mode == "raw_vs_tau0" else taus
    if len(taus) >= 3 and np.all(curve.values > 0):
        fit = fit_rate(np.log(xs) if args.mode == "raw_vs_tau0" else xs, curve.values)
        summary["fit"] = {"slope": fit.slope, "intercept": fit.intercept, "max_log_residual": fit.max_log_residual,
                          "x": "log|tau - tau0|" if args.mode == "raw_vs_tau0" else "tau"}
    summary["min_over_first"] = float(curve.values.min() / curve.values[0]) if curve.values[0] > 0 else None
    summ = out.with_name(out.name + ".summary.json")
    summ.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _finish(args, cfg, out, [summ])
    return 0


def cmd_verify(args) -> int:
    cfg = load_config(args)
    only = set(args.only) if args.only else None
    results = run_suite(cfg, fast=args.fast, only=only, echo=lambda s: print(s, flush=True))
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return 0 if passed == len(results) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bagres", description="Spectral lab for MIT bag and zigzag Dirac operators on the disk")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, physics=True):
        sp.add_argument("--config", help="JSON file with LabConfig keys")
        sp.add_argument("--n", type=int, help="radial grid cells")
        sp.add_argument("--kmin", type=int)
        sp.add_argument("--kmax", type=int)
        sp.add_argument("--seed", type=int)
        if physics:
            sp.add_argument("--mass", type=float, default=1.0)
            sp.add_argument("--radius", type=float, default=1.0)
            sp.add_argument("--out", help="CSV output path (default <command>.csv)")

    sp = sub.add_parser("spectrum", help="eigenvalues in a window")
    common(sp)
    sp.add_argument("--tau", required=True, help="real, +inf or -inf")
    sp.add_argument("--window", default="-6:6", help="lo:hi")
    sp.add_argument("--source", choices=("oracle", "fd"), default="oracle")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("sweep", help="lambda_1^+ over a tau grid")
    common(sp)
    sp.add_argument("--tau-grid", required=True, help="a:b:step")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("gap", help="resolvent gap curve")
    common(sp)
    sp.add_argument("--mode", choices=MODES, default="projected_vs_zigzag")
    sp.add_argument("--lambda", dest="lam", default="0:1", help="re:im")
    sp.add_argument("--tau-grid", default="2:5:1", help="a:b:step")
    sp.add_argument("--tau0", help="reference coupling for raw_vs_tau0")
    sp.add_argument("--route", choices=("dense", "rank_one"), default="dense")
    sp.set_defaults(func=cmd_gap)

    sp = sub.add_parser("verify", help="run the acceptance suite")
    common(sp, physics=False)
    sp.add_argument("--fast", action="store_true", help="skip the n=800 checks")
    sp.add_argument("--only", type=int, nargs="+", help="criterion numbers to run")
    sp.set_defaults(func=cmd_verify)
    return p


# flags whose values may start with "-" (e.g. "--window -4:4", "--tau -inf")
_SIGNED_VALUE_FLAGS = {"--tau", "--tau0", "--window", "--tau-grid", "--lambda"}


def _glue_signed_values(argv: list[str]) -> list[str]:
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _SIGNED_VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_signed_values(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    set_zero_cache(ZeroCache.from_env())
    try:
        return args.func(args)
    except BagresError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
