"""Command line front end: ``isingdual {tiling,code,exact,mc,bounds,analyze}``.

Every command writes a JSON manifest (command, config hash, seeds, inputs,
outputs, wall time) after its outputs.  Exit codes: 0 ok, 2 configuration
error, 3 infeasible size, 4 numerical failure, 5 invariant violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import analysis, bounds, css, exact, mc, tiling
from .errors import ConfigError, InfeasibleSizeError, InvariantViolation, NumericalFailure
from .gf2 import BitVector, read_matrix
from .model import IsingModel, load_model

log = logging.getLogger("isingdual")

EXIT_CODES = [
    (ConfigError, 2),
    (InfeasibleSizeError, 3),
    (NumericalFailure, 4),
    (InvariantViolation, 5),
]
DATA_ENV = "ISINGDUAL_DATA"


class Manifest:
    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        cfg = {k: v for k, v in vars(args).items() if k not in ("func", "manifest")}
        blob = json.dumps(cfg, sort_keys=True, default=str)
        self.record = {"command": command, "config": cfg,
                       "config_hash": hashlib.sha256(blob.encode()).hexdigest(),
                       "seeds": [], "inputs": [], "outputs": []}
        self.t0 = time.perf_counter()

    def add(self, key: str, value) -> None:
        self.record[key].append(str(value) if isinstance(value, Path) else value)

    def write(self, path) -> None:
        self.record["wall_time"] = time.perf_counter() - self.t0
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".manifest")
        with os.fdopen(fd, "w") as fh:
            json.dump(self.record, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")
        os.replace(tmp, path)


def _data_dir() -> Path | None:
    d = os.environ.get(DATA_ENV)
    return Path(d) if d else None


def _tiling_from_args(args, man: Manifest) -> tiling.Tiling:
    if getattr(args, "torus", None):
        return tiling.square_torus(args.torus)
    src = getattr(args, "tiling_dir", None)
    if src:
        man.add("inputs", src)
        return tiling.load_tiling(src)
    raise ConfigError("need --torus L or --tiling-dir DIR")


def _model_from_args(args, man: Manifest) -> IsingModel:
    if getattr(args, "matrix", None):
        man.add("inputs", args.matrix)
        m = load_model(args.matrix)
    else:
        m = IsingModel(_tiling_from_args(args, man).G)
    if getattr(args, "K", None) is not None:
        m = m.with_(K=args.K)
    return m


# ---------------------------------------------------------------------------
# commands

def cmd_tiling(args, man: Manifest) -> int:
    if args.torus:
        t = tiling.square_torus(args.torus)
    else:
        if args.f is None or args.d is None:
            raise ConfigError("need --f and --d (or --torus)")
        pres = tiling.GroupPresentation.van_dyck(args.f, args.d)
        if args.presentation:
            path = Path(args.presentation)
            if not path.exists() and _data_dir():
                path = _data_dir() / args.presentation
            man.add("inputs", path)
            pres = tiling.GroupPresentation.load(path)
        pres = pres.with_relators(*args.relator)
        if args.seed_search:
            hits = tiling.search_quotients(args.f, args.d, [args.length], range(args.seed_search),
                                           max_cosets=args.max_cosets, max_order=args.max_order)
            hit = next(hits, None)
            if hit is None:
                raise InfeasibleSizeError("no closing relator found in the seed range")
            pres, order, rel, seed = hit
            man.add("seeds", seed)
            print(f"relator {rel} (seed {seed}) closes with group order {order}")
        try:
            t = tiling.build_tiling(pres, args.f, args.d, args.max_cosets)
        except InfeasibleSizeError as exc:
            raise InfeasibleSizeError(
                f"{{{args.f},{args.d}}} presentation did not close: {exc}") from exc
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            pres.save(Path(args.out) / "presentation.txt")
            man.add("outputs", Path(args.out) / "presentation.txt")
    h = t.header()
    print(" ".join(f"{k}={v}" for k, v in h.items()))
    if args.out:
        tiling.save_tiling(t, args.out)
        for name in ("G.txt", "H.txt", "tiling.json"):
            man.add("outputs", Path(args.out) / name)
    return 0


def cmd_code(args, man: Manifest) -> int:
    if args.dir:
        d = Path(args.dir)
        man.add("inputs", d)
        G, H = read_matrix(d / "G.txt"), read_matrix(d / "H.txt")
    elif args.torus:
        t = tiling.square_torus(args.torus)
        G, H = t.G, t.H
    else:
        raise ConfigError("need --dir or --torus")
    p = css.build_css(G, H)
    if p.k == 0:
        dist, how = "-", "k=0"
    elif args.exact:
        dist, how = str(min(css.css_distance_exact(p))), "exact"
    else:
        res = [css.random_window_search(q, args.trials, args.seed) for q in (p, p.swapped())]
        man.add("seeds", args.seed)
        dist = str(min(r.weight for r in res))
        how = f"upper bound, {sum(r.trials_run for r in res)} trials"
    print("n r k R d")
    print(f"{p.n} {G.nrows} {p.k} {p.R:.6f} {dist}  ({how})")
    return 0


def cmd_exact(args, man: Manifest) -> int:
    m = _model_from_args(args, man)
    out = {}
    if args.check in ("duality", "all"):
        out["duality_residual"] = exact.verify_duality(m.with_(e=None, h=0.0))
    if args.check in ("partition", "all"):
        out["lnZ"] = exact.partition_function(m)
    if args.check in ("em", "all"):
        e = BitVector.from_indices(args.defect or [0], m.n)
        out["em_residual"] = exact.verify_em_duality(m.with_(e=None), e)
    if args.check in ("delta-f", "all"):
        t = _tiling_from_args(args, man)
        out["delta_f"] = exact.homological_difference(t.css(), m.K)
    for k, v in out.items():
        print(f"{k} {v:.12e}")
    if args.out:
        Path(args.out).write_text(json.dumps(out, indent=2) + "\n")
        man.add("outputs", args.out)
    return 0


def cmd_mc(args, man: Manifest) -> int:
    m = _model_from_args(args, man)
    if args.config:
        man.add("inputs", args.config)
        cfg = json.loads(Path(args.config).read_text())
        sched = mc.Schedule(**cfg)
    else:
        temps = np.linspace(args.t_min, args.t_max, args.points)
        sched = mc.Schedule(temps, args.cycles, args.sweeps, args.algorithm, args.seed, args.runs)
    series = mc.run_schedule(m, sched)
    for s in series.meta["run_seeds"]:
        man.add("seeds", s)
    if args.out:
        series.to_csv(args.out)
        man.add("outputs", args.out)
    else:
        mc_rows = [r for r in series.rows if r["direction"] == "both"]
        for r in mc_rows:
            print(" ".join(f"{r[c]:.6g}" if c != "direction" else r[c] for c in mc.CSV_COLUMNS))
    return 0


def cmd_bounds(args, man: Manifest) -> int:
    reps: list[bounds.BoundReport] = []
    if args.which in ("theorem4", "all"):
        reps.append(bounds.theorem4_bound(args.f, args.d))
    if args.which in ("hts", "all"):
        reps.append(bounds.BoundReport("hts_radius", {"l": args.l, "m": args.m},
                                       bounds.hts_radius(args.l, args.m)))
    if args.which in ("region", "all"):
        reps.append(bounds.theorem1_region(args.m, args.p, args.K))
    if args.which in ("lemmaA", "all"):
        reg = bounds.theorem1_region(args.m, args.p, args.K)
        val = bounds.lemma_A_bound(args.m, args.p, args.K, args.dG) if reg.satisfied else math.inf
        reps.append(bounds.BoundReport("lemma_A", {"m": args.m, "p": args.p, "K": args.K,
                                                   "d_G": args.dG}, val, reg.satisfied))
    if args.which in ("kw", "all"):
        reps.append(bounds.BoundReport("kw_dual", {"K": args.K}, bounds.kw_dual(args.K)))
    print(bounds.format_reports(reps))
    for r in reps:
        print(r.row())
    return 0


def cmd_analyze(args, man: Manifest) -> int:
    man.add("inputs", args.csv)
    series = mc.MCSeries.from_csv(args.csv)
    s = analysis.series_from_mc(series, args.observable, args.direction)
    if args.dualize:
        d = analysis.dualize_energy(analysis.series_from_mc(series, "eps", args.direction))
        if args.out:
            analysis.write_tsv(args.out, {"T_star": d.x, "eps_star": d.y, "err": d.yerr})
            man.add("outputs", args.out)
        else:
            for x, y in zip(d.x, d.y):
                print(f"{x:.8f} {y:.10f}")
        return 0
    fit = analysis.quartic_peak_fit(s, args.window)
    print(f"peak {args.observable}: x_m={fit.x_m:.6f} +- {fit.x_err:.6f}  "
          f"y_m={fit.y_m:.6f} +- {fit.y_err:.6f}  chi2={fit.residual:.4g}")
    if args.out:
        Path(args.out).write_text(json.dumps(
            {"x_m": fit.x_m, "x_err": fit.x_err, "y_m": fit.y_m, "y_err": fit.y_err,
             "chi2": fit.residual, "observable": args.observable}, indent=2) + "\n")
        man.add("outputs", args.out)
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_model_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--torus", type=int, help="L x L square torus")
    p.add_argument("--tiling-dir", help="directory with G.txt, H.txt, tiling.json")
    p.add_argument("--matrix", help="coupling matrix file (optional .json sidecar)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="isingdual", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--manifest", help="manifest path (default: next to the output)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tiling", help="build a square torus or {f,d} quotient tiling")
    p.add_argument("--f", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--torus", type=int)
    p.add_argument("--relator", action="append", default=[])
    p.add_argument("--presentation", help="presentation file (one relator per line)")
    p.add_argument("--seed-search", type=int, default=0, metavar="N",
                   help="try random extra relators with seeds 0..N-1")
    p.add_argument("--length", type=int, default=16)
    p.add_argument("--max-cosets", type=int, default=200_000)
    p.add_argument("--max-order", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_tiling)

    p = sub.add_parser("code", help="CSS parameters n r k R d")
    p.add_argument("--dir")
    p.add_argument("--torus", type=int)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_code)

    p = sub.add_parser("exact", help="exact enumeration checks")
    _add_model_source(p)
    p.add_argument("--K", type=float, default=0.44)
    p.add_argument("--check", choices=["duality", "partition", "em", "delta-f", "all"],
                   default="duality")
    p.add_argument("--defect", type=int, nargs="*")
    p.add_argument("--out")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("mc", help="Monte Carlo cooling-heating schedule")
    _add_model_source(p)
    p.add_argument("--config", help="JSON file with Schedule fields")
    p.add_argument("--t-min", type=float, default=2.0)
    p.add_argument("--t-max", type=float, default=5.0)
    p.add_argument("--points", type=int, default=61)
    p.add_argument("--cycles", type=int, default=16)
    p.add_argument("--sweeps", type=int, default=4096)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--algorithm", choices=["metropolis", "wolff"], default="wolff")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mc, K=None)

    p = sub.add_parser("bounds", help="evaluate closed-form bounds")
    p.add_argument("which", choices=["theorem4", "hts", "region", "lemmaA", "kw", "all"])
    p.add_argument("--f", type=int, default=5)
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--l", type=int, default=2)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--dG", type=int, default=2)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("analyze", help="peak fits and energy duality on an mc CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--observable", default="C", choices=list(mc.OBSERVABLES))
    p.add_argument("--direction", default="both", choices=["cool", "heat", "both"])
    p.add_argument("--window", type=float, default=0.4)
    p.add_argument("--dualize", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)
    return ap


def _manifest_path(args) -> Path:
    if args.manifest:
        return Path(args.manifest)
    out = getattr(args, "out", None)
    if not out:
        return Path(f"isingdual_{args.command}.manifest.json")
    p = Path(out)
    if p.is_dir() or not p.suffix:
        return p / "manifest.json"
    return p.with_name(p.name + ".manifest.json")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    man = Manifest(args.command, args)
    code = 0
    try:
        code = args.func(args, man)
    except (ValueError, RuntimeError) as exc:
        for cls, c in EXIT_CODES:
            if isinstance(exc, cls):
                code = c
                break
        else:
            code = 2 if isinstance(exc, ValueError) else 4
        man.record["error"] = f"{type(exc).__name__}: {exc}"
        print(f"error: {exc}", file=sys.stderr)
    except OSError as exc:
        code = 2
        man.record["error"] = f"{type(exc).__name__}: {exc}"
        print(f"error: {exc}", file=sys.stderr)
    man.record["exit_code"] = code
    man.write(_manifest_path(args))
    return code


if __name__ == "__main__":
    sys.exit(main())
