"""
Command line entry point.

    reltori check --config system.toml
    reltori reconstruct --config system.toml --out results/
    reltori verify --config system.toml --out results/
    reltori snf matrix.txt

Exit codes: 0 success, 1 failed check or verification (or a pipeline
error, reported with its stage), 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from . import exact_linalg as xl
from .config import ConfigError, RunConfig, load_config
from .dynsys import check_hypotheses
from .errors import ReconstructionError
from .reconstruct import reconstruct
from .report import dumps, reconstruction_dict, trajectory_csv, verification_dict
from .verify import linear_angle_invariant, verify_reconstruction

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _positive_float(s):
    x = float(s)
    if not x > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return x


def _positive_int(s):
    x = int(s)
    if x < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return x


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="reltori", description="Reconstruction of relative quasi-periodic tori.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in [("check", "check the hypotheses on the declared system"),
                        ("reconstruct", "run the pipeline and write report.json"),
                        ("verify", "reconstruct, certify numerically, write verification.json and trajectory.csv")]:
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True, type=Path, help="TOML run configuration")
        s.add_argument("--out", type=Path, help="output directory (default: current directory)")
        s.add_argument("--step", type=_positive_float, help="integrator step")
        s.add_argument("--mode", choices=["exact", "numeric"])
        s.add_argument("--height-bound", type=_positive_int, help="height bound of the numeric relation search")
        s.add_argument("--tol", type=_positive_float, help="tolerance of the numeric relation search")
    s = sub.add_parser("snf", help="Smith normal form of an integer matrix file")
    s.add_argument("matrix", type=Path, help="text file, one row per line, whitespace or comma separated")
    s.add_argument("--out", type=Path, help="write snf.json here instead of printing")
    return p


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    return cfg.with_overrides(mode=args.mode, step=args.step, height_bound=args.height_bound, tol=args.tol)


def _write(out: Path | None, name: str, text: str):
    if out is None:
        out = Path(".")
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8")


def _base_report(cfg: RunConfig, command: str) -> dict:
    return {"command": command, "version": __version__, "config": cfg.raw}


def _error_report(base: dict, exc: ReconstructionError) -> dict:
    return {**base, "status": "error", "error": {"stage": exc.stage, "type": type(exc).__name__,
                                                 "message": str(exc)}}


def cmd_check(cfg: RunConfig) -> int:
    violations = check_hypotheses(cfg.spec)
    for v in violations:
        print(f"violation: {v}")
    if violations:
        return EXIT_FAIL
    print("hypotheses hold")
    return EXIT_OK


def _run(cfg: RunConfig):
    return reconstruct(cfg.spec, mode=cfg.mode, step=cfg.step, height_bound=cfg.height_bound, tol=cfg.tol)


def cmd_reconstruct(cfg: RunConfig, out: Path | None) -> int:
    base = _base_report(cfg, "reconstruct")
    try:
        recon = _run(cfg)
    except ReconstructionError as exc:
        _write(out, "report.json", dumps(_error_report(base, exc)))
        print(f"error in stage {exc.stage}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _write(out, "report.json", dumps({**base, "status": "ok", **reconstruction_dict(recon)}))
    t1, t2 = recon.t1, recon.t2
    nu = ", ".join(f"{float(x):.12g}" for x in t1.nu)
    print(f"d1 = {t1.d1}, nu = ({nu}), l = {t2.l}, r = {t2.r}, d0 = {t2.d0}, "
          f"|K| = {t2.K_order}, |F0| = {t2.F0_order}, covering degree = {t2.covering_degree}, "
          f"base = {t2.base_label}" + (" [heuristic]" if t2.heuristic else ""))
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out: Path | None) -> int:
    base = _base_report(cfg, "verify")
    try:
        recon = _run(cfg)
        v = cfg.verify
        rep = verify_reconstruction(
            recon, cfg.tolerances, seed=v.seed, sample_count=v.sample_count, t_grid=v.t_grid,
            t_max=v.t_max, horizon=v.horizon, dt=v.dt,
            invariants=[linear_angle_invariant(c) for c in v.invariants], frequencies=v.frequencies)
    except (ReconstructionError, ValueError) as exc:
        if not isinstance(exc, ReconstructionError):
            exc = ReconstructionError(str(exc))
            exc.stage = "verify"
        _write(out, "verification.json", dumps(_error_report(base, exc)))
        print(f"error in stage {exc.stage}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _write(out, "verification.json", dumps({**base, "status": "ok", **verification_dict(rep),
                                            "reconstruction": reconstruction_dict(recon)}))
    _write(out, "trajectory.csv", trajectory_csv(rep.trajectory))
    for r in rep.rows:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: residual {r.residual:.3e} (tol {r.tolerance:.1e})"
              + (f" {r.note}" if r.note else ""))
    return EXIT_OK if rep.passed else EXIT_FAIL


def read_matrix(path: Path):
    rows = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].replace(",", " ").strip()
        if line:
            rows.append([int(x) for x in line.split()])
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValueError("matrix must be nonempty and rectangular")
    return rows


def cmd_snf(path: Path, out: Path | None) -> int:
    A = read_matrix(path)
    dec = xl.snf(A)
    ok = (xl.matmul(xl.matmul(dec.U, A), dec.V) == [list(r) for r in dec.D]
          and abs(xl.det(dec.U)) == 1 and abs(xl.det(dec.V)) == 1)
    text = dumps({"A": A, "U": dec.U, "D": dec.D, "V": dec.V,
                  "invariant_factors": dec.invariant_factors, "rank": dec.rank, "verified": ok})
    if out is None:
        sys.stdout.write(text)
    else:
        _write(out, "snf.json", text)
    return EXIT_OK if ok else EXIT_FAIL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "snf":
            return cmd_snf(args.matrix, args.out)
        cfg = _load(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"reltori: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "check":
        return cmd_check(cfg)
    if args.command == "reconstruct":
        return cmd_reconstruct(cfg, args.out)
    return cmd_verify(cfg, args.out)


if __name__ == "__main__":
    raise SystemExit(main())
