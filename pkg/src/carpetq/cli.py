"""Command-line front end.

Subcommands mirror the library layers: validate a carpet description,
tabulate partition levels, certify antichain construction, emit the
entropy-ratio sequences, run the quantization diagnostics, and render
charts from previously written tables.  Exit code 0 means every
asserted invariant held; 1 means at least one failed (the failures are
printed to stderr as JSON); 2 means the invocation or config was
unusable.  All outputs are deterministic for a fixed config and seed,
whatever the thread count.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .coding import build_antichain, verify_maximal_antichain
from .measure import (
    CarpetSpec, DerivedParams, InvalidSpecError, derive_params, validate_spec,
)
from .partition import (
    check_square_disjointness, enumerate_lambda_k, partition_stats,
    stopped_statistics,
)
from .quantizer import ball_bound_check, draw_cloud, r_k_diagnostic
from .report import read_csv, render_line_chart, write_csv, write_json, write_text
from .sequences import delta_k, sequence_point

__all__ = ["main", "load_config", "ConfigError", "RunConfig"]


DEFAULT_CLOUD = 1_000_000
DEFAULT_DEPTH = 40
DEFAULT_SEED = 0x5EED
DEFAULT_CAP = 2_000_000

_CONFIG_KEYS = {
    "n", "m", "maps", "k_min", "k_max", "cloud_size", "depth", "seed",
    "outputs",
}


class ConfigError(ValueError):
    """The config file cannot be used as given."""


@dataclass(frozen=True)
class RunConfig:
    spec: CarpetSpec
    k_min: int
    k_max: int
    cloud_size: int
    depth: int
    seed: int
    outputs: tuple[str, ...]

    def want(self, kind: str) -> bool:
        return kind in self.outputs


def _require_int(raw: dict, key: str, default: Optional[int],
                 minimum: int) -> int:
    if key not in raw:
        if default is None:
            raise ConfigError(f"config is missing required key {key!r}")
        return default
    value = raw[key]
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"config key {key!r} must be an integer, "
                          f"got {value!r}")
    if value < minimum:
        raise ConfigError(f"config key {key!r} must be >= {minimum}, "
                          f"got {value}")
    return value


def load_config(path) -> RunConfig:
    """Parse and sanity-check a config file; raises ConfigError."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = sorted(set(raw) - _CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    n = _require_int(raw, "n", None, 2)
    m = _require_int(raw, "m", None, 2)
    maps = raw.get("maps")
    if not isinstance(maps, list) or not maps:
        raise ConfigError("config key 'maps' must be a nonempty list")
    weighted: dict[tuple[int, int], str] = {}
    for entry in maps:
        if (not isinstance(entry, dict)
                or set(entry) != {"i", "j", "p"}
                or not isinstance(entry["i"], int)
                or not isinstance(entry["j"], int)
                or not isinstance(entry["p"], str)):
            raise ConfigError(
                "each map must be {\"i\": int, \"j\": int, \"p\": \"num/den\"},"
                f" got {entry!r}")
        cell = (entry["i"], entry["j"])
        if cell in weighted:
            raise ConfigError(f"duplicate map cell {cell}")
        weighted[cell] = entry["p"]
    try:
        spec = CarpetSpec.of(n, m, weighted)
    except Exception as exc:
        raise ConfigError(f"bad map table: {exc}") from exc
    k_min = _require_int(raw, "k_min", 2, 1)
    k_max = _require_int(raw, "k_max", max(k_min, 4), k_min)
    cloud_size = _require_int(raw, "cloud_size", DEFAULT_CLOUD, 1)
    depth = _require_int(raw, "depth", DEFAULT_DEPTH, 20)
    seed = _require_int(raw, "seed", DEFAULT_SEED, 0)
    outputs = raw.get("outputs", ["csv"])
    if (not isinstance(outputs, list)
            or not all(isinstance(o, str) for o in outputs)
            or not set(outputs) <= {"csv", "json", "svg"}):
        raise ConfigError(
            f"config key 'outputs' must be a sublist of "
            f"[\"csv\", \"json\", \"svg\"], got {outputs!r}")
    return RunConfig(spec=spec, k_min=k_min, k_max=k_max,
                     cloud_size=cloud_size, depth=depth, seed=seed,
                     outputs=tuple(outputs))


@dataclass
class _Ctx:
    cfg: RunConfig
    out: Path
    cap_words: int
    threads: int
    failures: list

    def fail(self, **fields) -> None:
        self.failures.append(fields)

    def params(self) -> DerivedParams:
        return derive_params(self.cfg.spec)


def _collectable(params: DerivedParams, k: int, ctx: _Ctx):
    """Stats for level k, plus the collected partition when it fits."""
    stats = stopped_statistics(params, k)
    if stats.phi_k <= ctx.cap_words:
        return stats, enumerate_lambda_k(params, k, cap=ctx.cap_words,
                                         threads=ctx.threads)
    print(f"level k={k}: {stats.phi_k} words exceed --cap-words "
          f"{ctx.cap_words}, streaming aggregates only")
    return stats, None


def cmd_validate(ctx: _Ctx) -> None:
    report = validate_spec(ctx.cfg.spec)
    for check in report.checks:
        mark = "ok" if check.ok else "FAIL"
        detail = f"  ({check.detail})" if (check.detail and not check.ok) else ""
        print(f"validate {check.name}: {mark}{detail}")
        if not check.ok:
            ctx.fail(command="validate", check=check.name,
                     detail=check.detail)
    if report.ok:
        params = derive_params(ctx.cfg.spec)
        print(f"validate s0 = {params.s0:.12f}  theta = {params.theta:.12f}")
        if ctx.cfg.want("json"):
            write_json(ctx.out / "validate.json", {
                "checks": [{"name": c.name, "ok": c.ok} for c in report.checks],
                "s0": params.s0,
                "theta": params.theta,
                "eta": str(params.eta),
                "k0": params.k0,
            })
    elif ctx.cfg.want("json"):
        write_json(ctx.out / "validate.json", {
            "checks": [
                {"name": c.name, "ok": c.ok, "detail": c.detail}
                for c in report.checks
            ],
        })


def cmd_partition(ctx: _Ctx) -> None:
    params = ctx.params()
    header = ["k", "phi_k", "xi_min", "xi_max", "entropy_sum", "mass_len",
              "mass_exact", "phi_window", "xi_window", "ratio_bounds",
              "disjoint", "pass"]
    rows = []
    detail = []
    for k in range(ctx.cfg.k_min, ctx.cfg.k_max + 1):
        stats, part = _collectable(params, k, ctx)
        checks = partition_stats(part if part is not None else stats)
        if part is not None:
            dis = check_square_disjointness(part)
            disjoint = "true" if dis.ok else "false"
            if not dis.ok:
                ctx.fail(command="partition", k=k, check="disjointness",
                         detail=f"{dis.overlaps} overlapping interiors")
        else:
            disjoint = "skipped"
        ok = checks.ok and disjoint != "false"
        for name, flag in [
            ("mass", checks.mass_exact),
            ("phi-window", checks.phi_window_ok),
            ("xi-window", checks.xi_window_ok),
            ("ratio-bounds", checks.ratio_bounds_ok),
        ]:
            if not flag:
                ctx.fail(command="partition", k=k, check=name)
        rows.append([
            k, checks.phi_k, checks.xi_min, checks.xi_max,
            float(stats.entropy_sum), float(stats.mass_len_total),
            checks.mass_exact, checks.phi_window_ok, checks.xi_window_ok,
            checks.ratio_bounds_ok, disjoint, ok,
        ])
        detail.append({
            "k": k, "phi_k": checks.phi_k, "xi_min": checks.xi_min,
            "xi_max": checks.xi_max, "mass_total": str(stats.mass_total),
            "disjoint": disjoint, "pass": ok,
        })
        print(f"partition k={k}: phi={checks.phi_k} "
              f"xi=[{checks.xi_min},{checks.xi_max}] "
              f"{'pass' if ok else 'FAIL'}")
    if ctx.cfg.want("csv"):
        write_csv(ctx.out / "partition.csv", header, rows)
    if ctx.cfg.want("json"):
        write_json(ctx.out / "partition.json", {"levels": detail})


def cmd_antichain(ctx: _Ctx) -> None:
    params = ctx.params()
    header = ["k", "size", "base_size", "stages", "removed_mass", "delta_k",
              "c1", "comparable_pairs", "mass_exact", "delta_le_c1", "pass"]
    rows = []
    detail = []
    for k in range(ctx.cfg.k_min, ctx.cfg.k_max + 1):
        stats, part = _collectable(params, k, ctx)
        if part is None:
            continue
        chain = build_antichain(part)
        report = verify_maximal_antichain(chain)
        dlt = delta_k(chain)
        delta_ok = dlt <= params.c1 + 1e-12
        removed = sum((log.removed_mass for log in chain.stage_logs),
                      start=Fraction(0))
        ok = report.ok and delta_ok
        if not report.ok:
            ctx.fail(command="antichain", k=k, check="maximality",
                     detail=f"comparable_pairs={report.comparable_pairs} "
                            f"mass_exact={report.mass_exact} "
                            f"below_threshold={report.below_threshold}")
        if not delta_ok:
            ctx.fail(command="antichain", k=k, check="delta-bound",
                     detail=f"delta={dlt} > C1={params.c1}")
        rows.append([
            k, chain.size, chain.base_size, len(chain.stage_logs),
            float(removed), dlt, params.c1, report.comparable_pairs,
            report.mass_exact, delta_ok, ok,
        ])
        detail.append({
            "k": k, "size": chain.size, "base_size": chain.base_size,
            "xi_stages": list(chain.xi_stages),
            "removed_mass": str(removed),
            "delta_k": dlt,
            "maximal": report.ok,
            "mass": "1 (exact)" if report.mass_exact else "INEXACT",
            "stages": [
                {
                    "stage": log.stage,
                    "target_length": log.target_length,
                    "families": log.family_count,
                    "removed": log.removed_count,
                    "inserted": log.inserted_count,
                    "max_family_gap": log.max_family_gap,
                }
                for log in chain.stage_logs
            ],
        })
        print(f"antichain k={k}: maximal: "
              f"{'true' if report.ok else 'FALSE'}, mass: "
              f"{'1 (exact)' if report.mass_exact else 'INEXACT'}, "
              f"delta_k <= C1: {'true' if delta_ok else 'FALSE'}")
    if ctx.cfg.want("csv"):
        write_csv(ctx.out / "antichain.csv", header, rows)
    if ctx.cfg.want("json"):
        write_json(ctx.out / "antichain.json", {"levels": detail})


def cmd_sequences(ctx: _Ctx) -> None:
    params = ctx.params()
    header = ["k", "phi_k", "xi_min", "xi_max", "d_k", "t_k", "s_k", "s0",
              "bound_dk", "bound_sk", "pass"]
    rows = []
    for k in range(ctx.cfg.k_min, ctx.cfg.k_max + 1):
        stats, part = _collectable(params, k, ctx)
        chain = build_antichain(part) if part is not None else None
        point = sequence_point(params, k, stats=stats, antichain=chain)
        ok = point.within_bounds
        if not ok:
            ctx.fail(command="sequences", k=k, check="bounds",
                     detail=f"d_k={point.d_k} s_k={point.s_k} s0={point.s0}")
        rows.append([
            point.k, point.phi_k, point.xi_min, point.xi_max, point.d_k,
            point.t_k, point.s_k, point.s0, point.bound_dk, point.bound_sk,
            ok,
        ])
        t_txt = "" if point.t_k is None else f" t_k={point.t_k:.9f}"
        print(f"sequences k={k}: d_k={point.d_k:.9f}{t_txt} "
              f"s_k={point.s_k:.9f} s0={point.s0:.9f} "
              f"{'pass' if ok else 'FAIL'}")
    if ctx.cfg.want("csv"):
        write_csv(ctx.out / "sequences.csv", header, rows)
    if ctx.cfg.want("json"):
        write_json(ctx.out / "sequences.json", {
            "levels": [dict(zip(header, row)) for row in rows],
        })


def cmd_quantize(ctx: _Ctx) -> None:
    params = ctx.params()
    cloud = draw_cloud(params, ctx.cfg.cloud_size, depth=ctx.cfg.depth,
                       seed=ctx.cfg.seed, threads=ctx.threads)
    header = ["k", "phi_k", "lower_anchor", "upper_anchor", "e_hat_est",
              "stderr", "R_k"]
    rows = []
    detail = []
    gap_cap = math.log(math.sqrt(params.spec.n ** 2 + 1))
    for k in range(ctx.cfg.k_min, ctx.cfg.k_max + 1):
        stats, part = _collectable(params, k, ctx)
        if part is None:
            continue
        diag = r_k_diagnostic(part, cloud, workers=ctx.threads)
        if diag.e_hat_est > diag.upper_anchor + 3 * diag.stderr:
            ctx.fail(command="quantize", k=k, check="upper-anchor",
                     detail=f"estimate {diag.e_hat_est} above "
                            f"{diag.upper_anchor} + 3 stderr")
        if not (diag.lower_anchor <= diag.upper_anchor
                <= diag.lower_anchor + gap_cap + 1e-12):
            ctx.fail(command="quantize", k=k, check="anchor-gap",
                     detail=f"gap {diag.anchor_gap} outside [0, {gap_cap}]")
        rows.append([
            diag.k, diag.phi_k, diag.lower_anchor, diag.upper_anchor,
            diag.e_hat_est, diag.stderr, diag.r_k,
        ])
        detail.append({
            "k": diag.k, "phi_k": diag.phi_k, "R_k": diag.r_k,
            "floored": diag.floored, "cloud_size": diag.cloud_size,
            "seed": diag.seed,
        })
        print(f"quantize k={k}: e_hat={diag.e_hat_est:.6f} anchors "
              f"[{diag.lower_anchor:.6f}, {diag.upper_anchor:.6f}] "
              f"R_k={diag.r_k:.6f}")
    radii = tuple(float(params.spec.m) ** (-e) for e in range(2, 9))
    ball = ball_bound_check(
        params, cloud, centers=min(100, cloud.size), radii=radii,
        workers=ctx.threads)
    if ball.skipped:
        print(f"quantize ball bound: skipped ({ball.reason})")
    else:
        print(f"quantize ball bound: {'pass' if ball.ok else 'FAIL'} "
              f"(max ratio {ball.max_ratio:.4f})")
        if not ball.ok:
            ctx.fail(command="quantize", check="ball-bound",
                     detail=f"{len(ball.failures)} center/radius pairs "
                            f"exceed the mass bound")
    if ctx.cfg.want("csv"):
        write_csv(ctx.out / "quantize.csv", header, rows)
    if ctx.cfg.want("json"):
        write_json(ctx.out / "quantize.json", {
            "levels": detail,
            "ball": {
                "skipped": ball.skipped,
                "reason": ball.reason,
                "exponent": ball.exponent,
                "coefficient": ball.coefficient,
                "max_ratio": ball.max_ratio,
                "failures": len(ball.failures),
            },
        })


def cmd_report(ctx: _Ctx) -> None:
    seq_path = ctx.out / "sequences.csv"
    qnt_path = ctx.out / "quantize.csv"
    if not seq_path.exists() and not qnt_path.exists():
        raise ConfigError(
            f"nothing to report: no sequences.csv or quantize.csv under "
            f"{ctx.out}; run the sequences or quantize command first")
    made = []
    if seq_path.exists():
        header, rows = read_csv(seq_path)
        col = {name: pos for pos, name in enumerate(header)}
        ks = [float(r[col["k"]]) for r in rows]
        series = {}
        series["d_k"] = [(x, float(r[col["d_k"]])) for x, r in zip(ks, rows)]
        t_pts = [(x, float(r[col["t_k"]])) for x, r in zip(ks, rows)
                 if r[col["t_k"]]]
        if t_pts:
            series["t_k"] = t_pts
        series["s_k"] = [(x, float(r[col["s_k"]])) for x, r in zip(ks, rows)]
        s0 = float(rows[0][col["s0"]])
        svg = render_line_chart(
            series, title="Entropy ratio sequences", x_label="k",
            y_label="ratio", hline=("s0", s0))
        write_text(ctx.out / "sequences.svg", svg)
        made.append("sequences.svg")
    if qnt_path.exists():
        header, rows = read_csv(qnt_path)
        col = {name: pos for pos, name in enumerate(header)}
        pts = [(float(r[col["k"]]), float(r[col["R_k"]])) for r in rows]
        svg = render_line_chart(
            {"R_k": pts}, title="Normalized quantization error",
            x_label="k", y_label="R_k")
        write_text(ctx.out / "quantize.svg", svg)
        made.append("quantize.svg")
    print(f"report: wrote {', '.join(made)} under {ctx.out}")


_COMMANDS = {
    "validate": cmd_validate,
    "partition": cmd_partition,
    "antichain": cmd_antichain,
    "sequences": cmd_sequences,
    "quantize": cmd_quantize,
    "report": cmd_report,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carpetq",
        description="partition, antichain, entropy, and quantization "
                    "diagnostics for grid self-affine measures",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("validate", "check a carpet description and print derived constants"),
        ("partition", "tabulate stopping partitions with exact invariants"),
        ("antichain", "build and certify maximal antichains"),
        ("sequences", "emit d_k / t_k / s_k tables with error bounds"),
        ("quantize", "Monte Carlo quantization diagnostics"),
        ("report", "render SVG charts from previously written tables"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True,
                       help="path to the JSON run config")
        p.add_argument("--out", default="carpetq-out",
                       help="output directory (created if missing)")
        p.add_argument("--cap-words", type=int, default=DEFAULT_CAP,
                       help="skip word-materializing steps above this count")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for enumeration and queries")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 2
    if args.cap_words < 1 or args.threads < 1:
        print(json.dumps({"error": "--cap-words and --threads must be >= 1"}),
              file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ctx = _Ctx(cfg=cfg, out=out, cap_words=args.cap_words,
               threads=args.threads, failures=[])
    try:
        _COMMANDS[args.command](ctx)
    except ConfigError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 2
    except InvalidSpecError as exc:
        print(json.dumps({"error": f"invalid carpet: {exc}"}), file=sys.stderr)
        return 2
    if ctx.failures:
        print(json.dumps({"failures": ctx.failures}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
