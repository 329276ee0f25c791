"""Configuration-driven experiment driver.

Subcommands: format, bound, verify-chain, zeros, betti, rankdrop.  Each
loads a JSON config (--config), overlays a few CLI flags, validates the
result against the published schema, runs the pipeline, and emits a CSV
report plus (with --out) a JSON sidecar holding the fully resolved config,
library version, and timestamp.  Reports are deterministic for a fixed
config and seed, timestamp aside.

Exit codes: 0 success/conformant, 1 nonconformant measurement, 2 usage or
schema error, 3 numerical-domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

import jsonschema
import numpy as np

from . import __version__
from .activations import custom_from_declaration, get_activation, register_activation
from .bounds import betti_bound, rankdrop_bound, zero_bound
from .chain import certificates_to_json, compute_format, derive_certificates, verify_chain
from .config_schema import SCHEMAS, fill_defaults
from .errors import BudgetError, ConfigError, DomainError, PfaffnetError, ShapeError
from .liegeom import (
    VectorFieldFamily,
    family_from_json,
    grushin_family,
    heisenberg_family,
    locus_sample,
    sampled_network_family,
)
from .network import forward_batch, sample_network
from .topology import (
    ZeroSearchOptions,
    betti_z2,
    components,
    count_zeros_1d,
    scalar_fixture,
    sign_grid,
    signgrid_to_rle,
)

EXIT_OK = 0
EXIT_NONCONFORMANT = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pfaffnet", description="architecture-only topology bounds and measurements"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("format", "bound", "verify-chain", "zeros", "betti", "rankdrop"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="single seed override")
        p.add_argument("--seeds", help="seed range START..STOP (half-open)")
        p.add_argument("--out", help="CSV output path (sidecar JSON written next to it)")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        p.add_argument("--mode", choices=["hall", "all-trees"])
        p.add_argument("--resolution", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--epsilon", help="minor threshold: a float or 'auto'")
    return parser


def _load_config(args) -> dict:
    config: dict = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config!r}: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    if args.seeds is not None:
        try:
            start, stop = args.seeds.split("..")
            config["seeds"] = [int(start), int(stop)]
        except ValueError as exc:
            raise ConfigError("--seeds expects START..STOP") from exc
    elif args.seed is not None:
        if args.command in ("verify-chain", "zeros"):
            config["seeds"] = [args.seed, args.seed + 1]
        elif args.command == "betti":
            config.setdefault("net", {})["seed"] = args.seed
        elif args.command == "rankdrop":
            config.setdefault("family", {})["seed"] = args.seed
    if args.mode is not None:
        config["mode"] = args.mode.replace("-", "_")
    if args.resolution is not None:
        config["resolution"] = args.resolution
    if args.tol is not None:
        config["tol"] = args.tol
    if args.epsilon is not None:
        config["epsilon"] = args.epsilon if args.epsilon == "auto" else float(args.epsilon)
    return config


def _validate(command: str, config: dict) -> dict:
    schema = SCHEMAS[command]
    try:
        jsonschema.validate(config, schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config rejected by schema at {path}: {exc.message}") from exc
    resolved = fill_defaults(config, schema)
    for decl in resolved.get("custom_activations", []):
        try:
            register_activation(custom_from_declaration(decl), overwrite=True)
        except ValueError as exc:
            raise ConfigError(f"bad custom activation: {exc}") from exc
    return resolved


def _rows_to_csv(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(col)) for col in columns])
    return buf.getvalue()


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    return str(value)


def _emit(command: str, config: dict, columns: list[str], rows: list[dict], args, extra_files=None):
    text = _rows_to_csv(columns, rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        sidecar = {
            "command": command,
            "config": config,
            "version": __version__,
            "columns": columns,
            "row_count": len(rows),
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        with open(args.out + ".meta.json", "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")
        for path, content in (extra_files or {}).items():
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(content)
    else:
        sys.stdout.write(text)


def _seed_range(config: dict) -> range:
    start, stop = config["seeds"]
    if stop <= start:
        raise ConfigError("seed range is empty")
    return range(start, stop)


def _parallel_map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# -- subcommands ------------------------------------------------------------------


def cmd_format(config: dict, args) -> int:
    arch = config["arch"]
    act = get_activation(config["activation"])
    fmt = compute_format(arch["d"], arch["L"], arch["widths"], act.r)
    rows = [
        {
            "d": fmt.d,
            "L": arch["L"],
            "widths": arch["widths"],
            "activation": act.name,
            "riccati_index": act.r,
            "R": fmt.R,
            "alpha": fmt.alpha,
            "beta": fmt.beta,
        }
    ]
    columns = ["d", "L", "widths", "activation", "riccati_index", "R", "alpha", "beta"]
    _emit("format", config, columns, rows, args)
    return EXIT_OK


def _bound_row(spec: dict, C) -> dict:
    formula = spec["formula"]
    if formula == "zeros":
        if "R" in spec:
            R, L = int(spec["R"]), int(spec["L"])
        else:
            arch = spec["arch"]
            act = get_activation(spec.get("activation", "tanh"))
            R = compute_format(arch["d"], arch["L"], arch["widths"], act.r).R
            L = arch["L"]
        bound = zero_bound(R, L, C)
    elif formula == "betti":
        if "R" in spec:
            d, R, L = int(spec["d"]), int(spec["R"]), int(spec["L"])
        else:
            arch = spec["arch"]
            act = get_activation(spec.get("activation", "tanh"))
            d = arch["d"]
            R = compute_format(arch["d"], arch["L"], arch["widths"], act.r).R
            L = arch["L"]
        bound = betti_bound(d, R, L, C)
    elif formula == "rankdrop":
        arch = spec["arch"]
        act = get_activation(spec.get("activation", "tanh"))
        bound = rankdrop_bound(
            int(spec["d"]),
            int(spec["m"]),
            int(spec["k"]),
            int(spec["rho"]),
            arch["L"],
            arch["widths"],
            act.r,
            C,
            spec.get("mode", "hall"),
        )
    else:
        raise ConfigError(f"unknown formula {formula!r}")
    return {
        "formula": bound.formula,
        "inputs": bound.inputs,
        "value": bound.decimal(),
        "log10": bound.log10,
        "constant_tag": bound.constant_tag,
    }


def cmd_bound(config: dict, args) -> int:
    C = config["C"]
    rows = [_bound_row(spec, C) for spec in config["rows"]]
    columns = ["formula", "inputs", "value", "log10", "constant_tag"]
    _emit("bound", config, columns, rows, args)
    return EXIT_OK


def cmd_verify_chain(config: dict, args) -> int:
    arch = config["arch"]
    act = get_activation(config["activation"])
    tol = config["tol"]
    rng_box = config["box"] or [[-1.0, 1.0]] * arch["d"]
    if len(rng_box) != arch["d"]:
        raise ConfigError("box must list one interval per input coordinate")
    selftest = config["selftest"]

    def run(seed: int) -> dict:
        net = sample_network(
            arch["d"], arch["L"], arch["widths"], act, seed=seed, scale=config["scale"]
        )
        certs = derive_certificates(net)
        if selftest:
            (i, p), poly = sorted(certs.items())[0]
            bumped = poly + 0.1
            certs = dict(certs)
            certs[(i, p)] = bumped
        rng = np.random.default_rng(seed + 10_000)
        pts = np.stack(
            [
                rng.uniform(lo, hi, size=config["points"])
                for lo, hi in rng_box
            ],
            axis=1,
        )
        report = verify_chain(net, certs, pts, tol=tol)
        return {
            "seed": seed,
            "d": arch["d"],
            "L": arch["L"],
            "widths": arch["widths"],
            "activation": act.name,
            "points": config["points"],
            "max_residual": report.max_residual,
            "worst_entry": report.worst_entry,
            "worst_coordinate": report.worst_coordinate,
            "ok": report.ok,
        }

    rows = _parallel_map(run, list(_seed_range(config)), args.threads)
    rows.sort(key=lambda r: r["seed"])
    columns = [
        "seed", "d", "L", "widths", "activation", "points",
        "max_residual", "worst_entry", "worst_coordinate", "ok",
    ]
    extra = None
    if config["dump_certificates"] and args.out:
        net = sample_network(
            arch["d"], arch["L"], arch["widths"], act,
            seed=config["seeds"][0], scale=config["scale"],
        )
        extra = {
            args.out + ".certs.json": json.dumps(
                certificates_to_json(net), indent=2, sort_keys=True
            )
            + "\n"
        }
    _emit("verify-chain", config, columns, rows, args, extra_files=extra)
    # In selftest mode the corrupted certificate must push the residual over
    # tol, so a healthy detector exits nonzero here.
    all_ok = all(r["ok"] for r in rows)
    return EXIT_OK if all_ok else EXIT_NONCONFORMANT


def cmd_zeros(config: dict, args) -> int:
    arch = config["arch"]
    if arch["d"] != 1:
        raise ConfigError("zero counting requires d = 1")
    act = get_activation(config["activation"])
    lo, hi = config["interval"]
    fmt = compute_format(1, arch["L"], arch["widths"], act.r)
    bound = zero_bound(fmt.R, arch["L"], config["C"])
    opts = ZeroSearchOptions(
        initial_samples=config["initial_samples"], refine_tol=config["refine_tol"]
    )

    def run(seed: int) -> dict:
        net = sample_network(
            1, arch["L"], arch["widths"], act, seed=seed, scale=config["scale"]
        )
        zc = count_zeros_1d(lambda t: forward_batch(net, t[:, None]), (lo, hi), opts)
        conformant = math.log10(zc.count + 1) <= bound.log10
        return {
            "seed": seed,
            "count": zc.count,
            "tangential": len(zc.tangential),
            "identically_zero": zc.identically_zero,
            "bound_log10": bound.log10,
            "constant_tag": bound.constant_tag,
            "conformant": conformant,
        }

    rows = _parallel_map(run, list(_seed_range(config)), args.threads)
    rows.sort(key=lambda r: r["seed"])
    columns = [
        "seed", "count", "tangential", "identically_zero",
        "bound_log10", "constant_tag", "conformant",
    ]
    _emit("zeros", config, columns, rows, args)
    return EXIT_OK if all(r["conformant"] for r in rows) else EXIT_NONCONFORMANT


def cmd_betti(config: dict, args) -> int:
    if ("fixture" in config) == ("net" in config):
        raise ConfigError("betti config needs exactly one of 'fixture' or 'net'")
    resolution = config["resolution"]
    box = [tuple(b) for b in config["box"]]
    tau = config["tau"]
    if "fixture" in config:
        experiment = config["fixture"]
        f = scalar_fixture(config["fixture"])
        bound_log10 = None
        tag = ""
    else:
        net_cfg = config["net"]
        arch = net_cfg["arch"]
        act = get_activation(net_cfg["activation"])
        net = sample_network(
            arch["d"], arch["L"], arch["widths"], act,
            seed=net_cfg["seed"], scale=net_cfg["scale"],
        )
        if len(box) != arch["d"]:
            raise ConfigError("box must list one interval per input coordinate")
        experiment = f"net-seed{net_cfg['seed']}"
        f = lambda X: forward_batch(net, X)
        fmt = compute_format(arch["d"], arch["L"], arch["widths"], act.r)
        bound = betti_bound(arch["d"], fmt.R, arch["L"], config["C"])
        bound_log10 = bound.log10
        tag = bound.constant_tag
    grid = sign_grid(f, box, resolution, tau)
    betti = betti_z2(grid)
    b0_union_find = components(grid)
    stable = None
    if config["stability"]:
        doubled = betti_z2(sign_grid(f, box, 2 * resolution, tau))
        stable = doubled.b == betti.b
    conformant = True
    if bound_log10 is not None:
        conformant = math.log10(max(betti.total, 1)) <= bound_log10
    row = {
        "experiment": experiment,
        "resolution": resolution,
        **{f"b{i}": v for i, v in enumerate(betti.b)},
        "total": betti.total,
        "b0_union_find": b0_union_find,
        "stable": stable,
        "bound_log10": bound_log10,
        "constant_tag": tag,
        "conformant": conformant,
    }
    columns = ["experiment", "resolution"] + [f"b{i}" for i in range(len(betti.b))] + [
        "total", "b0_union_find", "stable", "bound_log10", "constant_tag", "conformant",
    ]
    _emit("betti", config, columns, [row], args)
    if betti.b[0] != b0_union_find:
        return EXIT_NONCONFORMANT
    return EXIT_OK if conformant else EXIT_NONCONFORMANT


def _family_from_config(cfg: dict) -> VectorFieldFamily:
    if "fixture" in cfg:
        if cfg["fixture"] == "grushin":
            return grushin_family()
        if cfg["fixture"] == "heisenberg":
            return heisenberg_family()
        raise ConfigError(f"unknown fixture {cfg['fixture']!r}")
    if "file" in cfg:
        with open(cfg["file"], "r", encoding="utf-8") as fh:
            family, _ = family_from_json(json.load(fh))
        return family
    needed = {"d", "m", "arch"}
    if not needed <= set(cfg):
        raise ConfigError("family needs a fixture, a file, or (d, m, arch, ...)")
    arch = cfg["arch"]
    return sampled_network_family(
        cfg["d"],
        cfg["m"],
        arch["L"],
        arch["widths"],
        get_activation(cfg.get("activation", "tanh")),
        seed=cfg.get("seed", 0),
        scale=cfg.get("scale", 1.0),
    )


def cmd_rankdrop(config: dict, args) -> int:
    family = _family_from_config(config["family"])
    rho = config["rho"]
    if "k_range" in config:
        k_values = list(range(config["k_range"][0], config["k_range"][1]))
    else:
        k_values = [config.get("k", 1)]
    if not k_values:
        raise ConfigError("empty bracket-depth range")
    box = [tuple(b) for b in config.get("box") or [(-1.0, 1.0)] * family.d]
    if len(box) != family.d:
        raise ConfigError("box must list one interval per ambient coordinate")
    resolution = config["resolution"]
    mode = config["mode"]
    rows = []
    grids = {}
    # One epsilon shared across depths keeps the sampled nesting exact; the
    # auto value is calibrated at the deepest k, where the minor set is
    # largest, then reused verbatim for the shallower depths.
    shared_epsilon = config["epsilon"]
    if shared_epsilon == "auto" and config["criterion"] == "minor" and len(k_values) > 1:
        probe = locus_sample(
            family, max(k_values), rho, box, resolution,
            criterion="minor", epsilon="auto", tol=config["tol"], mode=mode,
        )
        shared_epsilon = probe.threshold
    for k in k_values:
        sample = locus_sample(
            family, k, rho, box, resolution,
            criterion=config["criterion"],
            epsilon=shared_epsilon, tol=config["tol"], mode=mode,
        )
        grids[k] = sample
        betti = betti_z2(sample.grid) if config["betti"] else None
        bound = None
        if family.kind == "network":
            net = family.components[0][0]
            bound = rankdrop_bound(
                family.d, family.m, k, rho, net.L, net.widths,
                net.activation.r, config["C"], mode,
            )
        row = {
            "k": k,
            "rho": rho,
            "criterion": sample.criterion,
            "threshold": sample.threshold,
            "mode": mode,
            "columns": sample.n_columns,
            "cells_in": sample.grid.flagged_count(),
            "cells_margin": int(np.count_nonzero(sample.margin)),
            "betti": list(betti.b) if betti else None,
            "bound_log10": bound.log10 if bound else None,
            "derived_constants": bound.inputs["derived_constants"] if bound else None,
            "constant_tag": bound.constant_tag if bound else "",
        }
        rows.append(row)
    nesting = "n/a"
    if len(k_values) > 1:
        ok = all(
            bool(np.all(grids[k2].grid.flags <= grids[k1].grid.flags))
            for k1, k2 in zip(k_values[:-1], k_values[1:])
        )
        nesting = "pass" if ok else "fail"
    for row in rows:
        row["nesting"] = nesting
    columns = [
        "k", "rho", "criterion", "threshold", "mode", "columns",
        "cells_in", "cells_margin", "betti", "bound_log10",
        "derived_constants", "constant_tag", "nesting",
    ]
    extra = {}
    if args.out:
        for k, sample in grids.items():
            extra[f"{args.out}.k{k}.rle.csv"] = signgrid_to_rle(
                sample.grid,
                {
                    "criterion": sample.criterion,
                    "threshold": sample.threshold,
                    "k": k,
                    "rho": rho,
                    "mode": mode,
                },
            )
    _emit("rankdrop", config, columns, rows, args, extra_files=extra)
    return EXIT_OK if nesting in ("pass", "n/a") else EXIT_NONCONFORMANT


HANDLERS = {
    "format": ("format", cmd_format),
    "bound": ("bound", cmd_bound),
    "verify-chain": ("verify-chain", cmd_verify_chain),
    "zeros": ("zeros", cmd_zeros),
    "betti": ("betti", cmd_betti),
    "rankdrop": ("rankdrop", cmd_rankdrop),
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    name, handler = HANDLERS[args.command]
    try:
        config = _validate(name, _load_config(args))
        return handler(config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"numerical domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ShapeError, BudgetError, PfaffnetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
