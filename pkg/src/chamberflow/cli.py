"""chamberflow command-line interface.

One executable, one subcommand per module; deterministic seeded runs;
JSON reports with a config hash and a timestamp kept outside the hash.
Exit codes: 0 success, 1 failed identity/check, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import verify as verify_mod
from .errors import ChamberflowError
from .linalg_core import (
    AMElement,
    Config,
    GroupElement,
    bruhat_lu,
    cartan_kak,
    iwasawa_kan,
    iwasawa_kan_minus,
    jordan_projection,
)
from .flag_boundary import Flag, cell_margin, flag_distance, is_transverse, minor_margin
from .sections_cocycles import Section, cocycle, compact_section
from .loxodromy import classify, delta_r_eps
from .schottky_dynamics import (
    SchottkyFamily,
    build_schottky,
    chamber_coords,
    cone_interior,
    decorrelation_discret_check,
    jordan_line_density_probe,
    limit_cone,
    sign_group,
)
from .torus_density import (
    TorusPoint,
    select_dense_subgroup_generators,
    semigroup_cone_density,
)
from .linalg_core import CartanVector
from .reportio import (
    cone_csv,
    cone_svg,
    config_hash,
    flag_to_json,
    matrix_from_json,
    matrix_to_json,
    to_json,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


@dataclass
class RunConfig:
    n: int = 3
    seed: int = 42
    tolerances: Config = field(default_factory=Config)
    max_words: int = 200_000
    max_power: int = 8
    mc_samples: int = 1000
    output: str | None = None

    def as_dict(self) -> dict:
        d = {
            "n": self.n,
            "seed": self.seed,
            "tolerances": asdict(self.tolerances),
            "budgets": {
                "max_words": self.max_words,
                "max_power": self.max_power,
                "mc_samples": self.mc_samples,
            },
        }
        return d


def _load_run_config(args) -> RunConfig:
    """Precedence: defaults < command-line flags < config file < env seed."""
    cfg = RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "config", None):
        with open(args.config) as fh:
            raw = json.load(fh)
        cfg.n = int(raw.get("n", cfg.n))
        cfg.seed = int(raw.get("seed", cfg.seed))
        tols = raw.get("tolerances", {})
        cfg.tolerances = Config(**{**asdict(Config()), **tols})
        budgets = raw.get("budgets", {})
        cfg.max_words = int(budgets.get("max_words", cfg.max_words))
        cfg.max_power = int(budgets.get("max_power", cfg.max_power))
        cfg.mc_samples = int(budgets.get("mc_samples", cfg.mc_samples))
    env_seed = os.environ.get("CHAMBERFLOW_SEED")
    if env_seed is not None:
        cfg.seed = int(env_seed)
    return cfg


def _read_matrix(path: str) -> GroupElement:
    with open(path) as fh:
        return GroupElement(matrix_from_json(json.load(fh)))


def _read_flag(path: str) -> Flag:
    with open(path) as fh:
        obj = json.load(fh)
    return Flag(matrix_from_json(obj["rep"]))


def _emit(report: dict, args) -> None:
    text = to_json(report)
    out = getattr(args, "output", None)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def cmd_decompose(args) -> int:
    g = _read_matrix(args.matrix)
    kind = args.kind
    if kind == "kan":
        t = iwasawa_kan(g)
        report = {"k": matrix_to_json(t.k), "a": list(t.a.coords), "u": matrix_to_json(t.u)}
    elif kind == "kan-minus":
        t = iwasawa_kan_minus(g)
        report = {"k": matrix_to_json(t.k), "a": list(t.a.coords), "u": matrix_to_json(t.u)}
    elif kind == "cartan":
        k1, a, k2 = cartan_kak(g)
        report = {"k1": matrix_to_json(k1), "a": list(a.coords), "k2": matrix_to_json(k2)}
    elif kind == "bruhat":
        lower, x, upper = bruhat_lu(g)
        report = {
            "u_minus": matrix_to_json(lower),
            "a": list(x.a.coords),
            "m": list(x.m.signs),
            "u_plus": matrix_to_json(upper),
        }
    else:  # jordan
        report = {"lambda": list(jordan_projection(g).coords)}
    _emit(report, args)
    return EXIT_OK


def cmd_transverse(args) -> int:
    a = _read_flag(args.flag_a)
    b = _read_flag(args.flag_b)
    transverse = is_transverse(a, b)
    report = {
        "transverse": transverse,
        "margin": cell_margin(a, b) if transverse else 0.0,
        "minor_margin": minor_margin(a, b),
    }
    _emit(report, args)
    return EXIT_OK if transverse else EXIT_FAILED


def cmd_cocycle(args) -> int:
    s1 = compact_section(_read_flag(args.s1))
    s0 = compact_section(_read_flag(args.s0))
    g = _read_matrix(args.g)
    xi = _read_flag(args.xi)
    beta = cocycle(s1, s0, g, xi)
    _emit({"a": list(beta.a.coords), "m": list(beta.m.signs)}, args)
    return EXIT_OK


def cmd_lox(args) -> int:
    g = _read_matrix(args.matrix)
    L = classify(g)
    report = {
        "lambda": list(L.lam.coords),
        "attracting": flag_to_json(L.attracting),
        "repelling": flag_to_json(L.repelling),
        "gap": L.gap,
    }
    _emit(report, args)
    return EXIT_OK


def _load_family(args, cfg: RunConfig) -> SchottkyFamily:
    with open(args.family) as fh:
        raw = json.load(fh)
    seeds = [matrix_from_json(m) for m in raw["seeds"]]
    r = float(raw.get("r", 0.2))
    eps = float(raw.get("eps", min(r, 0.05)))
    return build_schottky(seeds, r, eps, max_power=cfg.max_power, config=cfg.tolerances)


def cmd_schottky_build(args) -> int:
    cfg = _load_run_config(args)
    fam = _load_family(args, cfg)
    report = {
        "config_hash": config_hash(cfg.as_dict()),
        "generators": len(fam.generators),
        "r": fam.r,
        "eps": fam.eps,
        "pairwise_margins": [list(row) for row in fam.pairwise_margins],
        "lambdas": [list(L.lam.coords) for L in fam.generators],
    }
    _emit(report, args)
    return EXIT_OK


def cmd_limit_cone(args) -> int:
    cfg = _load_run_config(args)
    fam = _load_family(args, cfg)
    cone = limit_cone(fam, args.max_len, cap=cfg.max_words, config=cfg.tolerances)
    rows = []
    for i, ray in enumerate(cone.rays):
        planar = chamber_coords(ray.coords)
        dir_x = float(planar[0])
        dir_y = float(planar[1]) if planar.shape[0] > 1 else 0.0
        rows.append(
            {
                "word_id": i,
                "length": cone.word_length,
                "lambda": list(ray.coords),
                "dir_x": dir_x,
                "dir_y": dir_y,
            }
        )
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(cone_csv(rows))
    if args.svg:
        n = fam.generators[0].g.n
        if n == 3:
            points = [(r["dir_x"], r["dir_y"]) for r in rows]
            hull_planar = [chamber_coords(h.coords) for h in cone.hull]
            with open(args.svg, "w") as fh:
                fh.write(cone_svg(points, hull_planar))
        else:
            sys.stderr.write("svg output requires n = 3; skipped\n")
    report = {
        "config_hash": config_hash(cfg.as_dict()),
        "rays": len(cone.rays),
        "hull": [list(h.coords) for h in cone.hull],
    }
    _emit(report, args)
    return EXIT_OK


def cmd_sign_group(args) -> int:
    cfg = _load_run_config(args)
    fam = _load_family(args, cfg)
    report_sg = sign_group(fam, args.max_len, cap=cfg.max_words, config=cfg.tolerances)
    report = {
        "config_hash": config_hash(cfg.as_dict()),
        "p": report_sg.p,
        "order": report_sg.order,
        "basis": [list(b.signs) for b in report_sg.basis],
        "witnesses": [
            {"word": list(word), "signs": list(m.signs)} for word, m in report_sg.witnesses
        ],
    }
    _emit(report, args)
    return EXIT_OK


def cmd_decor_check(args) -> int:
    cfg = _load_run_config(args)
    fam = _load_family(args, cfg)
    report_sg = sign_group(fam, args.max_len, cap=cfg.max_words, config=cfg.tolerances)
    table = decorrelation_discret_check(fam, report_sg, args.n_exp, config=cfg.tolerances)
    all_pass = all(match for _, _, match in table.values())
    report = {
        "config_hash": config_hash(cfg.as_dict()),
        "p": report_sg.p,
        "components": {
            "".join(map(str, nu)): {
                "attained": list(attained),
                "expected": list(expected),
                "match": match,
            }
            for nu, (attained, expected, match) in table.items()
        },
        "passed": all_pass,
    }
    _emit(report, args)
    return EXIT_OK if all_pass else EXIT_FAILED


def cmd_mix_probe(args) -> int:
    cfg = _load_run_config(args)
    fam = _load_family(args, cfg)
    theta = CartanVector(np.asarray([float(x) for x in args.theta.split(",")]))
    window = tuple(float(x) for x in args.window.split(","))
    stats = jordan_line_density_probe(
        fam, theta, window, args.max_len, delta0=args.delta0,
        cap=cfg.max_words, config=cfg.tolerances,
    )
    stats = {"config_hash": config_hash(cfg.as_dict()), **stats}
    _emit(stats, args)
    return EXIT_OK


def _read_points(path: str) -> list:
    with open(path) as fh:
        raw = json.load(fh)
    return [TorusPoint(np.asarray(p["v"], dtype=float), np.asarray(p.get("c", []), dtype=float)) for p in raw["points"]]


def cmd_density(args) -> int:
    points = _read_points(args.input)
    window = [tuple(float(x) for x in pair.split(",")) for pair in args.window.split(";")]
    if args.variant == "select":
        cert = select_dense_subgroup_generators(points, args.delta, window)
        report = {
            "covered": cert.covered,
            "subset_size": len(cert.subset),
            "delta": cert.delta,
            "grid_step": cert.grid_step,
        }
        _emit(report, args)
        return EXIT_OK if cert.covered else EXIT_FAILED
    v_f, cert = semigroup_cone_density(points, args.delta, window)
    report = {
        "covered": cert.covered,
        "v_F": list(np.atleast_1d(v_f)),
        "delta": cert.delta,
        "grid_step": cert.grid_step,
    }
    _emit(report, args)
    return EXIT_OK if cert.covered else EXIT_FAILED


def cmd_verify(args) -> int:
    cfg = _load_run_config(args)
    rows = verify_mod.run_all(cfg.seed, n=cfg.n, config=cfg.tolerances)
    all_pass = all(r["passed"] for r in rows)
    report = {
        "config": cfg.as_dict(),
        "config_hash": config_hash(cfg.as_dict()),
        "identities": rows,
        "passed": all_pass,
    }
    text = to_json(report)
    stamp = {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())}
    out = getattr(args, "output", None)
    payload = text + "\n" + to_json(stamp) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return EXIT_OK if all_pass else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    # the global options are accepted both before and after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--config", default=None)
    common.add_argument("--output", default=None)
    parser = argparse.ArgumentParser(prog="chamberflow", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(container, name, **kwargs):
        return container.add_parser(name, parents=[common], **kwargs)

    p = add_parser(sub, "decompose", help="matrix decompositions")
    p.add_argument("matrix")
    p.add_argument("--kind", choices=["kan", "kan-minus", "cartan", "bruhat", "jordan"], default="kan")
    p.set_defaults(func=cmd_decompose)

    p = add_parser(sub, "transverse", help="flag transversality report")
    p.add_argument("flag_a")
    p.add_argument("flag_b")
    p.set_defaults(func=cmd_transverse)

    p = add_parser(sub, "cocycle", help="signed AM cocycle")
    p.add_argument("--s1", required=True)
    p.add_argument("--s0", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--xi", required=True)
    p.set_defaults(func=cmd_cocycle)

    p = add_parser(sub, "lox", help="loxodromic classification")
    p.add_argument("matrix")
    p.set_defaults(func=cmd_lox)

    schottky = add_parser(sub, "schottky", help="Schottky family operations")
    ssub = schottky.add_subparsers(dest="subcommand", required=True)
    for name, func, extra in [
        ("build", cmd_schottky_build, []),
        ("limit-cone", cmd_limit_cone, ["max_len", "csv", "svg"]),
        ("sign-group", cmd_sign_group, ["max_len"]),
        ("decor-check", cmd_decor_check, ["max_len", "n_exp"]),
        ("mix-probe", cmd_mix_probe, ["max_len", "theta", "window", "delta0"]),
    ]:
        sp = add_parser(ssub, name)
        sp.add_argument("family")
        if "max_len" in extra:
            sp.add_argument("--max-len", dest="max_len", type=int, default=4)
        if "csv" in extra:
            sp.add_argument("--csv", default=None)
            sp.add_argument("--svg", default=None)
        if "n_exp" in extra:
            sp.add_argument("--n-exp", dest="n_exp", type=int, default=2)
        if "theta" in extra:
            sp.add_argument("--theta", required=True)
            sp.add_argument("--window", default="1,10")
            sp.add_argument("--delta0", type=float, default=0.2)
        sp.set_defaults(func=func)

    # top-level aliases for the schottky subcommands
    for name, func, extra in [
        ("limit-cone", cmd_limit_cone, ["max_len", "csv", "svg"]),
        ("sign-group", cmd_sign_group, ["max_len"]),
        ("decor-check", cmd_decor_check, ["max_len", "n_exp"]),
        ("mix-probe", cmd_mix_probe, ["max_len", "theta", "window", "delta0"]),
    ]:
        sp = add_parser(sub, name)
        sp.add_argument("family")
        if "max_len" in extra:
            sp.add_argument("--max-len", dest="max_len", type=int, default=4)
        if "csv" in extra:
            sp.add_argument("--csv", default=None)
            sp.add_argument("--svg", default=None)
        if "n_exp" in extra:
            sp.add_argument("--n-exp", dest="n_exp", type=int, default=2)
        if "theta" in extra:
            sp.add_argument("--theta", required=True)
            sp.add_argument("--window", default="1,10")
            sp.add_argument("--delta0", type=float, default=0.2)
        sp.set_defaults(func=func)

    p = add_parser(sub, "density", help="toral density certificates")
    p.add_argument("variant", choices=["select", "cone"])
    p.add_argument("--input", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--window", default="-1,1")
    p.set_defaults(func=cmd_density)

    p = add_parser(sub, "verify", help="run every identity suite")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError, ValueError, KeyError) as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG
    except ChamberflowError as exc:
        sys.stderr.write(f"check failed: {exc}\n")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
