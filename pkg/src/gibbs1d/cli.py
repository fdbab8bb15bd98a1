"""Command-line experiment driver.

Every output starts from the resolved configuration (seed included): CSV
files carry it as a leading ``#`` JSON line, JSON reports under
``"config"``.  Exit codes: 0 success, 2 input error, 3 model-condition
violation, 4 enumeration cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .coupling import (
    aux_chain_p0_sequence,
    lemma_bound_check,
    mismatch_vs_bound,
    model_chain,
    write_trajectories_csv,
)
from .errors import ConfigurationError, FitDegenerateError, GibbsError
from .kozlov import CONVENTIONS, decay_scan, default_window_radius, fit_decay
from .lattice import Interval, SpinConfig, check_enumeration
from .model import load_model
from .potential import decay_profile, effective_radius
from .transform import conditional_table_bruteforce


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _base_config(args, model, trunc) -> dict:
    return {
        "command": args.command,
        "model": Path(args.model).name,
        "model_name": model.name,
        "model_sha256": model.digest,
        "trunc": trunc.radius,
        "tail_bound": trunc.tail_bound,
        "version": __version__,
    }


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _csv_text(config: dict, header, rows) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(config, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _constant(alphabet, window, symbol):
    return SpinConfig.constant(alphabet, window, symbol)


def _boundary_window(potential, n, trunc):
    return Interval(-n, n).expand(max(effective_radius(potential, trunc), 1))


def cmd_conditional(args) -> int:
    model = load_model(args.model)
    pot = model.potential
    trunc = model.truncation(args.trunc)
    channel = model.channel(args.channel)
    a = pot.alphabet
    tails = args.tails.split(",") if args.tails else [a.symbols[0], a.symbols[-1]]
    config = _base_config(args, model, trunc)
    config.update(channel=args.channel or model.default_channel, n=args.n, tails=tails)
    rows = []
    tgt = channel.target.symbols
    # fail before any work if the largest window is out of reach
    check_enumeration(channel.source.size, 2 * args.n + 1)
    check_enumeration(channel.target.size, 2 * args.n + 1)
    for tail in tails:
        for n in range(1, args.n + 1):
            bnd = _constant(a, _boundary_window(pot, n, trunc), tail)
            table = conditional_table_bruteforce(pot, channel, n, bnd, trunc)
            bound = (2 * n + 1) * trunc.tail_bound
            for idx in np.ndindex(table.shape):
                rows.append([n, tail, "".join(tgt[i] for i in idx), _fmt(table[idx]), _fmt(bound)])
    _emit(_csv_text(config, ["n", "boundary", "xi_window", "value", "tail_bound"], rows), args.out)
    return 0


def cmd_kozlov_scan(args) -> int:
    model = load_model(args.model)
    pot = model.potential
    trunc = model.truncation(args.trunc)
    channel = model.channel(args.channel)
    D = args.diameters
    config = _base_config(args, model, trunc)
    config.update(
        channel=args.channel or model.default_channel,
        diameters=D,
        n=args.n,
        n_default=default_window_radius(D, channel.source.size),
        fit=args.fit,
        convention=args.convention,
    )
    scan = decay_scan(pot, channel, D, args.n, trunc, args.convention)
    rows = [[p.diameter, _fmt(p.sup_abs_U), _fmt(p.window_delta), p.n_used] for p in scan]
    _emit(_csv_text(config, ["diameter", "sup_abs_U", "window_delta", "n_used"], rows), args.out)
    try:
        report = fit_decay(scan, args.fit).as_dict()
    except FitDegenerateError as e:
        print(f"warning: FitDegenerateError: {e}", file=sys.stderr)
        report = {"model": args.fit, "rate_or_exponent": None, "residual": None,
                  "points_used": 0, "diameters": [], "error": str(e)}
    report["config"] = config
    fit_out = args.fit_out
    if fit_out is None and args.out is not None:
        fit_out = str(Path(args.out).with_suffix(".fit.json"))
    if fit_out is None:
        sys.stdout.write(_json_text(report))
    else:
        Path(fit_out).write_text(_json_text(report))
    return 0


def _boundary_pairs(pot, l, trunc):
    a = pot.alphabet
    W = _boundary_window(pot, l, trunc)
    const = {s: _constant(a, W, s) for s in a.symbols}
    pairs = [(f"{a.symbols[0]}/{a.symbols[0]}", const[a.symbols[0]], const[a.symbols[0]])]
    for i, s in enumerate(a.symbols):
        for t in a.symbols[i + 1:]:
            pairs.append((f"{s}/{t}", const[s], const[t]))
    return pairs


def cmd_coupling(args) -> int:
    model = load_model(args.model)
    pot = model.potential
    trunc = model.truncation(args.trunc)
    l = args.n
    config = _base_config(args, model, trunc)
    config.update(l=l, runs=args.runs, seed=args.seed)
    pairs = _boundary_pairs(pot, l, trunc)
    dump = args.dump_trajectories
    if dump == "-":
        if args.out is None:
            raise ConfigurationError("--dump-trajectories needs a path when the report goes to stdout")
        dump = str(Path(args.out).with_suffix(".trajectories.csv"))
    results = mismatch_vs_bound(pot, l, pairs, args.runs, args.seed, trunc, keep_runs=dump is not None)
    runs = {r["boundaries"]: r.pop("_runs", None) for r in results}
    _emit(_json_text({"config": config, "results": results}), args.out)
    if dump is not None:
        with open(dump, "w", newline="") as fh:
            fh.write("# " + json.dumps(config, sort_keys=True) + "\n")
            write_trajectories_csv(fh, runs, pot.alphabet)
    return 0


def cmd_bounds(args) -> int:
    model = load_model(args.model)
    pot = model.potential
    trunc = model.truncation(args.trunc)
    M = args.horizon
    profile = decay_profile(pot)
    chain = model_chain(pot, M, trunc)
    p0 = aux_chain_p0_sequence(chain, M)
    config = _base_config(args, model, trunc)
    config.update(horizon=M, delta=chain.delta)
    rows = [
        [m, _fmt(profile.f(m)), _fmt(profile.F(m)), _fmt(profile.gamma(m)), _fmt(p0[m])]
        for m in range(M + 1)
    ]
    _emit(_csv_text(config, ["m", "f", "F", "gamma", "p_s0"], rows), args.out)
    return 0


def cmd_lemma_check(args) -> int:
    model = load_model(args.model)
    pot = model.potential
    trunc = model.truncation(args.trunc)
    n1 = args.n
    config = _base_config(args, model, trunc)
    config.update(n1=n1, m_max=args.m, depth=args.depth)
    out = []
    for m in range(1, args.m + 1):
        c = lemma_bound_check(pot, n1, m, trunc, depth=args.depth)
        out.append({"n1": n1, "m": m, "depth": c.depth, "measured_sup": c.measured_sup,
                    "bound": c.bound, "holds": c.holds})
    _emit(_json_text({"config": config, "results": out}), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gibbs1d", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--model", required=True, help="JSON model document")
        sp.add_argument("--trunc", type=int, default=None, help="truncation radius")
        sp.add_argument("--out", default=None, help="output path (default: stdout)")

    c = sub.add_parser("conditional", help="transformed single-site conditionals, n = 1..N")
    common(c)
    c.add_argument("--channel", default=None)
    c.add_argument("--n", type=int, default=3)
    c.add_argument("--tails", default=None, help="comma-separated original-layer boundary symbols")
    c.set_defaults(func=cmd_conditional)

    k = sub.add_parser("kozlov-scan", help="sup |U| per diameter and a decay fit")
    common(k)
    k.add_argument("--channel", default=None)
    k.add_argument("--diameters", type=int, default=6)
    k.add_argument("--n", type=int, default=None, help="window radius (default max(6, 2D), capped)")
    k.add_argument("--fit", choices=("exponential", "power-law"), default="exponential")
    k.add_argument("--fit-out", default=None)
    k.add_argument("--convention", choices=CONVENTIONS, default="marginal")
    k.set_defaults(func=cmd_kozlov_scan)

    cp = sub.add_parser("coupling", help="house-of-cards coupling against the auxiliary chain")
    common(cp)
    cp.add_argument("--n", "--l", dest="n", type=int, default=4, help="volume radius l")
    cp.add_argument("--runs", type=int, default=10000)
    cp.add_argument("--seed", type=int, default=0)
    cp.add_argument("--dump-trajectories", nargs="?", const="-", default=None, metavar="PATH")
    cp.set_defaults(func=cmd_coupling)

    b = sub.add_parser("bounds", help="f, F, gamma and P(S_m = 0) for m = 0..M")
    common(b)
    b.add_argument("--horizon", "--M", dest="horizon", type=int, default=64)
    b.set_defaults(func=cmd_bounds)

    lc = sub.add_parser("lemma-check", help="mismatch lemma by boundary enumeration")
    common(lc)
    lc.add_argument("--n", type=int, default=2, help="inner radius n1")
    lc.add_argument("--m", type=int, default=3, help="largest annulus width")
    lc.add_argument("--depth", type=int, default=None, help="enumerated boundary sites per side")
    lc.set_defaults(func=cmd_lemma_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GibbsError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
