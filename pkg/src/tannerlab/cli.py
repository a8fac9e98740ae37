"""Command-line front end.

Subcommands: decode, verify, simulate, bound, threshold, graph gen,
graph info, lp.  Any long option may also come from a JSON file passed with
``--config``; explicit command-line flags win.
"""
from __future__ import annotations

import argparse
import concurrent.futures as cf
import csv
import io
import json
import os
import subprocess
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import bounds, channel, decode, lp
from .codes import TannerCode, enumerate_codewords, load_code
from .graph import gen_regular, girth, read_alist, write_alist

DECODERS = ("nwms", "cert_nwms", "nwms2", "ml_brute", "lp")

SIM_COLUMNS = ("grid_index", "channel", "param", "decoder", "h", "trials",
               "errors", "wer", "certified", "cert_failures", "cert_not_success")
SIM_HELP = """CSV columns:
  grid_index        position in the channel-parameter grid
  channel, param    channel name and parameter value
  decoder, h        decoder and iteration count
  trials            number of transmitted words
  errors            decoder output differs from the transmitted word
  wer               errors / trials
  certified         cert_nwms only: trials with a local-optimality certificate
  cert_failures     cert_nwms only: trials without a certificate
  cert_not_success  cert_nwms only: certified trials whose word is wrong (must be 0)
"""


# ---------------------------------------------------------------------------
# shared helpers


def _parse_floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).replace(",", " ").split()]


def _parse_bits(text):
    if isinstance(text, (list, tuple)):
        return np.array(text, dtype=np.uint8)
    s = str(text).replace(",", "").replace(" ", "")
    if not set(s) <= {"0", "1"}:
        raise SystemExit(f"not a binary word: {text!r}")
    return np.array([int(c) for c in s], dtype=np.uint8)


def _read_vector(path):
    with open(path, encoding="utf-8") as f:
        return np.array([float(t) for t in f.read().replace(",", " ").split()])


def code_from_args(args) -> TannerCode:
    if getattr(args, "code", None):
        return load_code(args.code)
    if getattr(args, "alist", None):
        return TannerCode.ldpc(read_alist(args.alist))
    if getattr(args, "gen", None):
        parts = [int(v) for v in str(args.gen).split(",")]
        if len(parts) < 3:
            raise SystemExit("--gen needs DL,DR,N[,GIRTH[,SEED]]")
        dl, dr, n = parts[:3]
        g_min = parts[3] if len(parts) > 3 else 4
        seed = parts[4] if len(parts) > 4 else 0
        return TannerCode.ldpc(gen_regular(dl, dr, n, g_min, seed))
    raise SystemExit("give a code with --code, --alist or --gen")


def weights_from_args(args, h):
    spec = getattr(args, "weights", "unit") or "unit"
    if isinstance(spec, (list, tuple)) or any(ch.isdigit() for ch in str(spec)):
        w = np.array(_parse_floats(spec))
        if len(w) != h:
            raise SystemExit(f"--weights lists {len(w)} values but h = {h}")
        return w
    return decode.weight_preset(spec, h, args.dl_weight, args.alpha)


def _add_code_args(p):
    p.add_argument("--code", help="JSON code description (alist path + local-code tags)")
    p.add_argument("--alist", help="alist file; every check is a single parity check")
    p.add_argument("--gen", help="generate a regular LDPC code: DL,DR,N[,GIRTH[,SEED]]")


def _add_channel_args(p, grid=False):
    p.add_argument("--channel", default="bsc", choices=("bsc", "awgn", "bec"))
    if grid:
        p.add_argument("--grid", default="0.01,0.02,0.03,0.04,0.05",
                       help="comma-separated channel parameters (p, sigma or eps)")
    else:
        p.add_argument("--param", type=float, default=0.05, help="channel parameter (p, sigma or eps)")
    p.add_argument("--scaled", action="store_true", help="BSC LLRs in {+1, -1}")
    p.add_argument("--seed", type=int, default=0, help="base seed")


def _add_decoder_args(p):
    p.add_argument("--h", type=int, default=10, help="iterations / certificate height")
    p.add_argument("--weights", default="unit",
                   help="unit, minsum, normalized, or an explicit comma-separated list of h values")
    p.add_argument("--dl-weight", type=int, default=3, help="dL for the minsum/normalized presets")
    p.add_argument("--alpha", type=float, default=1.0, help="alpha for the normalized preset")


def _instance(args, code):
    """(transmitted word, channel output or None, llr, channel or None)."""
    if getattr(args, "llr", None):
        llr = _read_vector(args.llr)
        if len(llr) != code.N:
            raise SystemExit(f"LLR file holds {len(llr)} values, N = {code.N}")
        return None, None, llr, None
    ch = channel.make_channel(args.channel, args.param, args.scaled)
    x = _parse_bits(args.x) if getattr(args, "x", None) else np.zeros(code.N, dtype=np.uint8)
    y, llr = channel.sample_transmission(ch, x, args.seed)
    return x, y, llr, ch


def run_decoder(code, name, llr, h, w, ch=None, y=None):
    """Returns (word or None, certified or None, extra dict)."""
    if name == "nwms":
        return decode.nwms(code, llr, h, w), None, {}
    if name == "cert_nwms":
        out = decode.cert_nwms(code, llr, h, w)
        return out.word, out.certified, {}
    if name == "nwms2":
        if ch is not None:
            l0, l1 = channel.log_likelihoods(ch, y)
        else:
            l0, l1 = np.zeros_like(llr), -np.asarray(llr, dtype=float)
        return decode.nwms2(code, l0, l1, h, w), None, {}
    if name == "ml_brute":
        word, unique = decode.ml_brute(code, llr)
        return word, None, {"unique": unique}
    if name == "lp":
        sol = lp.lp_decode(code, llr)
        word = np.rint(sol.x).astype(np.uint8) if sol.integral else None
        return word, None, {"lp_value": sol.value, "integral": sol.integral, "x": sol.x.tolist()}
    raise SystemExit(f"unknown decoder {name!r}")


# ---------------------------------------------------------------------------
# simulation


@dataclass
class SimulationConfig:
    code: TannerCode
    channel: str
    grid: list
    decoder: str
    h: int
    weights: np.ndarray
    trials: int
    seed: int = 0
    workers: int = 1
    scaled: bool = False
    random_codewords: bool = False
    meta: dict = field(default_factory=dict)

    def validate(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.grid:
            raise ValueError("parameter grid is empty")
        if self.decoder not in DECODERS:
            raise ValueError(f"unknown decoder {self.decoder!r}")
        if self.decoder in ("nwms", "cert_nwms", "nwms2") and not self.code.all_spc:
            raise ValueError(f"{self.decoder} needs single-parity-check local codes")
        if (self.decoder == "ml_brute" or self.random_codewords) and self.code.N > 24:
            raise ValueError("exhaustive codeword enumeration needs N <= 24")


def _trial_block(cfg: SimulationConfig, gi: int, trials):
    ch = channel.make_channel(cfg.channel, cfg.grid[gi], cfg.scaled)
    book = enumerate_codewords(cfg.code) if cfg.random_codewords else None
    errors = certified = cert_bad = 0
    for k in trials:
        rng = channel.trial_rng(cfg.seed, gi, k)
        if book is not None:
            x = book[rng.integers(len(book))]
        else:
            x = np.zeros(cfg.code.N, dtype=np.uint8)
        y, llr = channel.sample_transmission(ch, x, rng)
        word, cert, _ = run_decoder(cfg.code, cfg.decoder, llr, cfg.h, cfg.weights, ch, y)
        ok = word is not None and np.array_equal(word, x)
        errors += not ok
        if cert:
            certified += 1
            cert_bad += not ok
    return errors, certified, cert_bad


def simulate_wer(cfg: SimulationConfig) -> list:
    """One row per grid point; counts are independent of the worker count."""
    cfg.validate()
    rows = []
    pool = cf.ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for gi, param in enumerate(cfg.grid):
            if pool is None:
                parts = [_trial_block(cfg, gi, range(cfg.trials))]
            else:
                chunks = np.array_split(np.arange(cfg.trials), cfg.workers * 4)
                futs = [pool.submit(_trial_block, cfg, gi, [int(k) for k in c]) for c in chunks if len(c)]
                parts = [f.result() for f in futs]
            errors = sum(p[0] for p in parts)
            cert = sum(p[1] for p in parts)
            bad = sum(p[2] for p in parts)
            is_cert = cfg.decoder == "cert_nwms"
            rows.append({
                "grid_index": gi, "channel": cfg.channel, "param": param,
                "decoder": cfg.decoder, "h": cfg.h, "trials": cfg.trials,
                "errors": errors, "wer": errors / cfg.trials,
                "certified": cert if is_cert else "",
                "cert_failures": cfg.trials - cert if is_cert else "",
                "cert_not_success": bad if is_cert else "",
            })
    finally:
        if pool is not None:
            pool.shutdown()
    return rows


def rows_csv(rows, columns=SIM_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def git_describe():
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True, text=True,
                             cwd=os.path.dirname(os.path.abspath(__file__)), timeout=10)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _write_sidecar(out, config):
    if not out:
        return
    with open(out + ".json", "w", encoding="utf-8") as f:
        json.dump({"config": config, "build": git_describe()}, f, indent=2, sort_keys=True)
        f.write("\n")


# ---------------------------------------------------------------------------
# subcommands


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def cmd_decode(args):
    code = code_from_args(args)
    w = weights_from_args(args, args.h)
    x, y, llr, ch = _instance(args, code)
    word, cert, extra = run_decoder(code, args.decoder, llr, args.h, w, ch, y)
    out = {"decoder": args.decoder, "word": None if word is None else "".join(map(str, word)),
           "is_codeword": None if word is None else code.is_codeword(word)}
    if cert is not None:
        out["certified"] = cert
    if x is not None:
        out["transmitted"] = "".join(map(str, x))
        out["success"] = word is not None and bool(np.array_equal(word, x))
    out.update({k: _jsonable(v) for k, v in extra.items()})
    print(json.dumps(out, sort_keys=True))
    return 0


def cmd_verify(args):
    code = code_from_args(args)
    w = weights_from_args(args, args.h)
    x = _parse_bits(args.x) if args.x else np.zeros(code.N, dtype=np.uint8)
    if args.llr:
        llr = _read_vector(args.llr)
    else:
        ch = channel.make_channel(args.channel, args.param, args.scaled)
        _, llr = channel.sample_transmission(ch, x, args.seed)
    vals = decode.verify_values(code, x, llr, args.h, w, args.d)
    ok = bool((vals > 0).all())
    print(json.dumps({"locally_optimal": ok, "min_value": float(vals.min()), "d": args.d, "h": args.h}))
    return 0


def cmd_simulate(args):
    code = code_from_args(args)
    w = weights_from_args(args, args.h)
    cfg = SimulationConfig(code, args.channel, _parse_floats(args.grid), args.decoder, args.h, w,
                           args.trials, args.seed, args.workers, args.scaled, args.random_codewords)
    t0 = time.perf_counter()
    rows = simulate_wer(cfg)
    _emit(rows_csv(rows), args.out)
    config = {k: _jsonable(v) for k, v in vars(args).items() if k not in ("func",)}
    config["weights_resolved"] = w.tolist()
    config["N"] = code.N
    config["elapsed_s"] = round(time.perf_counter() - t0, 3)
    _write_sidecar(args.out, config)
    return 0


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise SystemExit("missing required option(s): " + ", ".join("--" + n for n in missing))


def cmd_bound(args):
    _require(args, "p")
    r = bounds.alpha(args.p, args.d, args.dl, args.dr, args.mode, args.s)
    out = {"p": args.p, "alpha": r.alpha, "t_star": r.t, "t_at_boundary": r.at_boundary,
           "mode": args.mode, "s": args.s, "d": args.d, "dL": args.dl, "dR": args.dr}
    if args.exact_pi:
        omega = (1,) * args.exact_pi if args.mode == "uniform" else bounds.geometric_weights(args.d, args.dl, args.exact_pi - 1)
        params = bounds.ProcessParams(args.p, args.d, args.dl, args.dr, omega)
        out["exact_pi"] = bounds.exact_pi(params, args.exact_pi)
        out["h"] = args.exact_pi
    print(json.dumps(out, sort_keys=True))
    return 0


def cmd_threshold(args):
    t0 = time.perf_counter()
    try:
        res = bounds.threshold_search(args.d, args.dl, args.dr, args.mode, args.s)
    except bounds.NoThresholdError as exc:
        print(f"no threshold found: {exc}", file=sys.stderr)
        return 1
    except bounds.LatticeGuardError as exc:
        print(f"lattice guard: {exc}", file=sys.stderr)
        return 2
    print(f"p0 = {res.p0:.4f}  (d={args.d}, dL={args.dl}, dR={args.dr}, mode={args.mode}, s={args.s})")
    print("alpha trace:")
    for p, a, t in sorted(res.trace):
        print(f"  p = {p:.4f}  alpha = {a:.6g}  t* = {t:.6g}")
    if args.csv:
        _emit(bounds.rows_to_csv(res.csv_rows()), args.csv)
        _write_sidecar(args.csv, {"d": args.d, "dL": args.dl, "dR": args.dr, "mode": args.mode,
                                  "s": args.s, "p0": res.p0,
                                  "elapsed_s": round(time.perf_counter() - t0, 3)})
    return 0


def cmd_graph_gen(args):
    _require(args, "dl", "dr", "n")
    g = gen_regular(args.dl, args.dr, args.n, args.girth, args.seed)
    _emit(write_alist(g), args.out)
    return 0


def cmd_graph_info(args):
    g = read_alist(args.path)
    gi = girth(g)
    info = {"N": g.num_variables, "J": g.num_checks, "edges": g.num_edges,
            "variable_degrees": sorted(set(g.var_degrees().tolist())),
            "check_degrees": sorted(set(g.check_degrees().tolist())),
            "girth": "acyclic" if gi == float("inf") else int(gi)}
    print(json.dumps(info, sort_keys=True))
    return 0


def cmd_lp(args):
    code = code_from_args(args)
    x, _, llr, _ = _instance(args, code)
    problem = lp.build_lp(code, llr)
    if args.dump:
        _emit(problem.to_lp_text(), args.dump)
    sol = lp.lp_decode(code, llr, check_unique=args.unique)
    out = {"status": sol.status, "value": sol.value, "integral": sol.integral,
           "x": [round(float(v), 12) for v in sol.x]}
    if sol.unique is not None:
        out["unique"] = sol.unique
    print(json.dumps(out, sort_keys=True))
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="tannerlab", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="JSON file of option defaults")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", help="decode one received word")
    _add_code_args(p)
    _add_channel_args(p)
    _add_decoder_args(p)
    p.add_argument("--decoder", default="cert_nwms", choices=DECODERS)
    p.add_argument("--llr", help="file of N LLR values (overrides channel sampling)")
    p.add_argument("--x", help="transmitted codeword as a bit string (default all-zero)")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("verify", help="test a codeword for (h, w, d)-local optimality")
    _add_code_args(p)
    _add_channel_args(p)
    _add_decoder_args(p)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--llr", help="file of N LLR values")
    p.add_argument("--x", help="codeword to test (default all-zero)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="Monte-Carlo word error rates", epilog=SIM_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_code_args(p)
    _add_channel_args(p, grid=True)
    _add_decoder_args(p)
    p.add_argument("--decoder", default="nwms", choices=DECODERS)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--random-codewords", action="store_true", help="transmit random codewords (N <= 24)")
    p.add_argument("--out", help="CSV output path (a .json sidecar is written next to it)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bound", help="alpha bound at one crossover probability")
    p.add_argument("--p", type=float, help="BSC crossover probability (required)")
    _add_bound_args(p)
    p.add_argument("--exact-pi", type=int, default=0, metavar="H", help="also compute the exact failure probability for height H")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("threshold", help="largest p on a 1e-4 grid with alpha < 1",
                       epilog="CSV columns: p, alpha, t_star, s, d, dL, dR")
    _add_bound_args(p)
    p.add_argument("--csv", help="write the alpha trace as CSV")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("graph", help="graph utilities")
    gsub = p.add_subparsers(dest="graph_command", required=True)
    q = gsub.add_parser("gen", help="random regular Tanner graph as alist")
    q.add_argument("--dl", type=int)
    q.add_argument("--dr", type=int)
    q.add_argument("--n", type=int)
    q.add_argument("--girth", type=int, default=4, help="minimum girth")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out")
    q.set_defaults(func=cmd_graph_gen)
    q = gsub.add_parser("info", help="sizes, degrees and girth of an alist graph")
    q.add_argument("path")
    q.set_defaults(func=cmd_graph_info)

    p = sub.add_parser("lp", help="LP decoding of one received word")
    _add_code_args(p)
    _add_channel_args(p)
    p.add_argument("--llr", help="file of N LLR values")
    p.add_argument("--x", help="transmitted codeword (default all-zero)")
    p.add_argument("--dump", help="write the LP in CPLEX LP text layout")
    p.add_argument("--unique", action="store_true", help="test uniqueness by a perturbed re-solve")
    p.set_defaults(func=cmd_lp)
    return ap


def _add_bound_args(p):
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--dl", type=int, default=2)
    p.add_argument("--dr", type=int, default=16)
    p.add_argument("--mode", default="uniform", choices=("uniform", "improved"))
    p.add_argument("--s", type=int, default=0)


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    with open(known.config, encoding="utf-8") as f:
        conf = json.load(f)
    conf = {k.replace("-", "_"): v for k, v in conf.items()}
    # push defaults into every subparser so explicit flags still win
    stack = [parser]
    while stack:
        p = stack.pop()
        dests = {a.dest for a in p._actions}
        p.set_defaults(**{k: v for k, v in conf.items() if k in dests})
        for a in p._actions:
            if isinstance(a, argparse._SubParsersAction):
                stack.extend(a.choices.values())


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    _apply_config(parser, argv)
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
