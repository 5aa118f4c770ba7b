"""Command-line interface: ``hitstat <command> [options]``.

Exit codes: 0 when every check of the invoked command passes, 1 when a
check fails (the failing row goes to stderr), 2 on usage or input errors.
"""

import argparse
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .chain import load_chain, mixing_profile, mixing_time, stationary, validate
from .constructions import Family, build
from .errors import HitstatError
from .geomsum import (
    basic_geom_bounds,
    binom_bounds,
    geom_sum_bound,
    geom_sum_max_search,
    geom_sum_pmf,
    log_binom_bounds,
    neg_binomial_pmf,
)
from .harness.bounds import parse_kinds
from .harness.experiments import experiment_cycle_pstar, experiment_gm_peak, experiment_gm_scaling
from .harness.locator import surprise_lower_locator
from .harness.verify import CORPORA, verify_family
from .hitting import hitting_moments, hitting_pmf, mc_hitting_moments, surprise_pmf
from .maxprob import certifying_horizon, maximal_row, starr_check
from .spectral import killed_return_prob_all, killed_spectrum, reconstruct


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    """Carries the report text plus the failing row to print."""

    def __init__(self, text, row):
        super().__init__(row)
        self.text = text
        self.row = row


def _ints(s):
    return [int(v) for v in s.split(",") if v.strip()]


def _floats(s):
    return [float(v) for v in s.split(",") if v.strip()]


def _need_chain(args):
    if not args.chain:
        raise UsageError(f"{args.command} needs --chain FILE")
    return load_chain(args.chain)


def _state(chain, s):
    """A label if the chain has one by that name, else an integer index."""
    if s is None or s in chain.states:
        return s
    try:
        return int(s)
    except ValueError:
        return s


def _dump(obj):
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _csv(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in r) + "\n")
    return buf.getvalue()


def _fmt(args, default="json"):
    return args.format or default


# -- commands --------------------------------------------------------------


def cmd_validate(args):
    chain = _need_chain(args)
    return _dump({"valid": True, "n": chain.n, "nnz": chain.nnz})


def cmd_stationary(args):
    chain = _need_chain(args)
    st = stationary(chain, args.method)
    if _fmt(args) == "csv":
        return _csv(["state", "pi"], [(s, float(p)) for s, p in zip(chain.states, st.pi)])
    return _dump({"pi": [float(p) for p in st.pi], "residual": st.residual, "states": list(chain.states)})


def cmd_hitting(args):
    chain = _need_chain(args)
    if args.samples:
        est = mc_hitting_moments(chain, _state(chain, args.src), _state(chain, args.dst), args.samples, args.seed, args.cap)
        return est.to_json() + "\n"
    if args.moments:
        mean, var = hitting_moments(chain, _state(chain, args.src), _state(chain, args.dst))
        return _dump({"mean": mean, "variance": var})
    res = hitting_pmf(chain, _state(chain, args.src), _state(chain, args.dst), args.horizon)
    if _fmt(args, "csv") == "csv":
        return res.to_csv()
    return _dump({"x": res.x, "y": res.y, "pmf": res.pmf.tolist(), "tail": res.tail})


def cmd_surprise(args):
    chain = _need_chain(args)
    res = surprise_pmf(chain, _state(chain, args.src), args.horizon)
    if _fmt(args, "csv") == "csv":
        return res.to_csv()
    return _dump({"x": res.x, "s": res.s.tolist()})


def cmd_maxprob(args):
    chain = _need_chain(args)
    T = args.horizon or certifying_horizon(chain, _state(chain, args.src)) or 10_000
    row = maximal_row(chain, _state(chain, args.src), T)
    if _fmt(args, "csv") == "csv":
        return row.to_csv()
    return _dump(
        {
            "x": row.x,
            "horizon": row.horizon,
            "pstar": row.pstar.tolist(),
            "argmax_t": row.argmax_t.tolist(),
            "certified": row.certified,
            "tail_eps": row.tail_eps,
            "sum": row.total,
        }
    )


def cmd_starr(args):
    chain = _need_chain(args)
    out = []
    for p in args.p:
        r = starr_check(chain, _state(chain, args.src), p, args.horizon)
        row = {"p": p, "ratio": r.ratio, "bound": r.bound, "horizon": r.horizon, "certified": r.certified}
        row["pass"] = bool(r.ratio <= r.bound + 1e-9)
        out.append(row)
    text = _dump({"rows": out})
    bad = [r for r in out if not r["pass"]]
    if bad:
        raise CheckFailed(text, json.dumps(bad[0], sort_keys=True))
    return text


def cmd_geom(args):
    if args.geom_cmd == "pmf":
        if args.q:
            val = geom_sum_pmf(args.q, args.t)
            return _dump({"q": args.q, "t": args.t, "pmf": val, "bound": geom_sum_bound(len(args.q), args.t)})
        if args.n is None or args.m is None or args.p is None:
            raise UsageError("geom pmf needs --q LIST --t T, or --n --m --p")
        return _dump({"n": args.n, "m": args.m, "p": args.p, "pmf": neg_binomial_pmf(args.n, args.m, args.p)})
    if args.geom_cmd == "bounds":
        if args.M is not None and args.N is not None:
            lo, hi = log_binom_bounds(args.M, args.N)
            exact = math.lgamma(args.M + args.N + 1) - math.lgamma(args.M + 1) - math.lgamma(args.N + 1)
            doc = {"M": args.M, "N": args.N, "log_lower": lo, "log_upper": hi, "log_exact": exact}
            if hi < 700:
                doc["lower"], doc["upper"] = binom_bounds(args.M, args.N)
            ok = bool(lo <= exact <= hi)
        elif args.n is not None and args.m is not None:
            lo, hi = basic_geom_bounds(args.n, args.m)
            val = neg_binomial_pmf(args.n, args.m, args.n / (args.m + args.n))
            doc = {"n": args.n, "m": args.m, "lower": lo, "upper": hi, "pmf": val}
            ok = bool(lo <= val <= hi)
        else:
            raise UsageError("geom bounds needs --M --N or --n --m")
        doc["pass"] = ok
        text = _dump(doc)
        if not ok:
            raise CheckFailed(text, json.dumps(doc, sort_keys=True))
        return text
    if args.geom_cmd == "maximize":
        params, val = geom_sum_max_search(args.n, args.t, args.resolution)
        q_eq = args.t / (args.t + args.n)
        eq_val = geom_sum_pmf([q_eq] * args.n, args.t)
        spread = max(params.q) - min(params.q)
        ok = bool(abs(val - eq_val) <= 10 * args.resolution and spread <= 2 * args.resolution)
        doc = {"n": args.n, "t": args.t, "argmax": list(params.q), "max": val, "equal_value": eq_val, "pass": ok}
        text = _dump(doc)
        if not ok:
            raise CheckFailed(text, json.dumps(doc, sort_keys=True))
        return text
    raise UsageError("geom needs a subcommand: pmf, bounds, maximize")  # pragma: no cover


def cmd_spectral(args):
    chain = _need_chain(args)
    U = args.U or []
    spec = killed_spectrum(chain, _state(chain, args.src), U, strict=not args.loose)
    doc = spec.to_dict()
    if args.check:
        dp = killed_return_prob_all(chain, _state(chain, args.src), U, args.check)
        err = float(np.max(np.abs(reconstruct(spec, np.arange(args.check + 1)) - dp)))
        doc["max_error"] = err
        doc["pass"] = bool(err <= 1e-10 and min(a for a, _ in spec.terms) >= -1e-12)
        if not doc["pass"]:
            raise CheckFailed(_dump(doc), f"max_error={err!r}")
    return json.dumps(doc, sort_keys=True) + "\n"


def _family_params(args):
    keys = ("n", "t", "m", "h", "k", "p")
    params = {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}
    params["seed"] = args.seed
    return params


def cmd_construct(args):
    inst = build(args.family, **_family_params(args))
    return inst.to_json()


def cmd_verify(args):
    kinds = parse_kinds(args.kinds)
    ts = range(max(1, args.tmin), args.tmax + 1)
    if args.chain:
        from .constructions import FamilyInstance, Family as F

        chain = load_chain(args.chain)
        fam = chain.metadata.get("family", "random-chain")
        try:
            fam = F(fam)
        except ValueError:
            fam = F.RandomChain
        corpus, seeds = [FamilyInstance(chain, fam, {"file": args.chain})], []
    else:
        corpus, seeds = CORPORA[args.corpus](args.count, args.n, args.seed)
    rep = verify_family(corpus, kinds, ts, args.xy, detail=args.detail, seeds=seeds)
    text = rep.to_csv() if _fmt(args, "csv") == "csv" else rep.to_json()
    if not rep.passed:
        bad = rep.failing_rows
        raise CheckFailed(text, bad[0].csv() if bad else "violation")
    return text


def cmd_locate(args):
    if args.family:
        inst = build(args.family, **_family_params(args))
        d = inst.designated
        chain, x, y, U, N = inst.chain, d.get("x"), d.get("y"), d.get("U"), d.get("N")
        t = args.window
    else:
        chain = _need_chain(args)
        x, y, U, N, t = _state(chain, args.src), _state(chain, args.dst), args.U, args.N, args.window
    if x is None or y is None or not U or not N:
        raise UsageError("locate-surprise needs x, y, U and N (from --family or --from/--to/--U/--N)")
    res = surprise_lower_locator(chain, x, y, U, N, t, args.method, args.samples, args.seed)
    text = _dump(res.to_dict())
    if not res.passed:
        raise CheckFailed(text, json.dumps(res.to_dict(), sort_keys=True))
    return text


def cmd_experiment(args):
    if args.exp_cmd == "cycle-pstar":
        rep = experiment_cycle_pstar(args.n_list, saturation=not args.no_saturation)
    elif args.exp_cmd == "gm-scaling":
        rep = experiment_gm_scaling(args.m_list, args.samples, args.seed)
    elif args.exp_cmd == "gm-peak":
        rep = experiment_gm_peak(args.m_list)
    else:  # pragma: no cover
        raise UsageError("unknown experiment")
    text = rep.to_json()
    if not rep.passed:
        c = rep.failing()[0]
        raise CheckFailed(text, f"{c.name}: {c.detail}")
    return text


def cmd_mix(args):
    chain = _need_chain(args)
    if args.src is not None:
        prof = mixing_profile(chain, _state(chain, args.src), args.horizon)
        if _fmt(args) == "csv":
            return _csv(["t", "d"], [(t, float(d)) for t, d in enumerate(prof.d)])
        return _dump({"x": prof.x, "t_mix": prof.t_mix(args.eps), "d": prof.d.tolist()})
    return _dump({"eps": args.eps, "t_mix": mixing_time(chain, args.eps, args.horizon)})


# -- parser ----------------------------------------------------------------


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--chain", help="chain JSON file")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--seed", type=int, default=0)
    return p


def _family_args(p):
    for name, typ in (("n", int), ("t", int), ("m", int), ("h", int), ("k", int), ("p", float)):
        p.add_argument(f"--{name}", type=typ)


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="hitstat", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hitstat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(fn=fn)
        return p

    add("validate", cmd_validate, "validate a chain file")
    p = add("stationary", cmd_stationary, "stationary distribution")
    p.add_argument("--method", default="auto", choices=("auto", "dense", "sparse", "power"))

    p = add("hitting", cmd_hitting, "exact hitting-time pmf")
    p.add_argument("--from", dest="src", required=True)
    p.add_argument("--to", dest="dst", required=True)
    p.add_argument("--horizon", type=int, default=100)
    p.add_argument("--moments", action="store_true", help="exact mean and variance instead")
    p.add_argument("--samples", type=int, help="Monte Carlo moments with this many samples")
    p.add_argument("--cap", type=int, default=10**8)

    p = add("surprise", cmd_surprise, "probability that the state at time t is new")
    p.add_argument("--from", dest="src", required=True)
    p.add_argument("--horizon", type=int, default=100)

    p = add("maxprob", cmd_maxprob, "maximal transition probabilities")
    p.add_argument("--from", dest="src", required=True)
    p.add_argument("--horizon", type=int)

    p = add("starr", cmd_starr, "even-time maximal inequality check")
    p.add_argument("--from", dest="src", required=True)
    p.add_argument("--p", type=_floats, default=[2.0])
    p.add_argument("--horizon", type=int)

    p = add("geom", cmd_geom, "sums of geometric variables")
    gsub = p.add_subparsers(dest="geom_cmd", required=True)
    g = gsub.add_parser("pmf", parents=[common])
    g.add_argument("--n", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--p", type=float)
    g.add_argument("--q", type=_floats)
    g.add_argument("--t", type=int, default=0)
    g = gsub.add_parser("bounds", parents=[common])
    g.add_argument("--n", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--M", type=int)
    g.add_argument("--N", type=int)
    g = gsub.add_parser("maximize", parents=[common])
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--t", type=int, required=True)
    g.add_argument("--resolution", type=float, default=1e-2)

    p = add("spectral", cmd_spectral, "killed-chain spectral decomposition")
    p.add_argument("--from", dest="src", required=True)
    p.add_argument("--U", type=_ints, default=[])
    p.add_argument("--check", type=int, help="compare with the DP up to this horizon")
    p.add_argument("--loose", action="store_true", help="only require detailed balance on the killed class")

    p = add("construct", cmd_construct, "build an example family")
    p.add_argument("--family", required=True, choices=[f.value for f in Family])
    _family_args(p)

    p = add("verify", cmd_verify, "bound verification campaign")
    p.add_argument("--corpus", default="random", choices=sorted(CORPORA))
    p.add_argument("--kinds", default="general")
    p.add_argument("--n", type=int, default=10, help="largest chain size in the corpus")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--tmin", type=int, default=1)
    p.add_argument("--tmax", type=int, default=200)
    p.add_argument("--xy", default="all-pairs", choices=("all-pairs", "designated"))
    p.add_argument("--detail", action="store_true", help="one row per (x, y, t) cell")

    p = add("locate-surprise", cmd_locate, "window bound on the surprise probability")
    p.add_argument("--family", choices=[f.value for f in Family])
    _family_args(p)
    p.add_argument("--from", dest="src")
    p.add_argument("--to", dest="dst")
    p.add_argument("--U", type=_ints)
    p.add_argument("--N", type=int)
    p.add_argument("--window", type=int, help="window start (default: largest hitting mass)")
    p.add_argument("--method", default="exact", choices=("exact", "mc"))
    p.add_argument("--samples", type=int, default=2000)

    p = add("experiment", cmd_experiment, "named experiments")
    esub = p.add_subparsers(dest="exp_cmd", required=True)
    e = esub.add_parser("cycle-pstar", parents=[common])
    e.add_argument("--n-list", type=_ints, default=[256, 512, 1024])
    e.add_argument("--no-saturation", action="store_true")
    e = esub.add_parser("gm-scaling", parents=[common])
    e.add_argument("--m-list", type=_ints, default=[3, 4, 5])
    e.add_argument("--samples", type=int, default=500)
    e = esub.add_parser("gm-peak", parents=[common])
    e.add_argument("--m-list", type=_ints, default=[3, 4, 5])

    p = add("mix", cmd_mix, "total-variation mixing")
    p.add_argument("--from", dest="src")
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--horizon", type=int, default=10_000)
    return parser


def _emit(args, text):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text = args.fn(args)
    except CheckFailed as exc:
        _emit(args, exc.text)
        print(f"FAIL: {exc.row}", file=sys.stderr)
        return 1
    except (UsageError, HitstatError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(args, text)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
