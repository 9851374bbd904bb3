"""Command-line front end.

Every command prints a metadata comment line, a header row and data rows
(CSV) or one JSON document.  Exit status: 0 ok, 2 invalid input, 3 when the
output carries a numerical-failure marker (``-inf`` entropy, zero-hit bound).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from . import __version__, _rng, entropy, fock, freeness, groupalg, randmat, spectral
from .ncpoly import MomentState, Word, evaluate, state_from_sequence

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


class InputError(ValueError):
    pass


@dataclass
class Table:
    columns: list
    rows: list
    meta: dict = field(default_factory=dict)
    numeric_failure: bool = False
    report: dict | None = None  # emitted verbatim for --format json


# --------------------------------------------------------------------------
# formatting


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Fraction):
        return format(float(v), ".17g")
    if isinstance(v, float) or hasattr(v, "dtype"):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, Fraction):
        return float(v)
    if hasattr(v, "dtype"):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def render(table, fmt):
    if fmt == "json":
        doc = {
            "metadata": {k: _jsonable(v) for k, v in table.meta.items()},
            "columns": list(table.columns),
            "rows": [[_jsonable(v) for v in row] for row in table.rows],
        }
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    meta = " ".join(f"{k}={_fmt(v)}" for k, v in table.meta.items())
    buf.write(f"# freeprob {__version__} {meta}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# --------------------------------------------------------------------------
# input helpers


def _load_json(text, what):
    text = text.strip()
    try:
        if text.startswith(("{", "[")):
            return json.loads(text)
        if os.path.exists(text):
            with open(text) as fh:
                return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{what}: malformed JSON ({exc})") from None
    raise InputError(f"{what}: {text!r} is neither inline JSON nor a readable file")


def _measure(text):
    text = text.strip()
    if text.startswith("{") or (os.path.exists(text) and ":" not in text):
        return spectral.measure_from_json(_load_json(text, "--measure"))
    return spectral.parse_measure(text)


def _target(text, degree):
    """Moment-state JSON or a measure spec; measures become one-generator states."""
    text = text.strip()
    if text.startswith("{") or os.path.exists(text):
        obj = _load_json(text, "--target")
        if "moments" in obj:
            return MomentState.from_json(obj)
        return spectral.measure_state(spectral.measure_from_json(obj), degree)
    return spectral.measure_state(spectral.parse_measure(text), degree)


def _ints(text):
    return [int(x) for x in str(text).replace(",", " ").split()]


def _floats(text):
    return [float(x) for x in str(text).replace(",", " ").split()]


_SCHEDULE_KEYS = {"m", "k", "eps", "R", "n"}


def _schedule(text, n):
    obj = _load_json(text, "--schedule")
    if isinstance(obj, dict):
        obj = [obj]
    out = []
    for cell in obj:
        unknown = set(cell) - _SCHEDULE_KEYS
        if unknown:
            raise InputError(f"--schedule: unknown key(s) {sorted(unknown)}")
        missing = {"m", "k", "eps", "R"} - set(cell)
        if missing:
            raise InputError(f"--schedule: missing key(s) {sorted(missing)}")
        out.append(entropy.MicrostateParams(int(cell["m"]), int(cell["k"]), float(cell["eps"]),
                                            float(cell["R"]), int(cell.get("n", n))))
    return out


def _builtin_state(name, degree):
    if name == "free-semicircular":
        sc = spectral.semicircular_state(degree)
        return freeness.build_free_state(freeness.MarginalSpec.singletons([sc, sc]), degree)
    if name == "tensor-bernoulli":
        b = _bernoulli(degree)
        return freeness.build_tensor_state(freeness.MarginalSpec.singletons([b, b]), degree)
    if name.startswith("group-F"):
        return groupalg.moment_state_from_group(list(range(int(name[7:]))), degree)
    raise InputError(f"unknown builtin state {name!r}")


def _bernoulli(degree):
    """+-1/2 with equal mass."""
    return state_from_sequence([Fraction(1, 2) ** j if j % 2 == 0 else 0 for j in range(degree + 1)])


# --------------------------------------------------------------------------
# commands; each returns (plan, thunk)


def cmd_moments(a):
    if a.state:
        state = MomentState.from_json(_load_json(a.state, "--state"))
        words = [Word.parse(w) for w in a.word or []]
        if not words:
            raise InputError("--state needs at least one --word")
        plan = {"state_generators": state.generators, "words": [str(w) for w in words]}

        def run():
            rows = []
            for w in words:
                v = complex(evaluate(w, state))
                rows.append((str(w), v.real, v.imag))
            return Table(["word", "re", "im"], rows)

        return plan, run
    if a.measure:
        mu = _measure(a.measure)
        plan = {"measure": mu.to_json(), "degree": a.degree}
        return plan, lambda: Table(["k", "moment"], [(k, spectral.measure_moment(mu, k)) for k in range(a.degree + 1)])
    raise InputError("moments needs --state or --measure")


def cmd_freeness_check(a):
    if bool(a.state) == bool(a.builtin):
        raise InputError("give exactly one of --state or --builtin")
    state = (MomentState.from_json(_load_json(a.state, "--state")) if a.state
             else _builtin_state(a.builtin, a.degree))
    blocks = ([_ints(b) for b in a.blocks.split("|")] if a.blocks
              else [[g] for g in range(state.generators)])
    plan = {"generators": state.generators, "blocks": blocks, "degree": a.degree, "tol": a.tol}

    def run():
        d = freeness.check_freeness(state, blocks, a.degree, a.tol).to_json()
        row = (d["max_violation"], json.dumps(d["witness_word"]), d["words_tested"], d["passed"])
        return Table(["max_violation", "witness_word", "words_tested", "passed"], [row], report=d)

    return plan, run


def cmd_freeness_clt(a):
    if a.state:
        marginal = MomentState.from_json(_load_json(a.state, "--state"))
    elif a.marginal == "bernoulli":
        marginal = _bernoulli(a.degree)
    else:
        marginal = spectral.semicircular_state(a.degree)
    ns = _ints(a.n)
    second = marginal.value(Word.of(0, 0))
    radius = 2 * math.sqrt(float(second))
    plan = {"n": ns, "degree": a.degree, "marginal": a.state or a.marginal}

    def run():
        rows = []
        for n in ns:
            ms = freeness.free_clt_moments(marginal, n, a.degree)
            for k, m in enumerate(ms):
                if isinstance(second, (int, Fraction)) and k % 2 == 0:
                    limit = math.comb(k, k // 2) // (k // 2 + 1) * Fraction(second) ** (k // 2)
                else:
                    limit = spectral.semicircular_moment_closed_form(k, radius)
                exact = str(m) if isinstance(m, (int, Fraction)) else ""
                rows.append((n, k, m, exact, limit, abs(float(m) - float(limit))))
        return Table(["n", "k", "moment", "exact", "limit", "error"], rows)

    return plan, run


def cmd_fock_moments(a):
    plan = {"degree": a.degree, "letters": 1, "level": a.degree}
    return plan, lambda: Table(["degree", "moment", "closed_form", "abs_error"], fock.catalan_table(a.degree))


def cmd_fock_identity(a):
    h1, h2 = _floats(a.h1), _floats(a.h2)
    if len(h1) != len(h2):
        raise InputError("--h1 and --h2 need the same length")
    space = fock.TruncatedFock(len(h1), a.level)
    plan = {"letters": len(h1), "level": a.level, "h1": h1, "h2": h2}

    def run():
        dev = fock.annihilation_identity_check(space, h1, h2)
        inner = sum(x * y for x, y in zip(h1, h2))
        return Table(["inner", "max_deviation"], [(inner, dev)])

    return plan, run


def cmd_randmat_report(a):
    word = randmat.parse_matrix_word(a.word)
    sizes = _ints(a.sizes)
    diag = _measure(a.diag) if a.diag else None
    plan = {"word": a.word, "sizes": sizes, "trials": a.trials, "count": a.count, "diag": a.diag}

    def run():
        rows = randmat.asymptotic_freeness_report(word, sizes, a.trials, a.seed, a.count, diag, a.threads)
        return Table(["n", "mean", "stderr", "prediction", "gap"],
                     [(r.n, r.mean, r.stderr, r.prediction, r.gap) for r in rows])

    return plan, run


def cmd_randmat_spectrum(a):
    plan = {"n": a.n, "trial": a.trial}

    def run():
        (x,) = randmat.sample_matrices(randmat.GaussianEnsemble(a.n, 1, a.seed), a.trial)
        ev = randmat.spectrum(x)
        return Table(["index", "eigenvalue"], list(enumerate(ev.tolist())))

    return plan, run


def cmd_chi_single(a):
    mu = _measure(a.measure)
    plan = {"measure": mu.to_json()}

    def run():
        chi = entropy.chi_single(mu)
        t = Table(["chi", "log_energy"], [(chi, spectral.log_energy(mu))])
        t.numeric_failure = chi == -math.inf
        return t

    return plan, run


def cmd_microstates(a):
    cells = _schedule(a.schedule, 1)
    degree = max(max(c.m for c in cells), 2)
    target = _target(a.target, degree)
    cells = [entropy.MicrostateParams(c.m, c.k, c.eps, c.R, target.generators) for c in cells]
    plan = {"cells": [vars(c) for c in cells], "samples": a.samples, "region": a.region}

    def run():
        res = entropy.chi_mc(target, cells, a.samples, a.seed, a.region, a.threads)
        t = Table(list(entropy.CSV_COLUMNS), [c.row() for c in res.cells], {"chi_schedule": res.value})
        t.numeric_failure = any(c.censored for c in res.cells)
        return t

    return plan, run


def cmd_delta(a):
    eps = _floats(a.eps_list)
    text = a.target.strip()
    obj = None
    if text.startswith("{") or os.path.exists(text):
        obj = _load_json(text, "--target")
    if obj is not None and "moments" in obj:
        target = MomentState.from_json(obj)
    else:
        target = spectral.measure_from_json(obj) if obj is not None else spectral.parse_measure(text)
    cfg = entropy.DeltaConfig(m=a.m, k=a.k, tol=a.tol, R=a.R, samples=a.samples, seed=a.seed)
    plan = {"eps": eps, "config": vars(cfg)}

    def run():
        d = entropy.delta_estimate(target, eps, cfg)
        rows = [(e, c, r) for e, c, r in zip(d.eps, d.chi, d.ratios)]
        t = Table(["eps", "chi", "ratio"], rows, {"delta": d.value, "path": d.path, "clamped": d.clamped})
        t.numeric_failure = any(c == -math.inf for c in d.chi)
        return t

    return plan, run


def cmd_bound(a):
    plan = {"n": a.n, "c2": a.c2}
    return plan, lambda: Table(["n", "c2", "bound"], [(a.n, a.c2, entropy.chi_upper_bound(a.n, a.c2))])


def _element(words):
    el = groupalg.GroupAlgebraElement()
    for w in words:
        el = el + groupalg.GroupAlgebraElement.of(groupalg.GroupWord.parse(w))
    return el


def cmd_group_trace(a):
    words = [groupalg.GroupWord.parse(w) for w in a.word]
    plan = {"words": [str(w) for w in words]}
    return plan, lambda: Table(
        ["word", "reduced", "trace"],
        [(raw, str(w), groupalg.canonical_trace(groupalg.GroupAlgebraElement.of(w))) for raw, w in zip(a.word, words)],
    )


def cmd_group_expect(a):
    el = _element(a.word)
    sub = [groupalg._NAMES.index(g) for g in a.subgroup.replace(",", " ").split()]
    plan = {"element": repr(el), "subgroup": a.subgroup}

    def run():
        e = groupalg.conditional_expectation(el, sub)
        rows = sorted(((str(g), c) for g, c in e.terms.items()), key=lambda t: (len(t[0]), t[0]))
        return Table(["word", "coeff"], rows)

    return plan, run


def cmd_compress(a):
    return {"r": a.r, "n": a.n}, lambda: Table(["r", "n", "param"], [(a.r, a.n, groupalg.compress_param(a.r, a.n))])


def cmd_freeprod(a):
    return {"r": a.r, "s": a.s}, lambda: Table(["r", "s", "param"], [(a.r, a.s, groupalg.free_product_param(a.r, a.s))])


# --------------------------------------------------------------------------
# parser


def _default_seed():
    env = os.environ.get("FREEPROB_SEED")
    return int(env) if env else _rng.DEFAULT_SEED


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=_default_seed(), help="run seed (env FREEPROB_SEED)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--output", "-o", help="write here instead of stdout")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--dry-run", action="store_true", help="validate and print the plan only")
    p.add_argument("--config", help="JSON file of option values")
    return p


def build_parser():
    parser = argparse.ArgumentParser(prog="freeprob", description="Free probability workbench.")
    parser.add_argument("--version", action="version", version=f"freeprob {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    leaves = {}

    def leaf(group, name, fn, **kw):
        # fresh parent each time: set_defaults mutates shared actions
        p = group.add_parser(name, parents=[_common()], **kw)
        p.set_defaults(func=fn)
        leaves[p.prog] = p
        return p

    def family(name, help_):
        p = sub.add_parser(name, help=help_)
        return p.add_subparsers(dest="action", required=True)

    p = leaf(sub, "moments", cmd_moments, help="evaluate a moment state or a measure")
    p.add_argument("--state")
    p.add_argument("--word", action="append")
    p.add_argument("--measure")
    p.add_argument("--degree", type=int, default=8)

    fr = family("freeness", "freeness checks and the free CLT")
    p = leaf(fr, "check", cmd_freeness_check)
    p.add_argument("--state")
    p.add_argument("--builtin", choices=["free-semicircular", "tensor-bernoulli", "group-F2", "group-F3"])
    p.add_argument("--blocks", help='e.g. "0|1" or "0,1|2"')
    p.add_argument("--degree", type=int, default=4)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(format="json")
    p = leaf(fr, "clt", cmd_freeness_clt)
    p.add_argument("--marginal", choices=["bernoulli", "semicircular"], default="bernoulli")
    p.add_argument("--state")
    p.add_argument("--n", default="1,2,4,8,16")
    p.add_argument("--degree", type=int, default=4)

    fk = family("fock", "truncated Fock space oracle")
    p = leaf(fk, "moments", cmd_fock_moments)
    p.add_argument("--degree", type=int, default=12)
    p = leaf(fk, "identity", cmd_fock_identity)
    p.add_argument("--level", type=int, default=4)
    p.add_argument("--h1", default="1,0")
    p.add_argument("--h2", default="1,0")

    rm = family("randmat", "Gaussian random matrices")
    p = leaf(rm, "report", cmd_randmat_report)
    p.add_argument("--word", default="X1 X2 X1 X2")
    p.add_argument("--sizes", default="64,128,256,512")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--count", type=int, default=None, help="number of independent matrices")
    p.add_argument("--diag", help="measure for the deterministic diagonal D")
    p = leaf(rm, "spectrum", cmd_randmat_spectrum)
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--trial", type=int, default=0)

    en = family("entropy", "free entropy")
    p = leaf(en, "chi-single", cmd_chi_single)
    p.add_argument("--measure", required=True)
    p = leaf(en, "microstates", cmd_microstates)
    p.add_argument("--target", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--region", choices=["auto", "cube", "ball"], default="auto")
    p = leaf(en, "delta", cmd_delta)
    p.add_argument("--target", required=True)
    p.add_argument("--eps-list", default="0.1,0.01,0.001")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--tol", type=float, default=0.1)
    p.add_argument("--R", type=float, default=3.0)
    p.add_argument("--samples", type=int, default=20000)
    p = leaf(en, "bound", cmd_bound)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--c2", type=float, default=0.25)

    ga = family("groupalg", "free group algebra")
    p = leaf(ga, "trace", cmd_group_trace)
    p.add_argument("--word", action="append", required=True)
    p = leaf(ga, "expect", cmd_group_expect)
    p.add_argument("--word", action="append", required=True, help="summed with coefficient 1")
    p.add_argument("--subgroup", required=True, help='generators, e.g. "a"')

    pa = family("params", "interpolated free group factor parameters")
    p = leaf(pa, "compress", cmd_compress)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p = leaf(pa, "freeprod", cmd_freeprod)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--s", type=float, required=True)

    return parser, leaves


def _apply_config(parser, leaves, argv):
    args = parser.parse_args(argv)
    if not args.config:
        return args
    obj = _load_json(args.config, "--config")
    if not isinstance(obj, dict):
        raise InputError("--config must hold a JSON object")
    prog = next(p for p in leaves.values() if p.get_default("func") is args.func)
    dests = {act.dest for act in prog._actions} - {"help", "config"}
    unknown = set(obj) - dests
    if unknown:
        raise InputError(f"--config: unknown key(s) {sorted(unknown)}")
    prog.set_defaults(**obj)
    return parser.parse_args(argv)


def _meta(args, plan):
    meta = {"command": f"{args.command} {getattr(args, 'action', '')}".strip().replace(" ", ":"),
            "seed": args.seed}
    for k, v in plan.items():
        meta[k] = json.dumps(v, sort_keys=True, separators=(",", ":")) if isinstance(v, (list, dict)) else v
    return meta


def run(argv=None, stdout=None):
    """Entry point; returns the exit status."""
    stdout = stdout or sys.stdout
    parser, leaves = build_parser()
    try:
        args = _apply_config(parser, leaves, argv)
        plan, thunk = args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (InputError, ValueError, KeyError, TypeError) as exc:
        print(f"freeprob: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.dry_run:
        stdout.write(json.dumps({"command": _meta(args, {})["command"], "seed": args.seed, "plan": plan},
                                indent=2, default=str) + "\n")
        return EXIT_OK
    try:
        table = thunk()
    except (InputError, ValueError, KeyError) as exc:
        print(f"freeprob: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    table.meta = {**_meta(args, plan), **table.meta}
    if table.report is not None and args.format == "json":
        text = json.dumps(table.report, indent=2) + "\n"
    else:
        text = render(table, args.format)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return EXIT_NUMERIC if table.numeric_failure else EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
