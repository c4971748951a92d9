"""Command line interface: ``condmap {sample|verify|experiment|stats}``."""

from __future__ import annotations

import argparse
import hashlib
import json
import shutil
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from . import gw
from .bijections import bdg_inverse
from .io import dumps_bin, dumps_json
from .labels import label_process, sample_mobile
from .rng import RNG_ALGORITHM, replicate_rng
from .stats import (RegimeError, run_degree_profile, run_k_trend, run_label_moments,
                    run_lemma_dis, run_prop_scgw, run_prop_super, run_thm_dinv, run_thm_inv)
from .trees import SamplerCapError, get_sampler, sample_tree, sampler_cap
from .verify import CHECKS, run_verify
from .weights import WeightSequence, analyze

EXPERIMENTS = ("prop-scgw", "prop-super", "thm-inv", "thm-dinv", "lemma-dis", "k-trend",
               "label-moments", "degree-profile")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _ints(text: str) -> list[int]:
    return [int(float(x)) for x in text.split(",") if x]


def _family(text: str) -> WeightSequence:
    try:
        return WeightSequence.from_spec(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


# -- sample -------------------------------------------------------------------


def _draw(kind: str, n: int, ws: WeightSequence, seed: int, r: int):
    rng = replicate_rng(seed, r)
    if kind == "tree":
        return sample_tree(n, ws, rng)
    m = sample_mobile(n, ws, rng)
    if kind == "mobile":
        return m
    if kind == "trace":
        return label_process(m)
    return bdg_inverse(m, check=False)


def cmd_sample(args) -> int:
    ws = args.family
    if args.n > sampler_cap():
        raise SamplerCapError(f"n={args.n} exceeds the sampler cap {sampler_cap()}; "
                              "raise it with CONDMAP_CAP_N")
    get_sampler(args.n, ws)  # build tables before anything is written
    out = Path(args.out)
    ext = "bin" if args.format == "bin" else "json"
    encode = dumps_bin if args.format == "bin" else (lambda o: dumps_json(o).encode())

    def one(r):
        return encode(_draw(args.kind, args.n, ws, args.seed, r))

    if args.threads > 1:
        with ThreadPoolExecutor(args.threads) as ex:
            blobs = list(ex.map(one, range(args.reps)))
    else:
        blobs = [one(r) for r in range(args.reps)]

    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".condmap-", dir=out.parent))
    try:
        files = []
        for r, blob in enumerate(blobs):
            name = f"{args.kind}_{r:05d}.{ext}"
            (tmp / name).write_bytes(blob)
            files.append({"file": name, "replicate": r, "sha256": _sha256(blob)})
        manifest = {
            "schema_version": 1,
            "command": "sample",
            "version": __version__,
            "family": ws.spec,
            "n": args.n,
            "reps": args.reps,
            "seed": args.seed,
            "kind": args.kind,
            "format": args.format,
            "rng": RNG_ALGORITHM,
            "files": files,
        }
        (tmp / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        out.mkdir(parents=True, exist_ok=True)
        clash = [f["file"] for f in files if (out / f["file"]).exists()]
        if clash and not args.overwrite:
            raise FileExistsError(f"{out / clash[0]} exists; pass --overwrite to replace")
        for p in sorted(tmp.iterdir()):
            p.replace(out / p.name)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
    print(f"wrote {len(files)} {args.kind} files and manifest.json to {out}")
    return 0


# -- verify -------------------------------------------------------------------


def cmd_verify(args) -> int:
    report = run_verify(args.checks or None,
                        progress=(lambda s: print(s, file=sys.stderr)) if not args.quiet else None)
    payload = json.dumps(report.to_dict(), indent=2, sort_keys=True, default=str)
    if args.report:
        Path(args.report).write_text(payload + "\n")
    else:
        print(payload)
    if not report.ok:
        first = next(c for c in report.checks if c.gating and not c.passed)
        print(f"verify failed: {first.name}; first counterexample: "
              f"{json.dumps(first.counterexample, default=str)}", file=sys.stderr)
        return 1
    return 0


# -- experiment ---------------------------------------------------------------


def cmd_experiment(args) -> int:
    name, ws = args.name, args.family
    common = dict(reps=args.reps, seed=args.seed, threads=args.threads)
    if name == "prop-scgw":
        res = run_prop_scgw(ws, args.n, tightness_n=args.tightness_n, **common)
    elif name == "prop-super":
        if ws.kind != "factorial":
            raise RegimeError("prop-super needs a factorial:alpha=... family")
        res = run_prop_super(ws.params["alpha"], args.n, **common)
    elif name == "thm-inv":
        res = run_thm_inv(ws, args.n, t_grid=args.t_grid, **common)
    elif name == "thm-dinv":
        res = run_thm_dinv(ws, args.n, oracle_m=args.oracle_m, oracle_draws=args.oracle_draws,
                           **common)
    elif name == "lemma-dis":
        res = run_lemma_dis(ws, args.n, **common)
    elif name == "k-trend":
        res = run_k_trend(ws, args.ns or [args.n], **common)
    elif name == "label-moments":
        res = run_label_moments(ws, args.ns or [args.n], trees=args.reps,
                                resamples=args.resamples, seed=args.seed, threads=args.threads)
    else:
        res = run_degree_profile(ws, args.n, **common)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{name}_{args.seed}"
    (out / f"{stem}.json").write_text(res.to_json() + "\n")
    (out / f"{stem}.csv").write_text(res.rows_csv())
    print(res.to_json())
    return 0


# -- stats --------------------------------------------------------------------


def cmd_stats(args) -> int:
    ws = args.family
    rep = analyze(ws)
    payload = {"schema_version": 1, "family": ws.spec, "regime": rep.to_dict()}
    if args.gw:
        try:
            base = ws
            try:
                Z = gw.solve_Z(ws)
            except gw.NotAdmissibleError:
                base = gw.probability_tilt(ws)
                Z = gw.solve_Z(base)
            spec = gw.tilt(base, Z)
            info = {"Z": Z, "tilted_from": base.spec, "p0": spec.p0, "mean": spec.mean,
                    "variance": spec.variance, "tail_mass": spec.tail_mass}
            if 0 < spec.p0 < 1 and spec.mean <= 1:
                xi = gw.xi0_law(spec)
                info.update(xi0_mean=xi.mean, xi0_tail_mass=xi.tail_mass)
            payload["galton_watson"] = info
        except gw.NotAdmissibleError as exc:
            payload["galton_watson"] = {"error": str(exc)}
    text = json.dumps(payload, indent=2, sort_keys=True, default=str)
    print(text)
    return 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="condmap", description=__doc__)
    p.add_argument("--version", action="version", version=f"condmap {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="draw trees, mobiles, maps or label traces")
    s.add_argument("--family", type=_family, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--reps", type=int, default=1)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--kind", choices=("map", "mobile", "tree", "trace"), default="map")
    s.add_argument("--format", choices=("json", "bin"), default="json")
    s.add_argument("--out", default="samples")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--overwrite", action="store_true")
    s.set_defaults(func=cmd_sample)

    v = sub.add_parser("verify", help="run the exhaustive exact checks")
    v.add_argument("--checks", nargs="*", choices=list(CHECKS))
    v.add_argument("--report", help="write the JSON report here instead of stdout")
    v.add_argument("--quiet", action="store_true")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("experiment", help="run a Monte Carlo experiment")
    e.add_argument("name", choices=EXPERIMENTS)
    e.add_argument("--family", type=_family, required=True)
    e.add_argument("--n", type=int, default=1000)
    e.add_argument("--ns", type=_ints, help="comma-separated sizes (k-trend, label-moments)")
    e.add_argument("--reps", type=int, default=100)
    e.add_argument("--seed", type=int, required=True)
    e.add_argument("--t-grid", type=_floats, default=[0.25, 0.5, 0.75])
    e.add_argument("--tightness-n", type=int)
    e.add_argument("--oracle-m", type=int, default=10_000)
    e.add_argument("--oracle-draws", type=int, default=500)
    e.add_argument("--resamples", type=int, default=20)
    e.add_argument("--out", default="results")
    e.add_argument("--threads", type=int, default=1)
    e.set_defaults(func=cmd_experiment)

    st = sub.add_parser("stats", help="regime and Galton-Watson summary of a weight family")
    st.add_argument("--family", type=_family, required=True)
    st.add_argument("--gw", action="store_true", help="include the tilted offspring law")
    st.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be at least 1")
    for key in ("n", "reps"):
        if getattr(args, key, 1) < 1:
            parser.error(f"--{key} must be positive")
    try:
        return args.func(args)
    except (SamplerCapError, RegimeError, FileExistsError, OSError) as exc:
        print(f"condmap: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
