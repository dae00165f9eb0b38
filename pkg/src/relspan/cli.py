"""Single entry point: builders, shadow tools, attacks, certification.

Every output file sits beside a JSON sidecar holding the construction
metadata and a run manifest (resolved parameters, seeds, input hashes,
artifact version).  Reruns with an equal manifest produce byte-identical
edge lists.  Exit codes: 0 success, 1 certification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import harness
from .expanders import (build_bipartite_expander, build_reliable_connectivity,
                        build_strong_expander, build_verified_bipartite,
                        verify_connectivity_sampled, verify_expansion_sampled,
                        verify_strong_expansion, verify_strong_sampled)
from .graph_core import PointSet, WeightedGraph, load_edge_list, load_points
from .harness import AttackSpec, certify, generate_attack, loss_curve, write_loss_csv
from .lso import build_ordering_family, check_lso_property, family_shape
from .quadtree import build_quadtree, normalize_unit
from .shadow import (as_fraction, check_shadow_bounds, cone_mark_unsafe,
                     shadow_1d, shadow_balls_oracle, shadow_quadtree)
from .spanner1d import build_G_theta, build_H, g_theta_crossover
from .spanner_euclidean import build_bounded_spread_spanner, build_hd_spanner
from .streams import substream


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _manifest(args, params: dict, inputs: list) -> dict:
    return {
        "command": args.command,
        "argv": list(getattr(args, "_argv", [])),
        "params": _jsonable(params),
        "input_hashes": {str(p): _sha256(p) for p in inputs if p},
        "artifact_version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def save_graph(g: WeightedGraph, out: str, manifest: dict) -> None:
    g.save_edges(out)
    sidecar = {
        "n": g.n,
        "meta": _jsonable(g.meta),
        "positions": g.positions.tolist() if g.positions is not None else None,
        "manifest": manifest,
    }
    Path(out + ".json").write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")


def load_graph(path: str) -> WeightedGraph:
    sidecar = json.loads(Path(path + ".json").read_text(encoding="utf-8"))
    positions = (np.asarray(sidecar["positions"], dtype=np.float64)
                 if sidecar.get("positions") is not None else None)
    meta = sidecar["meta"]
    return load_edge_list(path, n=sidecar["n"], positions=positions,
                          line=bool(meta.get("line")), meta=meta)


def _load_bad(path, n: int) -> np.ndarray:
    ids = [int(tok) for tok in Path(path).read_text(encoding="utf-8").split()]
    arr = np.unique(np.asarray(ids, dtype=np.int64))
    if arr.size and (arr[0] < 0 or arr[-1] >= n):
        raise ValueError("failure id out of range")
    return arr


def _write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(_jsonable(payload), indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# command handlers
# ---------------------------------------------------------------------------

def _cmd_build(args) -> int:
    if args.target == "1d-const":
        g = build_H(args.n, as_fraction(args.xi), args.seed,
                    degree_constant_override=args.override_c)
        params = {"n": args.n, "xi": args.xi, "seed": args.seed,
                  "override_c": args.override_c}
        inputs = []
    elif args.target == "1d-theta":
        g = build_G_theta(args.n, as_fraction(args.theta), c=args.c, seed=args.seed,
                          mode=args.mode, degree_constant_override=args.override_c)
        params = {"n": args.n, "theta": args.theta, "c": args.c,
                  "mode": args.mode, "seed": args.seed}
        inputs = []
        crossover = g_theta_crossover(as_fraction(args.theta), args.c)
        if g.meta["regime"] != "layered":
            print(f"note: regime={g.meta['regime']}; layered construction needs "
                  f"n >= {crossover} at these parameters", file=sys.stderr)
    elif args.target == "hd":
        pts = load_points(args.points)
        g = build_hd_spanner(pts, args.eps, as_fraction(args.theta),
                             variant=args.variant, seed=args.seed, c2=args.c2,
                             sub_c=args.sub_c, sub_mode=args.sub_mode)
        params = {"points": args.points, "eps": args.eps, "theta": args.theta,
                  "variant": args.variant, "c2": args.c2, "sub_c": args.sub_c,
                  "sub_mode": args.sub_mode, "seed": args.seed}
        inputs = [args.points]
    else:  # bounded-spread
        pts = load_points(args.points)
        g = build_bounded_spread_spanner(pts, args.eps, as_fraction(args.theta),
                                         seed=args.seed)
        params = {"points": args.points, "eps": args.eps, "theta": args.theta,
                  "seed": args.seed}
        inputs = [args.points]
    save_graph(g, args.out, _manifest(args, params, inputs))
    print(f"built {g.meta['kind']}: n={g.n} edges={g.edge_count} -> {args.out}")
    return 0


def _cmd_expander(args) -> int:
    verify_req = args.verify
    if args.flavor == "bipartite":
        if verify_req == "exhaustive":
            g, attempts, res = build_verified_bipartite(
                args.left, args.right, as_fraction(args.xi), args.seed,
                max_attempts=args.max_attempts,
                degree_constant_override=args.override_c)
        else:
            g = build_bipartite_expander(args.left, args.right, as_fraction(args.xi),
                                         args.seed, degree_constant_override=args.override_c)
            if verify_req and verify_req.startswith("sampled"):
                k = int(verify_req.split(":")[1]) if ":" in verify_req else 200
                sides = (np.arange(args.left), np.arange(args.left, args.left + args.right))
                g.meta["verify"] = verify_expansion_sampled(
                    g, sides, as_fraction(args.xi), k, seed=args.seed).as_dict()
        params = {"left": args.left, "right": args.right, "xi": args.xi,
                  "seed": args.seed, "verify": verify_req}
    elif args.flavor == "strong":
        g = build_strong_expander(args.n, args.alpha, as_fraction(args.beta),
                                  args.seed, degree_constant_override=args.override_c)
        if verify_req == "exhaustive":
            g.meta["verify"] = verify_strong_expansion(
                g, args.alpha, as_fraction(args.beta)).as_dict()
        elif verify_req and verify_req.startswith("sampled"):
            k = int(verify_req.split(":")[1]) if ":" in verify_req else 200
            g.meta["verify"] = verify_strong_sampled(
                g, args.alpha, as_fraction(args.beta), k, seed=args.seed).as_dict()
        params = {"n": args.n, "alpha": args.alpha, "beta": args.beta,
                  "seed": args.seed, "verify": verify_req}
    else:  # reliable
        g = build_reliable_connectivity(args.n, as_fraction(args.theta), args.seed,
                                        degree_constant_override=args.override_c)
        if verify_req and verify_req.startswith("sampled"):
            k = int(verify_req.split(":")[1]) if ":" in verify_req else 100
            g.meta["verify"] = verify_connectivity_sampled(
                g, as_fraction(args.theta), k, seed=args.seed).as_dict()
        params = {"n": args.n, "theta": args.theta, "seed": args.seed,
                  "verify": verify_req}
    save_graph(g, args.out, _manifest(args, params, []))
    verdict = g.meta.get("verify", {}).get("passed")
    suffix = f" verify={verdict}" if verdict is not None else ""
    print(f"built {g.meta['kind']}: n={g.n} edges={g.edge_count}{suffix}")
    return 0


def _cmd_shadow(args) -> int:
    if args.variant == "1d":
        bad = _load_bad(args.bad, args.n)
        res = shadow_1d(args.n, bad, as_fraction(args.alpha), side=args.side,
                        witness=True)
        payload = {
            "members": res.members,
            "witnesses": {int(k): list(v) for k, v in (res.witnesses or {}).items()},
            "bound_checks": check_shadow_bounds(res, bad),
        }
    elif args.variant == "quadtree":
        pts = load_points(args.points)
        bad = _load_bad(args.bad, pts.n)
        normed, _, _ = normalize_unit(pts.coords)
        tree = build_quadtree(normed, already_normalized=True)
        res = shadow_quadtree(tree, bad, as_fraction(args.gamma))
        payload = {"members": res.members,
                   "shadowed_nodes": res.shadowed_nodes,
                   "maximal_nodes": res.maximal_nodes}
    elif args.variant == "balls":
        pts = load_points(args.points)
        bad = _load_bad(args.bad, pts.n)
        res = shadow_balls_oracle(pts, bad, as_fraction(args.alpha))
        payload = {"members": res.members}
    else:  # cones
        pts = load_points(args.points)
        bad = _load_bad(args.bad, pts.n)
        unsafe = cone_mark_unsafe(pts, bad, as_fraction(args.alpha))
        payload = {"members": unsafe}
    _write_json(args.out, payload)
    print(f"shadow {args.variant}: {len(payload['members'])} members -> {args.out}")
    return 0


def _cmd_attack(args) -> int:
    g = load_graph(args.graph)
    spec = AttackSpec(args.kind, args.k, args.seed)
    bad = generate_attack(spec, g)
    Path(args.out).write_text("\n".join(str(v) for v in bad.tolist()) + "\n",
                              encoding="utf-8")
    print(f"attack {args.kind}: |B|={bad.size} -> {args.out}")
    return 0


def _cmd_certify(args) -> int:
    g = load_graph(args.graph)
    bad = _load_bad(args.bad, g.n) if args.bad else np.empty(0, dtype=np.int64)
    report = certify(g, bad, pair_budget=args.pairs, seed=args.seed)
    payload = report.as_dict()
    payload["manifest"] = _manifest(args, {"graph": args.graph, "bad": args.bad,
                                           "pairs": args.pairs, "seed": args.seed},
                                    [args.graph, args.bad])
    if args.out:
        _write_json(args.out, payload)
    status = "PASS" if report.passed else "FAIL"
    print(f"certify: {status} |B|={report.k} |B+|={report.bplus_size} "
          f"bound={report.bound:.1f} failing={report.failing_outside}")
    return 0 if report.passed else 1


def _cmd_loss_curve(args) -> int:
    g = load_graph(args.graph)
    k_list = [int(tok) for tok in args.k_list.split(",") if tok]
    rows = loss_curve(g, args.kind, k_list, args.trials, seed=args.seed,
                      pair_budget=args.pairs)
    write_loss_csv(rows, args.out)
    worst = max((r["ratio"] for r in rows if r["trial"] == "aggregate"), default=0.0)
    print(f"loss-curve: {len(rows)} rows, worst |B+|/k = {worst:.2f} -> {args.out}")
    return 0


def _cmd_lso(args) -> int:
    if args.action == "inspect":
        family = build_ordering_family(args.d, args.sigma)
        shape = family.shape
        print(f"M = {family.M}")
        print(f"shift lattice: {shape['lattice']}^{args.d} over denominator "
              f"{shape['lattice_denominator']}, {shape['reflections']} reflections")
        print(f"step scales t = {shape['t_min']}..{shape['t_max']}, "
              f"offset band [{shape['band'][0]:.2f}, {shape['band'][1]:.2f}]")
        return 0
    # check
    pts = load_points(args.points)
    family = build_ordering_family(pts.d, args.sigma)
    rng = substream(args.seed, "lso-cli")
    found = 0
    for trial in range(args.pairs):
        i, j = rng.choice(pts.n, size=2, replace=False)
        res = check_lso_property(family, pts.coords[i], pts.coords[j],
                                 sample_count=args.samples, points=pts,
                                 seed=args.seed + trial)
        found += res.ok
    rate = found / args.pairs
    print(f"lso check: {found}/{args.pairs} pairs found a witness ({rate:.1%}), M={family.M}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spanner",
        description="Reliable geometric spanners: builders, shadows, attacks, certification.")
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("SPANNER_THREADS", "1")),
                        help="worker cap for harness sweeps (env SPANNER_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="build a spanner")
    b = p_build.add_subparsers(dest="target", required=True)
    p = b.add_parser("1d-const", help="block-tree 1D exact spanner")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--xi", default="1/16")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--override-c", type=int, default=None)
    p.add_argument("-o", "--out", required=True)
    p = b.add_parser("1d-theta", help="shifted-interval 1D exact spanner")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--theta", required=True)
    p.add_argument("--c", type=int, default=512)
    p.add_argument("--mode", choices=["faithful", "experimental"], default="faithful")
    p.add_argument("--override-c", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p = b.add_parser("hd", help="ordering-union spanner")
    p.add_argument("--points", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--theta", required=True)
    p.add_argument("--variant", choices=["simple", "improved"], default="improved")
    p.add_argument("--c2", type=int, default=16)
    p.add_argument("--sub-c", type=int, default=512)
    p.add_argument("--sub-mode", choices=["faithful", "experimental"], default="faithful")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)
    p = b.add_parser("bounded-spread", help="quadtree/WSPD spanner")
    p.add_argument("--points", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--theta", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)

    p_exp = sub.add_parser("expander", help="build an expander")
    e = p_exp.add_subparsers(dest="flavor", required=True)
    p = e.add_parser("bipartite")
    p.add_argument("--left", type=int, required=True)
    p.add_argument("--right", type=int, required=True)
    p.add_argument("--xi", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--verify", default=None)
    p.add_argument("--max-attempts", type=int, default=20)
    p.add_argument("--override-c", type=int, default=None)
    p.add_argument("-o", "--out", required=True)
    p = e.add_parser("strong")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=int, required=True)
    p.add_argument("--beta", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--verify", default=None)
    p.add_argument("--override-c", type=int, default=None)
    p.add_argument("-o", "--out", required=True)
    p = e.add_parser("reliable")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--theta", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--verify", default=None)
    p.add_argument("--override-c", type=int, default=None)
    p.add_argument("-o", "--out", required=True)

    p_sh = sub.add_parser("shadow", help="shadow computations")
    s = p_sh.add_subparsers(dest="variant", required=True)
    p = s.add_parser("1d")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", required=True)
    p.add_argument("--bad", required=True)
    p.add_argument("--side", choices=["left", "right", "both"], default="both")
    p.add_argument("-o", "--out", required=True)
    p = s.add_parser("quadtree")
    p.add_argument("--points", required=True)
    p.add_argument("--gamma", required=True)
    p.add_argument("--bad", required=True)
    p.add_argument("-o", "--out", required=True)
    p = s.add_parser("balls")
    p.add_argument("--points", required=True)
    p.add_argument("--alpha", required=True)
    p.add_argument("--bad", required=True)
    p.add_argument("-o", "--out", required=True)
    p = s.add_parser("cones")
    p.add_argument("--points", required=True)
    p.add_argument("--alpha", required=True)
    p.add_argument("--bad", required=True)
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("attack", help="generate a failure set")
    p.add_argument("--graph", required=True)
    p.add_argument("--kind", required=True,
                   choices=["random", "prefix", "interval", "ball", "greedy-shadow"])
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("certify", help="certify reliability under a failure set")
    p.add_argument("--graph", required=True)
    p.add_argument("--bad", default=None)
    p.add_argument("--pairs", type=int, default=10 ** 6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", default=None)

    p = sub.add_parser("loss-curve", help="loss statistics over attack sweeps")
    p.add_argument("--graph", required=True)
    p.add_argument("--kind", required=True)
    p.add_argument("--k-list", required=True)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--pairs", type=int, default=10 ** 6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", required=True)

    p_lso = sub.add_parser("lso", help="ordering family tools")
    l = p_lso.add_subparsers(dest="action", required=True)
    p = l.add_parser("inspect")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p = l.add_parser("check")
    p.add_argument("--points", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    return parser


_HANDLERS = {
    "build": _cmd_build,
    "expander": _cmd_expander,
    "shadow": _cmd_shadow,
    "attack": _cmd_attack,
    "certify": _cmd_certify,
    "loss-curve": _cmd_loss_curve,
    "lso": _cmd_lso,
}


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args._argv = list(argv)
    harness.set_workers(args.threads)
    try:
        return _HANDLERS[args.command](args)
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
