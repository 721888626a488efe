"""Batch front end: ``qls analyze``, ``qls simulate`` and ``qls gbv gen``.

Problem files are JSON::

    {
      "structure": {"dims": [2, 2, 2], "neighborhoods": [[0, 1], [1, 2]]},
      "state": {"named": {"name": "ghz", "n": 3}},
      "options": {"seed": 7, "trials": 20}
    }

``state`` holds exactly one of ``amplitudes`` (list of ``[re, im]`` pairs in
the mixed-radix basis, subsystem 0 most significant), ``gbv`` (a GBV spec;
its ``structure`` defaults to the problem's) or ``named``
(``product | ghz | w | bell_chain`` plus parameters).

Exit codes: 0 success, 2 input error, 3 dimension cap exceeded.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import asymptotic_simulation, cooling_maps, permutation_robustness_test
from .fixtures import named_state, random_density
from .gbv import GbvError, GbvSpec, build_gbv_state, validate_gbv_spec
from .hypergraph import NeighborhoodStructure, validate_structure
from .stabilization import rfts_verdict
from .tensor import DEFAULT_TOL, PureState, Tolerances

BASIS = "mixed-radix over dims, subsystem 0 most significant"
DEFAULT_MAX_DIM = 4096
REPORT_FORMAT = "qlstab-report/1"
PROBLEM_FORMAT = "qlstab-problem/1"


class InputError(Exception):
    exit_code = 2


class ResourceError(Exception):
    exit_code = 3


def _require(d, key: str, where: str):
    if not isinstance(d, dict):
        raise InputError(f"{where} must be an object")
    if key not in d:
        raise InputError(f"missing field '{where}.{key}'" if where else f"missing field '{key}'")
    return d[key]


def _load_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc})") from exc


def _decode_amplitudes(pairs, where: str) -> np.ndarray:
    try:
        return np.array([complex(float(re), float(im)) for re, im in pairs])
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where} must be a list of [re, im] pairs") from exc


def encode_amplitudes(v) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v).reshape(-1)]


def max_dim(flag: int | None = None) -> int:
    if flag is not None:
        return flag
    env = os.environ.get("QLS_MAX_DIM")
    if env:
        try:
            return int(env)
        except ValueError:
            raise InputError(f"QLS_MAX_DIM must be an integer, got {env!r}") from None
    return DEFAULT_MAX_DIM


def parse_structure(d) -> NeighborhoodStructure:
    s = _require(d, "structure", "")
    dims = _require(s, "dims", "structure")
    nbs = _require(s, "neighborhoods", "structure")
    try:
        ns = NeighborhoodStructure(dims, nbs)
    except (TypeError, ValueError) as exc:
        raise InputError(f"structure: {exc}") from exc
    res = validate_structure(ns)
    if not res:
        raise InputError(f"structure: {res.message}")
    return ns


def parse_tolerances(options: dict, overrides: dict | None = None) -> Tolerances:
    tol = DEFAULT_TOL
    given = dict(options.get("tolerances", {}))
    given.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = set(given) - set(tol.to_dict())
    if unknown:
        raise InputError(f"unknown tolerance(s): {sorted(unknown)}")
    return tol.with_(**given)


def parse_state(d, ns: NeighborhoodStructure, tol: Tolerances) -> PureState:
    st = _require(d, "state", "")
    if not isinstance(st, dict):
        raise InputError("state must be an object")
    sources = [k for k in ("amplitudes", "gbv", "named") if k in st]
    if len(sources) != 1:
        raise InputError("state needs exactly one of 'amplitudes', 'gbv', 'named'")
    src = sources[0]
    if src == "amplitudes":
        v = _decode_amplitudes(st["amplitudes"], "state.amplitudes")
        if v.size != ns.total_dim:
            raise InputError(f"state.amplitudes has {v.size} entries, expected {ns.total_dim}")
        try:
            return PureState.from_vector(ns.dims, v, normalize=bool(st.get("normalize", False)), tol=tol)
        except ValueError as exc:
            raise InputError(f"state.amplitudes: {exc}") from exc
    if src == "gbv":
        g = dict(st["gbv"])
        g.setdefault("structure", ns.to_dict())
        spec = parse_gbv(g, "state.gbv")
        if spec.base != ns:
            raise InputError("state.gbv.structure differs from the problem structure")
        res = validate_gbv_spec(spec, tol)
        if not res:
            raise InputError(f"state.gbv: {res.message}")
        return build_gbv_state(spec, tol)
    named = dict(st["named"])
    name = _require(named, "name", "state.named")
    params = {k: v for k, v in named.items() if k != "name"}
    try:
        psi = named_state(name, **params)
    except (TypeError, ValueError) as exc:
        raise InputError(f"state.named: {exc}") from exc
    if psi.dims != ns.dims:
        raise InputError(f"state.named produces dims {list(psi.dims)}, structure has {list(ns.dims)}")
    return psi


def parse_gbv(d, where: str = "spec") -> GbvSpec:
    for key in ("structure", "particles", "groups", "factor_states"):
        _require(d, key, where)
    try:
        return GbvSpec.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{where}: malformed GBV spec ({exc})") from exc


def load_problem(path, dim_cap: int, tol_overrides: dict | None = None):
    d = _load_json(path)
    ns = parse_structure(d)
    if ns.total_dim > dim_cap:
        raise ResourceError(f"total dimension {ns.total_dim} exceeds cap {dim_cap} (set QLS_MAX_DIM or --max-dim)")
    options = d.get("options", {})
    if not isinstance(options, dict):
        raise InputError("options must be an object")
    tol = parse_tolerances(options, tol_overrides)
    psi = parse_state(d, ns, tol)
    return ns, psi, options, tol


def _meta(tol: Tolerances, seed, start: float) -> dict:
    return {
        "tool": "qlstab",
        "version": __version__,
        "tolerances": tol.to_dict(),
        "seed": seed,
        "wall_time": time.perf_counter() - start,
        "notes": [
            "rfts=yes additionally requires a unique ground state; pairwise commutation alone is not sufficient",
            "structures that are not tree-like get rfts=inconclusive",
        ],
    }


def _report(analysis: dict, simulation: dict, meta: dict, ns: NeighborhoodStructure) -> dict:
    return {
        "format": REPORT_FORMAT,
        "basis": BASIS,
        "structure": ns.to_dict(),
        "analysis": analysis,
        "simulation": simulation,
        "meta": meta,
    }


def summary_text(report: dict) -> str:
    a = report["analysis"]
    lines = [
        f"tree-like: {a['structure']['tree_like']} (MO {a['structure']['mo']}, acyclic {a['structure']['acyclic']})",
        f"intersection dim: {a['intersection_dim']}   ground dim: {a['ground_dim']}",
        f"max ||[Pi_j, Pi_k]||_F: {a['max_commutator_norm']:.3e}",
        f"QLS: {a['qls']}   RFTS: {a['rfts']}   [{', '.join(a['justification'])}]",
    ]
    sim = report.get("simulation") or {}
    if "permutation_test" in sim:
        p = sim["permutation_test"]
        lines.append(f"permutation test: {p['n_converged']}/{p['n_trials']} converged, "
                     f"max final distance {p['max_final_distance']:.3e}")
    if "asymptotic" in sim:
        lines.append(f"asymptotic: converged={sim['asymptotic']['converged']} "
                     f"after {sim['asymptotic']['steps_used']} cycles")
    return "\n".join(lines)


def write_report(report: dict, out: str | None, pretty: bool) -> None:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
        if pretty:
            print(summary_text(report))
    else:
        sys.stdout.write(text)
        if pretty:
            print(summary_text(report), file=sys.stderr)


def cmd_analyze(args) -> int:
    start = time.perf_counter()
    ns, psi, options, tol = load_problem(args.file, max_dim(args.max_dim), {"comm": args.tol_comm})
    report = rfts_verdict(psi, ns, tol)
    write_report(_report(report.to_dict(), {}, _meta(tol, None, start), ns), args.out, args.pretty)
    return 0


def run_simulation(psi, ns, tol, trials: int, seed: int, max_cycles: int, initial_states: int = 1,
                   method: str = "commutant") -> dict:
    if trials <= 0:
        return {}
    maps = cooling_maps(psi, ns, method, tol)
    rob = permutation_robustness_test(psi, ns, trials, seed, initial_states, maps=maps, tol=tol)
    rng = np.random.default_rng([seed, 1])
    asym = asymptotic_simulation(psi, ns, random_density(ns.total_dim, rng), max_cycles, maps=maps, tol=tol)
    return {
        "method": method,
        "trivial_maps": [E.tag for E in maps if E.trivial],
        "permutation_test": rob.to_dict(),
        "asymptotic": asym.to_dict(),
    }


def cmd_simulate(args) -> int:
    start = time.perf_counter()
    ns, psi, options, tol = load_problem(args.file, max_dim(args.max_dim), {"comm": args.tol_comm})

    def opt(name, flag, default):
        return flag if flag is not None else options.get(name, default)

    trials = int(opt("trials", args.trials, 20))
    seed = int(opt("seed", args.seed, 0))
    cycles = int(opt("max_cycles", args.max_cycles, 50))
    inits = int(opt("initial_states", args.initial_states, 1))
    method = opt("method", args.method, "commutant")
    if method not in ("commutant", "reduced"):
        raise InputError(f"unknown cooling method {method!r}")
    analysis = rfts_verdict(psi, ns, tol).to_dict()
    sim = run_simulation(psi, ns, tol, trials, seed, cycles, inits, method)
    if sim and analysis["rfts"] == "yes" and not sim["permutation_test"]["passed"]:
        # the analysis says yes but the constructed maps did not stabilize
        sim["discrepancy"] = True
    write_report(_report(analysis, sim, _meta(tol, seed, start), ns), args.out, args.pretty)
    return 0


def cmd_gbv_gen(args) -> int:
    d = _load_json(args.spec)
    spec = parse_gbv(d)
    res = validate_gbv_spec(spec)
    if not res:
        raise InputError(f"invalid GBV spec: {res.message}")
    if spec.base.total_dim > max_dim(args.max_dim):
        raise ResourceError(f"total dimension {spec.base.total_dim} exceeds cap")
    try:
        psi = build_gbv_state(spec)
    except GbvError as exc:
        raise InputError(str(exc)) from exc
    problem = {
        "format": PROBLEM_FORMAT,
        "basis": BASIS,
        "structure": spec.base.to_dict(),
        "state": {"amplitudes": encode_amplitudes(psi.amplitudes)},
        "options": {},
    }
    text = json.dumps(problem, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qls", description="Quasi-local stabilizability analysis of pure states.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("--pretty", action="store_true", help="also print a text summary")
    common.add_argument("--tol-comm", type=float, help="relative commutation tolerance (times D)")
    common.add_argument("--max-dim", type=int, help="dimension cap (default $QLS_MAX_DIM or 4096)")

    a = sub.add_parser("analyze", parents=[common], help="structure checks and QLS/RFTS verdicts")
    a.add_argument("file")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", parents=[common], help="simulate cooling maps")
    s.add_argument("file")
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--max-cycles", type=int)
    s.add_argument("--initial-states", type=int, help="random initial states per permutation")
    s.add_argument("--method", choices=["commutant", "reduced"])
    s.set_defaults(func=cmd_simulate)

    g = sub.add_parser("gbv", help="GBV state tools")
    gsub = g.add_subparsers(dest="gbv_command", required=True)
    gen = gsub.add_parser("gen", help="build a GBV state and emit a problem file")
    gen.add_argument("spec")
    gen.add_argument("--out")
    gen.add_argument("--max-dim", type=int)
    gen.set_defaults(func=cmd_gbv_gen)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ResourceError) as exc:
        print(f"qls: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
