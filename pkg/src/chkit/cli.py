"""Command-line interface.

Exit codes: 0 for an affirmative result, 1 for a negative result that was
still computed successfully (inconsistent family, incompatible pair,
failed ordered-consistency, empty search), 2 for usage or input errors.
Machine-format reports are canonical JSON (sorted keys, floats rounded to
12 significant digits) and are byte-identical across runs on one
platform for fixed inputs and seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import CHError, ScenarioError
from .family_algebra import are_compatible, generated_family
from .histories import (
    Scenario,
    conditional_probability,
    is_weakly_decoherent,
    probability,
)
from .inference import (
    check_contrary_quadruple,
    find_contrary_inferences,
    is_ordered_consistent,
)
from .scenario_io import certificate_to_scenario, file_digest, load_scenario
from .support_sim import (
    build_support_model,
    check_contrary_supports_disjoint,
    check_occurrence_agreement,
    check_strict_exclusivity,
    check_support_monotonicity,
    check_support_partition,
    classify_support_cases,
    export_systems,
    find_catalog_family,
    frequency_report,
)

STATUS = {0: "ok", 1: "negative", 2: "error"}


def _round12(obj):
    """Round floats to 12 significant digits for stable machine output."""
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    return obj


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="chkit",
        description="Consistent-histories toolkit over scenario files.")
    p.add_argument("--scenario", type=Path, help="scenario JSON document")
    p.add_argument("--tol", type=float, help="override the scenario tolerance")
    p.add_argument("--seed", type=int, help="seed for randomized commands")
    p.add_argument("--format", choices=("human", "machine"), default="human")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check-consistency", help="weak-decoherence check of a family")
    s.add_argument("family")

    s = sub.add_parser("prob", help="occurrence probability of a history")
    s.add_argument("family")
    s.add_argument("history")

    s = sub.add_parser("conditional", help="conditional probability of target given data")
    s.add_argument("family")
    s.add_argument("target")
    s.add_argument("given")

    s = sub.add_parser("generate-family", help="smallest family containing the histories")
    s.add_argument("histories", nargs="+")

    s = sub.add_parser("compatible", help="common consistent refinement test")
    s.add_argument("family_a")
    s.add_argument("family_b")

    s = sub.add_parser("find-contrary", help="randomized contrary-inference search")
    s.add_argument("--dim", type=int, help="Hilbert dimension (default: scenario dim)")
    s.add_argument("--trials", type=int, help="random trials (default: params.trials or 0)")
    s.add_argument("--plant", help="comma-separated projector names tried as leading quadruple")
    s.add_argument("--max-rank", type=int, default=1, help="largest sampled projector rank")
    s.add_argument("--include-marginal", action="store_true",
                   help="also return near-threshold certificates")
    s.add_argument("--write-certs", type=Path,
                   help="file prefix; certificates land in PREFIX000.json, ...")

    s = sub.add_parser("ordered-check", help="weight monotonicity against a family catalog")
    s.add_argument("history")
    s.add_argument("catalog", nargs="+", help="family names")

    s = sub.add_parser("simulate-support", help="ensemble simulation with structural checks")
    s.add_argument("--catalog", required=True, help="comma-separated family names")
    s.add_argument("--weights", required=True, help="comma-separated non-negative weights")
    s.add_argument("--ensemble", type=int, required=True)
    s.add_argument("--contrary",
                   help="e0,e1,f1,e2 projector names for disjoint-support and case analysis")
    s.add_argument("--strict-exclusivity",
                   help="E,F,slot projector names and slot label for the strict mode")
    s.add_argument("--dump-systems", type=Path, help="write a TSV of the raw ensemble")
    return p


def _need_scenario(args) -> Scenario:
    if args.scenario is None:
        raise ScenarioError("this command needs --scenario")
    return load_scenario(args.scenario, args.tol)


def _lookup(table: dict, name: str, kind: str):
    if name not in table:
        raise ScenarioError(f"unknown {kind} '{name}'")
    return table[name]


def _seed(args, scn: Scenario | None) -> int:
    if args.seed is not None:
        return args.seed
    if scn is not None and isinstance(scn.params.get("seed"), int):
        return scn.params["seed"]
    return 0


# ---------------------------------------------------------------------------
# command handlers: return (results, exit_code, human_lines)


def cmd_check_consistency(args):
    scn = _need_scenario(args)
    fam = _lookup(scn.families, args.family, "family")
    rep = is_weakly_decoherent(fam, scn.rho, scn.tol)
    results = {
        "family": args.family,
        "is_weakly_decoherent": rep.is_weakly_decoherent,
        "max_off_diagonal_re": rep.max_off_diagonal_re,
        "n_elementary": len(rep.histories),
        "tol": rep.tol_used,
    }
    verdict = "consistent" if rep.is_weakly_decoherent else "NOT consistent"
    lines = [f"family {args.family}: {verdict} "
             f"(max |Re D| off-diagonal = {_fmt(rep.max_off_diagonal_re)}, "
             f"tol = {_fmt(rep.tol_used)})"]
    return results, (0 if rep.is_weakly_decoherent else 1), lines


def cmd_prob(args):
    scn = _need_scenario(args)
    fam = _lookup(scn.families, args.family, "family")
    h = _lookup(scn.histories, args.history, "history")
    p = probability(h, fam, scn.rho, scn.tol)
    results = {"family": args.family, "history": args.history, "probability": p}
    return results, 0, [f"p({args.history}) in {args.family} = {_fmt(p)}"]


def cmd_conditional(args):
    scn = _need_scenario(args)
    fam = _lookup(scn.families, args.family, "family")
    target = _lookup(scn.histories, args.target, "history")
    given = _lookup(scn.histories, args.given, "history")
    p = conditional_probability(target, given, fam, scn.rho, scn.tol)
    results = {"family": args.family, "target": args.target,
               "given": args.given, "conditional_probability": p}
    return results, 0, [f"p({args.target} | {args.given}) in {args.family} = {_fmt(p)}"]


def cmd_generate_family(args):
    scn = _need_scenario(args)
    hs = [_lookup(scn.histories, n, "history") for n in args.histories]
    fam = generated_family(hs, scn.tol, name="generated")
    slots = []
    for lab, dec in zip(fam.slot_labels, fam.slots):
        slots.append({
            "label": lab,
            "members": [{"label": m.label or "?", "rank": m.rank} for m in dec.members],
        })
    results = {"histories": list(args.histories), "slots": slots,
               "n_elementary": fam.n_elementary()}
    lines = [f"generated family from {', '.join(args.histories)}:"]
    for s in slots:
        members = ", ".join(f"{m['label']} (rank {m['rank']})" for m in s["members"])
        lines.append(f"  slot {s['label']}: {members}")
    lines.append(f"  elementary histories: {results['n_elementary']}")
    return results, 0, lines


def cmd_compatible(args):
    scn = _need_scenario(args)
    fa = _lookup(scn.families, args.family_a, "family")
    fb = _lookup(scn.families, args.family_b, "family")
    res = are_compatible(fa, fb, scn.rho, scn.tol)
    results = {"family_a": args.family_a, "family_b": args.family_b,
               "compatible": res.compatible, "reason": res.reason}
    if res.failing_slot is not None:
        results["failing_slot"] = res.failing_slot
    if res.refined_family is not None:
        rep = is_weakly_decoherent(res.refined_family, scn.rho, scn.tol)
        results["refinement_max_off_diagonal_re"] = rep.max_off_diagonal_re
    verdict = "compatible" if res.compatible else f"incompatible ({res.reason})"
    return results, (0 if res.compatible else 1), \
        [f"{args.family_a} vs {args.family_b}: {verdict}"]


def cmd_find_contrary(args):
    scn = load_scenario(args.scenario, args.tol) if args.scenario else None
    params = scn.params if scn else {}
    dim = args.dim if args.dim is not None else (scn.dim if scn else params.get("dim"))
    if dim is None:
        raise ScenarioError("find-contrary needs --dim or a scenario")
    trials = args.trials if args.trials is not None else int(params.get("trials", 0))
    seed = _seed(args, scn)
    tol = args.tol if args.tol is not None else (scn.tol if scn else None)
    plant_names = args.plant or params.get("plant")
    planted = []
    if plant_names:
        if scn is None:
            raise ScenarioError("--plant needs a scenario defining the projectors")
        if isinstance(plant_names, str):
            plant_names = [x.strip() for x in plant_names.split(",")]
        if len(plant_names) != 4:
            raise ScenarioError("--plant needs exactly four projector names")
        planted.append(tuple(_lookup(scn.projectors, n, "projector") for n in plant_names))
    kwargs = {"max_rank": args.max_rank, "planted": planted,
              "include_marginal": args.include_marginal}
    if tol is not None:
        kwargs["tol"] = tol
    if scn is not None:
        kwargs["rho"] = scn.rho
    try:
        certs = find_contrary_inferences(int(dim), trials, seed, **kwargs)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    fragments = [certificate_to_scenario(c) for c in certs]
    if args.write_certs is not None:
        for i, frag in enumerate(fragments):
            out = Path(f"{args.write_certs}{i:03d}.json")
            out.write_text(json.dumps(frag, indent=2, sort_keys=True) + "\n")
    results = {"dim": int(dim), "trials": trials, "seed": seed,
               "n_found": len(certs),
               "n_marginal": sum(1 for c in certs if c.marginal),
               "certificates": fragments}
    lines = [f"dim {dim}, {trials} trials, seed {seed}: "
             f"{len(certs)} certificate(s) found"]
    for c in certs:
        tag = " [marginal]" if c.marginal else ""
        lines.append(f"  trial {c.trial}: p_joint = {_fmt(c.p_joint)}, "
                     f"cond = ({_fmt(c.cond_c1)}, {_fmt(c.cond_c2)}){tag}")
    return results, (0 if certs else 1), lines


def cmd_ordered_check(args):
    scn = _need_scenario(args)
    h = _lookup(scn.histories, args.history, "history")
    catalog = [_lookup(scn.families, n, "family") for n in args.catalog]
    verdict = is_ordered_consistent(h, catalog, scn.rho, scn.tol)
    results = {"history": args.history, "catalog": list(args.catalog),
               "ordered_consistent": verdict.ordered_consistent,
               "weight": verdict.weight}
    lines = [f"{args.history}: ordered consistent = {verdict.ordered_consistent} "
             f"(relative to catalog {', '.join(args.catalog)})"]
    if verdict.violating_pair is not None:
        h2, fam = verdict.violating_pair
        results["violating"] = {
            "history": h2.name or "?",
            "family": fam.name or "?",
            "weight": verdict.violating_weight,
        }
        lines.append(f"  violating pair: {h2.name} in {fam.name} "
                     f"(weight {_fmt(verdict.weight)} > {_fmt(verdict.violating_weight)})")
    return results, (0 if verdict.ordered_consistent else 1), lines


def cmd_simulate_support(args):
    scn = _need_scenario(args)
    names = [x.strip() for x in args.catalog.split(",")]
    catalog = [_lookup(scn.families, n, "family") for n in names]
    try:
        weights = [float(x) for x in args.weights.split(",")]
    except ValueError as exc:
        raise ScenarioError(f"bad --weights: {exc}") from exc
    if len(weights) != len(catalog):
        raise ScenarioError(f"{len(catalog)} families but {len(weights)} weights")
    seed = _seed(args, scn)
    pairs = []
    if args.strict_exclusivity:
        parts = [x.strip() for x in args.strict_exclusivity.split(",")]
        if len(parts) != 3:
            raise ScenarioError("--strict-exclusivity needs E,F,slot_label")
        pairs.append((_lookup(scn.projectors, parts[0], "projector"),
                      _lookup(scn.projectors, parts[1], "projector"),
                      parts[2]))
    model = build_support_model(catalog, weights, args.ensemble, scn.rho,
                                seed, scn.tol, exclusivity_pairs=pairs)
    checks = {
        "support_monotonicity": check_support_monotonicity(model),
        "occurrence_agreement": check_occurrence_agreement(model),
        "support_partition": check_support_partition(model),
    }
    freq = frequency_report(model)
    ok = all(c.ok for c in checks.values()) and freq.all_within_3sigma
    results = {
        "catalog": names, "weights": weights, "ensemble": args.ensemble,
        "seed": seed,
        "checks": {k: {"checked": c.checked, "violations": c.violation_count}
                   for k, c in checks.items()},
        "frequency": {"rows": list(freq.rows),
                      "all_within_3sigma": freq.all_within_3sigma},
    }
    lines = [f"ensemble of {args.ensemble} systems over {', '.join(names)} (seed {seed})"]
    for k, c in checks.items():
        lines.append(f"  {k}: {c.violation_count} violation(s) over {c.checked} checks")
    lines.append(f"  frequencies within 3 sigma: {freq.all_within_3sigma}")

    if args.contrary:
        quad_names = [x.strip() for x in args.contrary.split(",")]
        if len(quad_names) != 4:
            raise ScenarioError("--contrary needs e0,e1,f1,e2")
        quad = [_lookup(scn.projectors, n, "projector") for n in quad_names]
        cert = check_contrary_quadruple(*quad, rho=scn.rho, tol=scn.tol)
        i1 = find_catalog_family(model, cert.family_c1)
        i2 = find_catalog_family(model, cert.family_c2)
        if i1 is None or i2 is None:
            raise ScenarioError("--contrary: catalog lacks the two generated families")
        disjoint = check_contrary_supports_disjoint(model, i1, i2, cert.h0())
        cases = classify_support_cases(model, cert)
        ok = ok and disjoint and cases.overlap == 0 and cases.anomalies == 0
        results["contrary"] = {
            "quadruple": quad_names,
            "supports_disjoint": disjoint,
            "cases": cases.as_dict(),
        }
        lines.append(f"  contrary pair supports disjoint: {disjoint}")
        lines.append(f"  case counts: {cases.as_dict()}")

    if pairs:
        e, f, lab = pairs[0]
        strict = check_strict_exclusivity(model, e, f, lab)
        ok = ok and strict.ok
        results["strict_exclusivity"] = {
            "joint_family_in_catalog": strict.joint_family_in_catalog,
            "clause_i_violations": strict.clause_i_violations,
            "undefined_violations": strict.undefined_violations,
            "double_occurrence_violations": strict.double_occurrence_violations,
            "mutual_exclusivity_ok": strict.mutual_exclusivity_ok,
        }
        lines.append(f"  strict exclusivity: clause i violations = "
                     f"{strict.clause_i_violations}, clause ii violations = "
                     f"{strict.clause_ii_violations}")

    if args.dump_systems is not None:
        with open(args.dump_systems, "w") as fh:
            export_systems(model, fh)
        lines.append(f"  wrote ensemble table to {args.dump_systems}")
    lines.append(f"verdict: {'all checks passed' if ok else 'CHECKS FAILED'}")
    return results, (0 if ok else 1), lines


_HANDLERS = {
    "check-consistency": cmd_check_consistency,
    "prob": cmd_prob,
    "conditional": cmd_conditional,
    "generate-family": cmd_generate_family,
    "compatible": cmd_compatible,
    "find-contrary": cmd_find_contrary,
    "ordered-check": cmd_ordered_check,
    "simulate-support": cmd_simulate_support,
}


def _flag_echo(args) -> dict:
    skip = {"command", "scenario"}
    out = {}
    for k, v in vars(args).items():
        if k in skip or v is None:
            continue
        out[k] = str(v) if isinstance(v, Path) else v
    return out


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    report = {
        "command": args.command,
        "inputs": {
            "scenario": str(args.scenario) if args.scenario else None,
            "digest": file_digest(args.scenario) if args.scenario else None,
            "flags": _flag_echo(args),
        },
        "warnings": [],
    }
    try:
        results, code, lines = _HANDLERS[args.command](args)
    except (CHError, OSError) as exc:
        report["results"] = {"error": f"{type(exc).__name__}: {exc}"}
        report["status"] = STATUS[2]
        if args.format == "machine":
            print(json.dumps(_round12(report), sort_keys=True, separators=(",", ":")))
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 2
    report["results"] = results
    report["status"] = STATUS[code]
    if args.format == "machine":
        print(json.dumps(_round12(report), sort_keys=True, separators=(",", ":")))
    else:
        for line in lines:
            print(line)
    return code


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
