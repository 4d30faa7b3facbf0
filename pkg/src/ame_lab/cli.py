"""Command-line front end: ame-lab {construct, verify, qss, teleport, swap}.

Reports are JSON with sorted keys, so identical inputs and seed give
byte-identical output. Exit codes: 0 pass, 1 semantic failure, 2 usage or
malformed input, 3 internal error.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from . import codes
from .ame import AME_TOL, AmeCandidate, Provenance, catalog, state_from_code, verify_ame
from .gf import FiniteField, prime_power
from .qss import MI_TOL, QssScheme, check_probabilities, classify_all, encode, recover
from .qstate import QuditState, fidelity, random_state, save_state, state_from_json, state_to_json
from .swap import check_local_equiv_restricted, swap_chain
from .teleport import FIDELITY_TOL, choose_destination_in_a, default_set_a, open_destination_teleport

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
SAMPLE_BRANCHES = 100
FULL_BRANCH_LIMIT = 1000


class UsageError(Exception):
    """Invalid parameters or unreadable input (exit code 2)."""


def _threads(value: int | None) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get("AME_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise UsageError(f"AME_LAB_THREADS must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _summary(line: str, args) -> None:
    # keep stdout pure JSON when the report is printed there
    print(line, file=sys.stderr if args.out is None else sys.stdout)


def _load(path: str) -> tuple[QuditState, dict]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read state file {path}: {exc}") from exc
    try:
        return state_from_json(data), data
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _candidate(path: str) -> AmeCandidate:
    state, data = _load(path)
    prov = data.get("provenance") or {}
    return AmeCandidate(state, Provenance(prov.get("kind", "user_supplied"), prov.get("ref", path)))


def _secret(choice: str, L: int, d: int, rng: np.random.Generator) -> QuditState:
    if choice == "random":
        return random_state(L, d, rng)
    if choice.startswith("basis:"):
        k = int(choice.split(":", 1)[1])
        if not 0 <= k < d**L:
            raise UsageError(f"basis index {k} outside 0..{d**L - 1}")
        amps = np.zeros(d**L, dtype=np.complex128)
        amps[k] = 1
        return QuditState(L, d, amps)
    raise UsageError(f"unknown secret {choice!r}; use 'random' or 'basis:K'")


# ---------------------------------------------------------------- commands


def cmd_construct(args) -> int:
    code = None
    if args.family == "rs":
        pk = prime_power(args.q)
        if pk is None:
            raise UsageError(f"q={args.q} is not a supported prime power")
        k = args.k if args.k is not None else args.n // 2
        if not 1 <= k <= args.n or args.n > args.q + 1 or args.n < 2:
            raise UsageError(f"need 1 <= k <= n <= q+1, got q={args.q}, n={args.n}, k={k}")
        try:
            code = codes.reed_solomon(FiniteField(*pk), args.n, k)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        cand = state_from_code(code)
        default = f"rs_q{args.q}_n{args.n}_k{k}.json"
    elif args.family == "catalog":
        try:
            cand = catalog(args.name)
        except KeyError as exc:
            raise UsageError(str(exc)) from exc
        default = f"{args.name.replace('(', '_').replace(')', '').replace(',', '_')}.json"
    else:
        try:
            code = codes.load_code(args.code)
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"cannot load code file {args.code}: {exc}") from exc
        cand = state_from_code(code, ref=str(args.code))
        default = f"{Path(args.code).stem}.state.json"
    out = Path(args.out or default)
    save_state(cand.state, out, provenance={"kind": cand.provenance.kind, "ref": cand.provenance.ref})
    written = {"state": str(out)}
    if code is not None:
        code_path = out.with_name(out.stem + ".code.json")
        codes.save_code(code, code_path)
        written["code"] = str(code_path)
    print(json.dumps({"n": cand.n, "d": cand.d, "written": written}, sort_keys=True))
    return EXIT_OK


def cmd_verify(args) -> int:
    state, _ = _load(args.state)
    if state.n < 2:
        raise UsageError("verification needs at least two parties")
    report = verify_ame(state, tol=args.tol or AME_TOL, extended=args.extended, threads=_threads(args.threads))
    _emit(report.to_json(), args.out)
    failing = [list(c.parties) for c in report.failing()]
    _summary(f"AME({state.n},{state.d}): {'pass' if report.is_ame else 'fail'}; failing subsets: {failing}", args)
    return EXIT_OK if report.is_ame else EXIT_FAIL


def _load_scheme(args) -> tuple[QssScheme, str]:
    if args.scheme:
        try:
            desc = json.loads(Path(args.scheme).read_text(encoding="utf-8"))
            res_path = Path(args.scheme).parent / desc["resource"]
            L, dealers = int(desc["L"]), [int(x) for x in desc.get("dealers", [])]
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"malformed scheme descriptor {args.scheme}: {exc}") from exc
        resource = _candidate(str(res_path))
        ref = desc["resource"]
    else:
        if not args.resource:
            raise UsageError("qss needs --resource or --scheme")
        resource, L, dealers, ref = _candidate(args.resource), args.L, args.dealers or [], args.resource
    try:
        scheme = QssScheme.from_resource(resource, L, dealers)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.scheme and any(int(desc.get(k, v)) != v for k, v in (("m", scheme.m), ("d", scheme.d))):
        raise UsageError("scheme descriptor m/d disagree with the resource")
    return scheme, ref


def cmd_qss(args) -> int:
    scheme, ref = _load_scheme(args)
    rng = np.random.default_rng(args.seed)
    secret = _secret(args.secret, scheme.L, scheme.d, rng)
    branches = encode(scheme, secret)
    total = check_probabilities(branches)
    full = args.all_branches if args.all_branches is not None else scheme.d ** (2 * scheme.L) <= FULL_BRANCH_LIMIT
    if not full and len(branches) > SAMPLE_BRANCHES:
        picks = sorted(rng.choice(len(branches), SAMPLE_BRANCHES, replace=False).tolist())
        branches = [branches[i] for i in picks]
    sets = [list(s) for s in itertools.combinations(scheme.players, scheme.m)]
    rows = []
    for b in branches:
        recs = [{"set": s, "fidelity": fidelity(recover(b, s).state, secret)} for s in sets]
        rows.append({"outcomes": [list(o) for o in b.outcomes], "probability": b.probability, "recoveries": recs})
    min_fid = min(r["fidelity"] for row in rows for r in row["recoveries"])
    classes = classify_all(scheme, tol=args.tol or MI_TOL)
    counts: dict[str, Counter] = {}
    for c in classes:
        counts.setdefault(f"{len(c.subset)}-sets", Counter())[c.category] += 1
    report = {
        "scheme": scheme.to_json(ref),
        "secret": state_to_json(secret),
        "all_branches": bool(full),
        "probability_sum": total,
        "branches": rows,
        "classification": [c.to_json() for c in classes],
        "classification_counts": {k: dict(v) for k, v in counts.items()},
        "min_fidelity": min_fid,
    }
    _emit(report, args.out)
    count_text = "; ".join(
        f"{k}: " + ", ".join(f"{v} {cat}" for cat, v in sorted(cats.items()))
        for k, cats in report["classification_counts"].items()
    )
    _summary(f"min fidelity {min_fid:.9f}; {count_text}", args)
    return EXIT_OK if min_fid >= 1 - FIDELITY_TOL else EXIT_FAIL


def cmd_teleport(args) -> int:
    resource = _candidate(args.resource)
    rng = np.random.default_rng(args.seed)
    secret = _secret(args.secret, 1, resource.d, rng)
    try:
        set_a = tuple(args.set_a) if args.set_a else default_set_a(resource.n, args.dealer, args.dest, False)
        if args.dest in set_a:
            run = choose_destination_in_a(resource, args.dealer, secret, args.dest, set_a)
        else:
            run = open_destination_teleport(resource, args.dealer, secret, set_a, args.dest)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    check_probabilities(run.branches)
    report = run.to_json()
    report["secret"] = state_to_json(secret)
    _emit(report, args.out)
    table = "\n".join(
        f"  dealer {list(b.dealer_outcome)} relay {None if b.relay_outcome is None else list(b.relay_outcome)}"
        f"  fidelity {b.fidelity:.9f}"
        for b in run.branches
    )
    _summary(f"{table}\nmin fidelity {run.min_fidelity:.9f} over {len(run.branches)} branches", args)
    return EXIT_OK if run.min_fidelity >= 1 - FIDELITY_TOL else EXIT_FAIL


def cmd_swap(args) -> int:
    state, _ = _load(args.state)
    if args.chain < 2:
        raise UsageError("--chain must be at least 2")
    compare = _load(args.compare)[0] if args.compare else None
    try:
        result = swap_chain([state] * args.chain, rng=np.random.default_rng(args.seed))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    report = result.to_json()
    report["final_state"] = state_to_json(result.final_state)
    if compare is not None:
        report["witness"] = check_local_equiv_restricted(result.final_state, compare).to_json()
    _emit(report, args.out)
    _summary(
        f"min fidelity {result.min_branch_fidelity:.9f}; U^{args.chain} check "
        f"{'pass' if result.u_power_check else 'fail'}; final verify_ame {'pass' if result.final_is_ame else 'fail'}",
        args,
    )
    return EXIT_OK if result.u_power_check else EXIT_FAIL


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--threads", type=int, default=None, help="worker threads (fallback: AME_LAB_THREADS)")
    common.add_argument("--tol", type=float, default=None, help="override the verdict tolerance")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")

    parser = argparse.ArgumentParser(prog="ame-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    con = sub.add_parser("construct", help="build a candidate state file")
    fam = con.add_subparsers(dest="family", required=True)
    rs = fam.add_parser("rs", parents=[common], help="Reed-Solomon code over GF(q)")
    rs.add_argument("--q", type=int, required=True)
    rs.add_argument("--n", type=int, required=True)
    rs.add_argument("--k", type=int, default=None, help="code dimension (default n // 2)")
    cat = fam.add_parser("catalog", parents=[common], help="named state")
    cat.add_argument("--name", required=True, help="AME43, AME43_swap_form, EPR(d) or GHZ(n,d)")
    fc = fam.add_parser("from-code-file", parents=[common], help="superposition over a code file")
    fc.add_argument("--code", required=True)

    ver = sub.add_parser("verify", parents=[common], help="check the AME property")
    ver.add_argument("state")
    ver.add_argument("--extended", action="store_true", help="also check all smaller subsets")

    qss = sub.add_parser("qss", parents=[common], help="secret sharing demo")
    qss.add_argument("--resource")
    qss.add_argument("--scheme", help="JSON descriptor {m, L, d, resource, dealers}")
    qss.add_argument("--L", type=int, default=1)
    qss.add_argument("--dealers", type=int, nargs="*")
    qss.add_argument("--secret", default="random", help="'random' or 'basis:K'")
    qss.add_argument("--all-branches", action=argparse.BooleanOptionalAction, default=None)

    tel = sub.add_parser("teleport", parents=[common], help="open-destination teleportation demo")
    tel.add_argument("--resource", required=True)
    tel.add_argument("--dealer", type=int, required=True)
    tel.add_argument("--dest", type=int, required=True)
    tel.add_argument("--set-a", type=int, nargs="*")
    tel.add_argument("--secret", default="random")

    sw = sub.add_parser("swap", parents=[common], help="entanglement swapping chain")
    sw.add_argument("--chain", type=int, required=True)
    sw.add_argument("--state", required=True)
    sw.add_argument("--compare", help="state to search a local-equivalence witness against")
    return parser


COMMANDS = {
    "construct": cmd_construct,
    "verify": cmd_verify,
    "qss": cmd_qss,
    "teleport": cmd_teleport,
    "swap": cmd_swap,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - stable exit-code contract
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
