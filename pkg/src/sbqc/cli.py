"""Command line entry point.

Exit codes: 0 success, 1 domain violation (invalid g-flow, bad merger,
failed verdict), 2 unreadable or malformed input.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import blindness, nogo
from .fileio import FormatError, load_instance, load_merger, load_pattern
from .masking import classify_nodes, cost_report, optimize_clifford_pi_difference, plan_report
from .merge import verify_merger
from .pattern import PatternError, verify_gflow
from .protocol import ProtocolError, check_instance, sbqc_run, ubqc_run
from .statevec import OutcomeSource, SimulationError, StateVector, fidelity, run_pattern


class DomainError(Exception):
    pass


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _input_spec(text: str) -> dict[int, str]:
    spec = {}
    for part in filter(None, text.split(",")):
        node, _, kind = part.partition(":")
        if kind not in ("public", "private"):
            raise argparse.ArgumentTypeError(f"bad input spec entry {part!r}; use node:public or node:private")
        spec[int(node)] = kind
    return spec


def _random_input(pattern, seed: int) -> StateVector | None:
    labels = list(pattern.graph.inputs)
    if not labels:
        return None
    rng = np.random.default_rng([seed, 0x1A])
    v = rng.normal(size=2 ** len(labels)) + 1j * rng.normal(size=2 ** len(labels))
    return StateVector.from_vector(v / np.linalg.norm(v), labels)


def _load_triple(args):
    u0, u1, m = load_pattern(args.u0), load_pattern(args.u1), load_merger(args.merger)
    problems = check_instance(u0, u1, m)
    if problems:
        raise DomainError("\n".join(f"  - {p}" for p in problems))
    return u0, u1, m


def _plan_from_args(args):
    if args.instance:
        inst = load_instance(args.instance)
        return inst.plan, inst.merger
    if not (args.u0 and args.u1 and args.merger):
        raise FormatError("give --instance or all of --u0, --u1, --merger")
    u0, u1, m = _load_triple(args)
    plan = classify_nodes(u0, u1, m, args.input_spec)
    if not args.no_optimize:
        plan = optimize_clifford_pi_difference(plan, u0, u1, m)
    return plan, m


# commands -------------------------------------------------------------------


def cmd_verify(args) -> str:
    rep = verify_gflow(load_pattern(args.pattern))
    if not rep.ok:
        raise DomainError(str(rep))
    return str(rep)


def cmd_merge_verify(args) -> str:
    u0, u1, m = load_pattern(args.u0), load_pattern(args.u1), load_merger(args.merger)
    rep = verify_merger(m, u0, u1)
    if not rep.ok:
        raise DomainError(str(rep))
    problems = check_instance(u0, u1, m)
    if problems:
        raise DomainError("merger: INCOMPLETE\n" + "\n".join(f"  - {p}" for p in problems))
    return str(rep)


def cmd_plan(args) -> str:
    plan, m = _plan_from_args(args)
    return plan_report(plan, m)


def cmd_cost(args) -> str:
    plan, m = _plan_from_args(args)
    c = cost_report(plan, m)
    lines = [
        f"qubits_sent: {c.qubits_sent}",
        f"outputs_returned: {c.outputs_returned}",
        f"baseline_ubqc_cost: {c.baseline_ubqc_cost}",
    ]
    lines += [f"  {k}: {v}" for k, v in c.breakdown.items()]
    return "\n".join(lines)


def cmd_run(args) -> str:
    inst = load_instance(args.instance)
    i = args.choice
    out, s, tr, _ = sbqc_run(inst, i, seed=args.seed)
    inp = inst.inputs[i]
    if inp is None:
        inp = StateVector.product({x: (1, 1) for x in inst.pattern(i).graph.inputs})
    ref, _ = run_pattern(inst.pattern(i), inp, OutcomeSource.seeded(args.seed))
    f = fidelity(ref, out)
    lines = [f"instance: {inst.name or args.instance}", f"choice: {i}", "transcript:", tr.dump()]
    lines.append(f"fidelity: {f:.12f}")
    if f < 1 - 1e-9:
        raise DomainError("\n".join(lines) + "\noutput does not match the direct run")
    return "\n".join(lines)


def cmd_ubqc_run(args) -> str:
    p = load_pattern(args.pattern)
    inp = _random_input(p, args.seed)
    out, tr, _, _ = ubqc_run(p, inp, seed=args.seed)
    ref, _ = run_pattern(p, inp, OutcomeSource.seeded(args.seed))
    f = fidelity(ref, out)
    lines = ["transcript:", tr.dump(), f"fidelity: {f:.12f}"]
    if f < 1 - 1e-9:
        raise DomainError("\n".join(lines) + "\noutput does not match the direct run")
    return "\n".join(lines)


def cmd_blindness(args) -> str:
    inst = load_instance(args.instance)
    if args.sabotage is not None:
        if args.sabotage not in inst.plan.nodes:
            raise DomainError(f"no node {args.sabotage} to sabotage")
        inst = blindness.sabotaged(inst, args.sabotage)
    v = blindness.blindness_test(inst, args.trials, args.seed)
    text = f"instance: {inst.name or args.instance}\ntrials: {args.trials}\nseed: {args.seed}\n" + v.report()
    if not v.pass_:
        raise DomainError(text)
    return text


def cmd_nogo(args) -> str:
    if args.what == "scan":
        res = nogo.separability_scan(args.resolution)
        if args.csv:
            with open(args.csv, "w") as fh:
                fh.write(res.to_csv())
        zeros = int(res.zero_mask().sum())
        lines = [
            f"resolution: {args.resolution}",
            f"zero points: {zeros} of {res.deviation.size}",
            f"matches analytic zero set: {'yes' if res.agrees() else 'no'}",
            f"min positive deviation: {res.deviation[~res.zero_mask()].min():.3e}",
            f"max deviation: {res.deviation.max():.6f}",
            f"image rank: {nogo.image_rank(args.resolution)}",
        ]
        if not res.agrees():
            raise DomainError("\n".join(lines))
        return "\n".join(lines)
    if args.what == "attack":
        if args.f not in nogo.KEY_MAPS:
            raise FormatError(f"unknown key map {args.f!r}; choose from {', '.join(nogo.KEY_MAPS)}")
        samples = args.samples if args.samples > 0 else None
        rep = nogo.correlated_key_attack(args.f, args.phi_i, args.phi_j, samples, args.seed)
        mode = "exact enumeration" if samples is None else f"{samples} samples per difference"
        return f"mode: {mode}\n" + rep.report()
    # bound
    lines = [f"guess probability |Theta|={args.theta}, m={args.m}: {nogo.guess_probability(args.theta, args.m)}"]
    lines.append(f"min m for n={args.n}, c={args.c}: {nogo.min_m(args.n, args.c, args.theta)}")
    return "\n".join(lines)


def cmd_dump_state(args) -> str:
    p = load_pattern(args.pattern)
    inp = _random_input(p, args.seed)
    if args.branch is not None:
        src = OutcomeSource.branch([int(c) for c in args.branch])
    else:
        src = OutcomeSource.seeded(args.seed)
    out, outcomes = run_pattern(p, inp, src)
    lines = ["outcomes: " + " ".join(f"{k}={v}" for k, v in sorted(outcomes.items())), out.dump()]
    return "\n".join(lines)


# parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0, help="64-bit seed for all randomness")
    common.add_argument("--out", help="also write the report to this path")

    ap = argparse.ArgumentParser(prog="sbqc", description="selectively blind MBQC toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="check a pattern's g-flow")
    p.add_argument("--pattern", required=True)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("merge-verify", parents=[common], help="check a merger against two patterns")
    for k in ("--u0", "--u1", "--merger"):
        p.add_argument(k, required=True)
    p.set_defaults(fn=cmd_merge_verify)

    for name, fn, hlp in (("plan", cmd_plan, "per-node masking plan"), ("cost", cmd_cost, "communication cost")):
        p = sub.add_parser(name, parents=[common], help=hlp)
        p.add_argument("--instance")
        p.add_argument("--u0")
        p.add_argument("--u1")
        p.add_argument("--merger")
        p.add_argument("--input-spec", type=_input_spec, default={}, help="e.g. 1:public,5:private")
        p.add_argument("--no-optimize", action="store_true", help="skip the Clifford pi-difference downgrade")
        p.set_defaults(fn=fn)

    p = sub.add_parser("run", parents=[common], help="one SBQC run with a fidelity check")
    p.add_argument("--instance", required=True)
    p.add_argument("--choice", type=int, choices=(0, 1), required=True)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("ubqc-run", parents=[common], help="one UBQC run with a fidelity check")
    p.add_argument("--pattern", required=True)
    p.set_defaults(fn=cmd_ubqc_run)

    p = sub.add_parser("blindness", parents=[common], help="transcript indistinguishability test")
    p.add_argument("--instance", required=True)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--sabotage", type=int, help="strip the masking of this node first")
    p.set_defaults(fn=cmd_blindness)

    p = sub.add_parser("nogo", help="no-go numerics")
    nsub = p.add_subparsers(dest="what", required=True)
    q = nsub.add_parser("scan", parents=[common])
    q.add_argument("--resolution", type=int, default=64)
    q.add_argument("--csv", help="write the grid as CSV")
    q = nsub.add_parser("attack", parents=[common])
    q.add_argument("--f", default="identity")
    q.add_argument("--samples", type=int, default=0, help="0 enumerates exactly")
    q.add_argument("--phi-i", type=int, default=0)
    q.add_argument("--phi-j", type=int, default=1)
    q = nsub.add_parser("bound", parents=[common])
    q.add_argument("--theta", type=int, default=8)
    q.add_argument("--n", type=int, default=1024)
    q.add_argument("--c", type=float, default=2)
    q.add_argument("--m", type=int, default=1)
    p.set_defaults(fn=cmd_nogo)

    p = sub.add_parser("dump-state", parents=[common], help="run a pattern and print the output amplitudes")
    p.add_argument("--pattern", required=True)
    p.add_argument("--branch", help="forced outcome bits, e.g. 0110")
    p.set_defaults(fn=cmd_dump_state)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    code = 0
    try:
        text = args.fn(args)
    except DomainError as exc:
        text, code = str(exc), 1
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (PatternError, ProtocolError, SimulationError, ValueError) as exc:
        text, code = f"error: {exc}", 1
    print(text)
    if getattr(args, "out", None):
        try:
            with open(args.out, "w") as fh:
                fh.write(text + "\n")
        except OSError as exc:
            print(f"error: cannot write report: {exc}", file=sys.stderr)
            return 2
    return code


if __name__ == "__main__":
    raise SystemExit(main())
