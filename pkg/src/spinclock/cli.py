"""Command line entry point: ``spinclock {tables,clock,signalling,mediator,validate}``.

Exit status: 0 success, 2 validation failure, 3 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE = 0, 2, 3
THREADS_ENV = "SPINCLOCK_THREADS"

SYSTEM_ALIASES = {
    "energy": "single-spin-energy-basis",
    "single-energy": "single-spin-energy-basis",
    "single-theta": "single-spin-theta",
    "two-pointers": "single-spin-two-pointers",
    "double": "single-spin-two-pointers",
}
SYSTEM_CHOICES = ("single-spin-energy-basis", "single-spin-theta", "single-spin-two-pointers", "chain3", *SYSTEM_ALIASES)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _set_threads():
    n = os.environ.get(THREADS_ENV)
    if not n:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, n)


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated list of numbers: {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _dims(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = text.split("..")
            out = list(range(int(lo), int(hi) + 1))
        else:
            out = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dimension range {text!r} (use 2..6 or 2,3,4)")
    if not out or min(out) < 2:
        raise argparse.ArgumentTypeError("dimensions must be >= 2")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spinclock", description="Measurements driven by quantum clocks on spin systems.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_default):
        sp.add_argument("--out", default=out_default, help="output directory")
        sp.add_argument("--config", help="JSON file whose keys override the flags")

    t = sub.add_parser("tables", help="projective energy tables and the attribution certificate")
    t.add_argument("--who", choices=("A", "B"), default="B", help="party of the one-party table")
    t.add_argument("--energy-scale", type=float, default=1.0)
    common(t, "out/tables")

    c = sub.add_parser("clock", help="simulate one scenario with autonomous clocks")
    c.add_argument("--system", choices=SYSTEM_CHOICES, default="single-spin-theta")
    c.add_argument("--theta", type=float, default=0.7853981633974483)
    c.add_argument("--omega", type=float, default=1.0)
    c.add_argument("--delta", type=float, default=2.0, help="clock width")
    c.add_argument("--offset", type=float, default=0.0, help="how far the B clock trails the A clock")
    c.add_argument("--sequential", action="store_true", help="chain3: Bob's clock trails by 20 widths")
    c.add_argument("--n", type=int, default=None, help="lattice sites per clock")
    c.add_argument("--profile", choices=("point", "gaussian", "tophat"), default="point")
    c.add_argument("--width", type=float, default=None, help="profile half-width (default 4 dx)")
    c.add_argument("--method", choices=("exact", "strang"), default="exact")
    c.add_argument("--substeps", type=int, default=1)
    c.add_argument("--checkpoints", type=int, default=21)
    c.add_argument("--alice-off", action="store_true")
    c.add_argument("--bob-off", action="store_true")
    c.add_argument("--tolerance", type=float, default=1e-3, help="allowed 1 - fidelity against the oracle")
    common(c, "out/clock")

    s = sub.add_parser("signalling", help="trace distance of Bob's apparatus vs omega*Delta")
    s.add_argument("--grid", type=_float_list, default=[0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 3.0])
    s.add_argument("--omega", type=float, default=1.0)
    s.add_argument("--offset", type=float, default=0.0)
    s.add_argument("--n", type=int, default=256)
    s.add_argument("--alice-off", action="store_true")
    common(s, "out/signalling")

    m = sub.add_parser("mediator", help="search for a finite shuttling auxiliary system")
    m.add_argument("--target", choices=("pair", "local-z", "zero"), required=True)
    m.add_argument("--dims", type=_dims, default=[2])
    m.add_argument("--tau", type=float, default=1.0)
    m.add_argument("--omega", type=float, default=1.0, help="strength of the local-z target")
    m.add_argument("--restarts", type=int, default=4)
    m.add_argument("--max-iters", type=int, default=1000)
    m.add_argument("--seed", type=int, default=0)
    common(m, "out/mediator")

    v = sub.add_parser("validate", help="run the acceptance criteria")
    v.add_argument("--criteria", type=lambda x: [int(k) for k in x.split(",")], default=None)
    common(v, "out/validate")
    return p


def _apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> argparse.Namespace:
    if not getattr(args, "config", None):
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read config {args.config}: {e}")
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    for key, val in cfg.items():
        dest = key.replace("-", "_")
        if dest in ("command", "config") or not hasattr(args, dest):
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        if dest == "dims" and isinstance(val, str):
            val = _dims(val)
        if dest == "grid" and isinstance(val, str):
            val = _float_list(val)
        setattr(args, dest, val)
    return args


def _config_dict(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("config",)}


# ---------------------------------------------------------------------------


def cmd_tables(args) -> int:
    from .io import RunManifest, write_text
    from .projective import attribution_feasibility, paper_tables

    out = Path(args.out)
    one_a, two = paper_tables(args.energy_scale, "A")
    one_b, _ = paper_tables(args.energy_scale, "B")
    one = one_a if args.who == "A" else one_b
    rep = attribution_feasibility(one_b, two, one_party_a=one_a)
    man = RunManifest("tables", _config_dict(args))
    man.add(write_text(out / "table1.csv", one.to_csv()))
    man.add(write_text(out / "table2.csv", two.to_csv()))
    man.add(write_text(out / "certificate.txt", rep.summary() + "\n"))
    man.write(out)
    print(rep.summary())
    return EXIT_OK if rep.verdict == "INFEASIBLE" else EXIT_VALIDATION


def clock_scenario(args):
    from .clock_sim import AutonomousScenario, CouplingProfile
    from .wavepacket import WavePacket

    system = SYSTEM_ALIASES.get(args.system, args.system)
    if args.sequential and system != "chain3":
        raise UsageError("--sequential applies to --system chain3 only")
    two = system in ("single-spin-two-pointers", "chain3")
    if (args.alice_off or args.bob_off) and not two:
        raise UsageError("--alice-off/--bob-off need a two-clock system")
    if args.method == "strang" and args.profile == "point":
        raise UsageError("--method strang needs --profile gaussian or tophat")
    if args.delta <= 0:
        raise UsageError("--delta must be positive")
    if args.width is not None and args.profile == "point":
        raise UsageError("--width needs a smooth --profile")
    n = args.n or (256 if two else 512)
    offset = max(args.offset, 20 * args.delta) if args.sequential else args.offset
    x0 = -9 * args.delta
    if two:
        clocks = (WavePacket(x0, 0.0, args.delta), WavePacket(x0 - offset, 0.0, args.delta))
    else:
        clocks = (WavePacket(x0, 0.0, args.delta),)
    active = None
    if two:
        active = (not args.alice_off, not args.bob_off)
    s = AutonomousScenario(system, omega=args.omega, energy_scale=2 * args.omega, theta=args.theta, clocks=clocks, n=n,
                           substeps=args.substeps, active=active, n_checkpoints=args.checkpoints)
    if args.profile != "point":
        from dataclasses import replace

        width = args.width or 4 * s.lattices()[0].dx
        s = replace(s, profile=CouplingProfile(args.profile, width), method=args.method)
    return s


def cmd_clock(args) -> int:
    import numpy as np

    from .clock_sim import discrete_density, energy_bookkeeping, evolve, fidelity_to_oracle, oracle_expansion, pointer_probabilities, trajectory_csv
    from .io import RunManifest, complex_matrix_record, fmt, write_csv, write_text

    s = clock_scenario(args)
    out = Path(args.out)
    res = evolve(s)
    man = RunManifest("clock", _config_dict(args))
    man.add(write_text(out / "trajectory.csv", trajectory_csv(energy_bookkeeping(res))))
    sim_p = pointer_probabilities(res.state, res.model)
    final = dict(scenario=s.to_dict(), t=fmt(res.t), pointer_probabilities={"".join(map(str, k)): fmt(v) for k, v in sim_p.items()},
                 density=complex_matrix_record(discrete_density(res.state)))
    man.add(write_text(out / "final_state.json", json.dumps(final, indent=2, sort_keys=True) + "\n"))
    status = EXIT_OK
    if s.profile.is_point:
        b = oracle_expansion(s, res.t)
        orc_p = b.pointer_probabilities()
        fid = fidelity_to_oracle(res)
        rows = [("".join(map(str, k)), sim_p[k], orc_p[k], sim_p[k] - orc_p[k]) for k in sorted(sim_p)]
        man.add(write_csv(out / "oracle_diff.csv", ["pointers", "p_sim", "p_oracle", "diff"], rows))
        branch_rows = []
        h = b.meta["h_sys"]
        n_ptr = b.meta["n_pointers"]
        hh = np.kron(h, np.eye(2**n_ptr))
        g = np.real(np.diag(b.clock_gram()))
        for t, gi in zip(b.terms, g):
            w = float(np.real(np.vdot(t.vector, t.vector))) * gi
            e = float(np.real(np.vdot(t.vector, hh @ t.vector)) / np.real(np.vdot(t.vector, t.vector)))
            ka, kb = t.kicks
            branch_rows.append((t.region, ka, kb, e, w))
        man.add(write_csv(out / "branches.csv", ["region", "kick_A", "kick_B", "final_system_energy", "weight"], branch_rows))
        man.add(write_text(out / "oracle.json", b.to_json() + "\n"))
        print(f"fidelity to oracle: {fmt(fid)}")
        if 1 - fid > args.tolerance:
            status = EXIT_VALIDATION
    else:
        print("smooth coupling profile: no closed-form oracle, trajectory only")
    for k, v in sorted(sim_p.items()):
        print(f"P{''.join(map(str, k))} = {fmt(v)}")
    man.write(out)
    return status


def cmd_signalling(args) -> int:
    from .io import RunManifest, write_text
    from .signalling import sweep, sweep_csv

    if args.n < 8:
        raise UsageError("--n too small")
    pts = sweep(args.grid, args.omega, args.offset, args.n, args.alice_off)
    out = Path(args.out)
    man = RunManifest("signalling", _config_dict(args))
    text = sweep_csv(pts)
    man.add(write_text(out / "signalling.csv", text))
    man.write(out)
    sys.stdout.write(text)
    if args.alice_off and any(p.trace_distance > 1e-12 for p in pts):
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_mediator(args) -> int:
    from .io import RunManifest, complex_matrix_record, fmt, write_text
    from .mediator import dimension_scan, scan_csv, target

    if args.restarts < 1 or args.max_iters < 1:
        raise UsageError("--restarts and --max-iters must be positive")
    h = target(args.target, args.omega)
    rows, sols = dimension_scan(h, args.dims, args.tau, args.restarts, args.max_iters, args.seed)
    out = Path(args.out)
    man = RunManifest("mediator", _config_dict(args), seed=args.seed)
    text = scan_csv(rows)
    man.add(write_text(out / "mediator_scan.csv", text))
    for sol in sols:
        rec = dict(d=sol.d, residual=fmt(sol.residual), realizable=sol.realizable, u1=complex_matrix_record(sol.u1), u2=complex_matrix_record(sol.u2))
        man.add(write_text(out / f"solution_d{sol.d}.json", json.dumps(rec, indent=2, sort_keys=True) + "\n"))
    man.write(out)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(args) -> int:
    from .acceptance import CRITERIA, run_all
    from .io import RunManifest, write_text

    nums = args.criteria or sorted(CRITERIA)
    bad = [k for k in nums if k not in CRITERIA]
    if bad:
        raise UsageError(f"unknown criteria {bad}")
    lines = []

    def echo(line):
        print(line, flush=True)
        lines.append(line)

    results = run_all(nums, echo)
    out = Path(args.out)
    man = RunManifest("validate", _config_dict(args))
    man.add(write_text(out / "acceptance.txt", "\n".join(lines) + "\n"))
    man.write(out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


COMMANDS = dict(tables=cmd_tables, clock=cmd_clock, signalling=cmd_signalling, mediator=cmd_mediator, validate=cmd_validate)


def main(argv=None) -> int:
    _set_threads()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(args, parser)
        return COMMANDS[args.command](args)
    except (UsageError, argparse.ArgumentTypeError, ValueError) as e:
        # invalid flag combinations surface as ValueError from the constructors
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.print_usage(sys.stderr)
        print(f"spinclock {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
