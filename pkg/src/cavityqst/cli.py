"""Command-line driver: one subcommand per experiment, CSV outputs.

Outputs go to ``--out`` (default: ``$CAVITYQST_OUTPUT_DIR`` or the current
directory). Failures exit non-zero and print ``error: <CATEGORY>: ...`` on
stderr, with CATEGORY one of CONFIG, PARITY, NONCONVERGENCE.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from cavityqst import disorder as dis
from cavityqst.errors import ConfigError, NonConvergenceError, QSTError
from cavityqst.evolve import (
    basis_vector,
    eigendecompose,
    fidelity,
    fidelity_curve,
    pass_times,
    peak_fidelity,
    probability_trace,
)
from cavityqst.iep import AnnealSchedule, load_schedule, make_problem_chain, make_problem_jchh, solve_chains
from cavityqst.model import (
    SystemConfig,
    boundary_engineered_equivalent,
    build_multi_excitation,
    build_single_excitation,
    load_config,
)
from cavityqst.spectra import (
    ANNEALED_JCHH_COUPLINGS,
    annealed_jchh_config,
    christandl_chain,
    empirical_jchh_config,
)

OUTPUT_ENV = "CAVITYQST_OUTPUT_DIR"
EXIT_CODES = {"CONFIG": 2, "PARITY": 3, "NONCONVERGENCE": 4}


def parse_values(text: str) -> list[float]:
    """``"0.5"``, ``"0,0.5,1"`` or ``"start:stop:count"`` (inclusive linspace)."""
    try:
        if ":" in text:
            start, stop, count = text.split(":")
            return [float(x) for x in np.linspace(float(start), float(stop), int(count))]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse value list {text!r}: {exc}") from None


def parse_ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse integer list {text!r}: {exc}") from None


def time_grid(t_max: float, dt: float, include: Sequence[float] = ()) -> np.ndarray:
    steps = int(round(t_max / dt))
    grid = np.arange(steps + 1) * dt
    extra = [t for t in include if 0 <= t <= t_max]
    return np.unique(np.concatenate([grid, extra]))


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUTPUT_ENV, "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _render(path: Path, data: np.ndarray, xlabel: str, ylabel: str, extent=None) -> None:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise ConfigError("--render needs matplotlib (pip install 'artifact[render]')") from exc
    fig, ax = plt.subplots(figsize=(5, 4))
    im = ax.imshow(data, aspect="auto", origin="upper", extent=extent, cmap="viridis")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.colorbar(im, ax=ax)
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _write_trace(out: Path, stem: str, config: SystemConfig, times: np.ndarray, render: bool) -> dict:
    h = build_single_excitation(config)
    eig = eigendecompose(h)
    source, target = 0, config.n_cavities - 1
    trace = probability_trace(eig, basis_vector(h.dim, source), times)
    trace.to_csv(out / f"{stem}_trace.csv")
    f_first = trace.probabilities[:, source]
    f_last = trace.probabilities[:, target]
    dis.write_csv(
        out / f"{stem}_fidelity.csv", ["t", "p_first", "p_last"], zip(map(float, times), map(float, f_first), map(float, f_last))
    )
    if render:
        _render(out / f"{stem}_trace.png", trace.probabilities, "basis state", "t",
                extent=(0.5, h.dim + 0.5, times[-1], times[0]))
    return {
        "f(pi/2)": fidelity(eig, source, target, math.pi / 2),
        "f(3pi/2)": fidelity(eig, source, target, 3 * math.pi / 2),
    }


def cmd_chain(args) -> int:
    if args.config:
        config = load_config(args.config)
    else:
        if args.n < 2:
            raise ConfigError("--n must be >= 2")
        config = christandl_chain(args.n, args.j0)
    out = _out_dir(args)
    j0 = 1.0 if args.config else args.j0
    times = time_grid(args.t_max, args.dt, pass_times(int(args.t_max * j0 / math.pi) + 1) / j0)
    summary = _write_trace(out, f"chain_n{config.n_cavities}", config, times, args.render)
    for k, v in summary.items():
        print(f"{k} = {v:.12f}")
    return 0


def cmd_iep(args) -> int:
    if args.cavity_only:
        problem = make_problem_chain(args.n)
    else:
        problem = make_problem_jchh(args.n, sparse_center=args.sparse_center)
    if args.schedule:
        schedule = load_schedule(args.schedule)
    elif args.long:
        schedule = AnnealSchedule.long_profile()
    else:
        schedule = AnnealSchedule()
    overrides = {}
    if args.seed is not None:
        overrides["rng_seed"] = args.seed
    if args.sweeps is not None:
        overrides["sweeps_per_stage"] = args.sweeps
    schedule = AnnealSchedule.from_dict({**schedule.to_dict(), **overrides})

    report = solve_chains(problem, schedule, chains=args.chains, jobs=args.jobs)
    out = _out_dir(args)
    stem = f"iep_n{args.n}" + ("_chain" if args.cavity_only else "_sparse" if args.sparse_center else "")
    report.save(out / f"{stem}_report.json")

    sol = report.solution
    g_by_cavity = {e.cavity_index: e.coupling for e in sol.emitters}
    rows = []
    for i in range(1, sol.n_cavities + 1):
        j = sol.hoppings[i - 1] if i < sol.n_cavities else ""
        rows.append((i, j, g_by_cavity.get(i, "")))
    dis.write_csv(out / f"{stem}_couplings.csv", ["index", "J", "g"], rows)

    eig = eigendecompose(build_single_excitation(sol))
    f = fidelity(eig, 0, sol.n_cavities - 1, math.pi / 2)
    print(f"final_action = {report.final_action:.6e}")
    print(f"max_relative_error = {report.max_relative_error:.3e}")
    print(f"f(pi/2) = {f:.6f}")
    print("J = " + " ".join(f"{x:.3f}" for x in sol.hoppings))
    if sol.emitters:
        print("g = " + " ".join(f"{x:.3f}" for x in sol.couplings))
    if not report.converged:
        raise NonConvergenceError(
            f"best action {report.final_action:.3e} misses the 0.1% eigenvalue tolerance "
            "(raise --sweeps or --chains)"
        )
    return 0


def _disorder_base(args) -> SystemConfig:
    if args.config:
        return load_config(args.config)
    if args.kind == "jchh":
        return annealed_jchh_config(args.n) if args.n in ANNEALED_JCHH_COUPLINGS else empirical_jchh_config(args.n)
    return christandl_chain(args.n)


def cmd_disorder(args) -> int:
    base = _disorder_base(args)
    out = _out_dir(args)
    kind = dis.DisorderKind(args.kind)
    realizations = args.r if args.r is not None else {"hopping": 10_000, "energy": 10_000, "jchh": 200}[args.kind]

    if kind is dis.DisorderKind.JCHH_COUPLINGS:
        dj = parse_values(args.delta_j) if args.delta_j else list(np.linspace(0, args.delta_j_max, args.grid))
        dg = parse_values(args.delta_g) if args.delta_g else list(np.linspace(0, args.delta_g_max, args.grid))
        points = dis.heatmap(base, dj, dg, realizations, args.seed, jobs=args.jobs)
        dis.write_csv(
            out / "disorder_jchh_heatmap.csv",
            ["delta_g", "delta_j", "mean_fidelity"],
            [(p.delta_g, p.delta_j, p.mean_fidelity) for p in points],
        )
        if args.render:
            grid = np.array([p.mean_fidelity for p in points]).reshape(len(dg), len(dj))
            _render(out / "disorder_jchh_heatmap.png", grid, "delta_J", "delta_g",
                    extent=(dj[0], dj[-1], dg[-1], dg[0]))
        print(f"wrote {len(points)} heatmap points")
        return 0

    deltas = parse_values((args.delta_j or "0.5") if kind is dis.DisorderKind.HOPPING_ABS else args.delta_omega)
    rows = dis.disorder_curve(kind, base, deltas, realizations, args.seed, args.passes, args.jobs, args.search_time)
    header = ["delta"] + [f"pass{k}" for k in range(1, args.passes + 1)]
    dis.write_csv(out / f"disorder_{args.kind}.csv", header, rows)
    for row in rows:
        print(" ".join(f"{x:.6f}" for x in row))
    if realizations == 1:
        key = "delta_j" if kind is dis.DisorderKind.HOPPING_ABS else "delta_omega"
        spec = dis.DisorderSpec(kind, base, realizations=1, rng_seed=args.seed, **{key: deltas[0]})
        single = dis.perturb(base, spec, 0)
        _write_trace(out, f"disorder_{args.kind}_realization", single, time_grid(8.0, 0.01, pass_times(3)), args.render)
    return 0


def cmd_multi(args) -> int:
    n = args.n
    if args.emitters:
        config = annealed_jchh_config(n) if n in ANNEALED_JCHH_COUPLINGS else empirical_jchh_config(n)
    else:
        config = christandl_chain(n)
    h = build_multi_excitation(config, args.n_exc)
    source = h.cavity_state_index(1, args.n_exc)
    target = h.cavity_state_index(n, args.n_exc)
    eig = eigendecompose(h)
    t_max = args.t_max
    times = np.linspace(0.0, t_max, max(2, math.ceil(2048 * t_max / math.pi) + 1))
    curve = fidelity_curve(eig, source, target, times)
    out = _out_dir(args)
    stem = f"multi_n{n}_{'jchh' if args.emitters else 'chain'}_exc{args.n_exc}"
    dis.write_csv(out / f"{stem}.csv", ["t", "fidelity"], zip(map(float, times), map(float, curve)))
    t_peak, f_peak = peak_fidelity(eig, source, target, t_max=t_max)
    print(f"dim = {h.dim}")
    print(f"peak_fidelity = {f_peak:.9f} at t = {t_peak:.6f}")
    return 0


def cmd_impurity(args) -> int:
    rows = dis.impurity_scan(args.n, parse_ints(args.positions), parse_values(args.g_grid), args.j0, args.uniform)
    out = _out_dir(args)
    name = f"impurity_n{args.n}{'_uniform' if args.uniform else ''}.csv"
    dis.write_csv(out / name, ["position", "g", "fidelity"], rows)
    print(f"wrote {len(rows)} rows to {out / name}")
    return 0


def cmd_boundary(args) -> int:
    with_emitters, chain_config, perm = boundary_engineered_equivalent(args.n, args.bulk_j, args.end_g)
    ha = build_single_excitation(with_emitters).entries
    hb = build_single_excitation(chain_config).entries
    diff = float(np.max(np.abs(ha - hb[np.ix_(perm, perm)])))
    report = {
        "n_cavities": args.n,
        "bulk_j": args.bulk_j,
        "end_g": args.end_g,
        "permutation": list(perm),
        "max_abs_difference": diff,
        "emitter_config": with_emitters.to_dict(),
        "chain_config": chain_config.to_dict(),
    }
    out = _out_dir(args)
    (out / f"boundary_n{args.n}.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"max_abs_difference = {diff:.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cavityqst", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=False):
        p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or .)")
        if seed:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("chain", help="perfect-transfer chain: probability trace")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--j0", type=float, default=1.0)
    p.add_argument("--t-max", type=float, default=8.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--config", help="system config JSON (overrides --n/--j0)")
    p.add_argument("--render", action="store_true")
    common(p)
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("iep", help="anneal couplings for a target spectrum")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--sparse-center", action="store_true", help="omit the centre emitter (odd n)")
    p.add_argument("--cavity-only", action="store_true")
    p.add_argument("--schedule", help="anneal schedule JSON")
    p.add_argument("--long", action="store_true", help="10^6 sweeps per stage")
    p.add_argument("--sweeps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--jobs", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_iep)

    p = sub.add_parser("disorder", help="disorder-averaged pass fidelities or JCHH heatmap")
    p.add_argument("--kind", choices=[k.value for k in dis.DisorderKind], default="hopping")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--delta-j", default=None, help="value, list a,b,c or start:stop:count")
    p.add_argument("--delta-omega", default="1")
    p.add_argument("--delta-g", default=None)
    p.add_argument("--delta-j-max", type=float, default=4.0)
    p.add_argument("--delta-g-max", type=float, default=4.0)
    p.add_argument("--grid", type=int, default=21)
    p.add_argument("--r", type=int, default=None, help="realizations per point")
    p.add_argument("--passes", type=int, default=3)
    p.add_argument("--search-time", action="store_true", help="best f(t) within each pass window")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--config", help="base system config JSON")
    p.add_argument("--render", action="store_true")
    common(p, seed=True)
    p.set_defaults(func=cmd_disorder)

    p = sub.add_parser("multi", help="transfer in the multi-excitation sector")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--emitters", action="store_true")
    p.add_argument("--n-exc", type=int, default=2)
    p.add_argument("--t-max", type=float, default=4 * math.pi)
    common(p)
    p.set_defaults(func=cmd_multi)

    p = sub.add_parser("impurity", help="f(pi/2) versus impurity emitter coupling")
    p.add_argument("--n", type=int, default=9)
    p.add_argument("--positions", default="1,3,5")
    p.add_argument("--g-grid", default="0:4:41")
    p.add_argument("--j0", type=float, default=1.0)
    p.add_argument("--uniform", action="store_true", help="one emitter in every cavity")
    common(p)
    p.set_defaults(func=cmd_impurity)

    p = sub.add_parser("boundary", help="end-emitter / boundary-engineered chain equivalence")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--bulk-j", type=float, default=1.0)
    p.add_argument("--end-g", type=float, default=0.3)
    common(p)
    p.set_defaults(func=cmd_boundary)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except QSTError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return EXIT_CODES.get(exc.category, 1)


if __name__ == "__main__":
    sys.exit(main())
