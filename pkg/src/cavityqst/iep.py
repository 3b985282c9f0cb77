"""Annealed Monte Carlo solution of the structured inverse eigenvalue problem.

Given a cavity-emitter layout with zero diagonal, find mirror-symmetric
hoppings J_i = J_{N-i} and emitter couplings g_i = g_{N+1-i} whose
single-excitation spectrum matches a list of target eigenvalues. The action
is the sum of squared differences between sorted eigenvalues and targets;
moves shift every free parameter at once and are accepted with the
heat-bath probability 1 / (1 + exp(beta * dS)).
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from cavityqst.errors import ConfigError, ParityError
from cavityqst.evolve import eigendecompose
from cavityqst.model import HamiltonianMatrix, SystemConfig, build_single_excitation, jchh
from cavityqst.spectra import mean_gap, target_spectrum

log = logging.getLogger(__name__)

CONVERGENCE_TOL = 1e-3
DEFAULT_STEP_FRACTION = 0.5


@dataclass(frozen=True)
class AnnealSchedule:
    """Inverse-temperature ladder and proposal settings.

    beta grows by ``alpha`` after each stage of ``sweeps_per_stage`` sweeps,
    from ``beta_initial`` to ``beta_final = beta_initial * alpha**K``. The
    proposal half-width starts at ``step_size`` (half the mean target gap
    when None) and is multiplied by ``step_decay`` after each stage.
    ``refine_tolerance`` switches on extra stages, continuing the ladder,
    until the best solution meets that relative eigenvalue error or
    ``max_refine_stages`` is exhausted.
    """

    beta_initial: float = 0.1
    beta_final: float = 1e4
    alpha: float = 10 ** (5 / 24)
    sweeps_per_stage: int = 10_000
    step_size: float | None = None
    step_decay: float = 0.8
    rng_seed: int = 0
    refine_tolerance: float | None = None
    max_refine_stages: int = 0

    def __post_init__(self) -> None:
        if not (self.beta_initial > 0 and self.beta_final > self.beta_initial):
            raise ConfigError("need 0 < beta_initial < beta_final")
        if not self.alpha > 1:
            raise ConfigError("alpha must exceed 1")
        ratio = math.log(self.beta_final / self.beta_initial) / math.log(self.alpha)
        k = round(ratio)
        if k < 1 or abs(ratio - k) > 1e-6:
            raise ConfigError(
                f"beta_final/beta_initial is not an integer power of alpha (log ratio {ratio:.6g})"
            )
        if self.sweeps_per_stage < 1:
            raise ConfigError("sweeps_per_stage must be >= 1")
        if self.step_size is not None and not self.step_size > 0:
            raise ConfigError("step_size must be positive")
        if not 0 < self.step_decay <= 1:
            raise ConfigError("step_decay must lie in (0, 1]")
        if not 0 <= self.rng_seed < 2**64:
            raise ConfigError("rng_seed must be a 64-bit unsigned integer")
        if self.max_refine_stages < 0:
            raise ConfigError("max_refine_stages must be >= 0")

    @property
    def n_stages(self) -> int:
        return round(math.log(self.beta_final / self.beta_initial) / math.log(self.alpha))

    @classmethod
    def with_stages(cls, n_stages: int, **kwargs) -> AnnealSchedule:
        bi = kwargs.get("beta_initial", cls.beta_initial)
        bf = kwargs.get("beta_final", cls.beta_final)
        return cls(alpha=(bf / bi) ** (1 / n_stages), **kwargs)

    @classmethod
    def long_profile(cls, **kwargs) -> AnnealSchedule:
        """Production-length schedule with 10^6 sweeps per stage."""
        kwargs.setdefault("sweeps_per_stage", 1_000_000)
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> AnnealSchedule:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown schedule keys: {sorted(unknown)}")
        return cls(**data)


def load_schedule(path: str | Path) -> AnnealSchedule:
    try:
        return AnnealSchedule.from_dict(json.loads(Path(path).read_text()))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class IepProblem:
    """Template layout plus target eigenvalues.

    Only the independent couplings are free: bond i is tied to bond N-i and
    the emitter in cavity c to the one in cavity N+1-c.
    """

    template: SystemConfig
    targets: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        t = self.template
        targets = np.array(self.targets, dtype=float)
        dim = t.n_cavities + t.n_emitters
        if targets.shape != (dim,):
            raise ConfigError(f"{targets.size} targets for a {dim}-dimensional problem")
        if np.any(np.diff(targets) < 0):
            raise ConfigError("targets must be ascending")
        if any(t.cavity_energies) or any(e.energy for e in t.emitters):
            raise ConfigError("template diagonal must be zero")
        cavities = set(t.emitter_cavities)
        if {t.n_cavities + 1 - c for c in cavities} != cavities:
            raise ConfigError("emitter placement must be mirror symmetric")
        targets.setflags(write=False)
        object.__setattr__(self, "targets", targets)

    @property
    def n_cavities(self) -> int:
        return self.template.n_cavities

    @property
    def dim(self) -> int:
        return self.template.n_cavities + self.template.n_emitters

    @property
    def hopping_groups(self) -> list[list[int]]:
        """0-based bond indices sharing each free hopping."""
        n_bonds = self.n_cavities - 1
        return [sorted({b, n_bonds - 1 - b}) for b in range((n_bonds + 1) // 2)]

    @property
    def coupling_groups(self) -> list[list[int]]:
        """Emitter list indices sharing each free coupling."""
        n = self.n_cavities
        where = {c: k for k, c in enumerate(self.template.emitter_cavities)}
        groups = []
        for c in sorted(where):
            if c > n + 1 - c:
                break
            groups.append(sorted({where[c], where[n + 1 - c]}))
        return groups

    @property
    def n_free_hoppings(self) -> int:
        return len(self.hopping_groups)

    @property
    def n_free_couplings(self) -> int:
        return len(self.coupling_groups)

    @property
    def n_free(self) -> int:
        return self.n_free_hoppings + self.n_free_couplings

    def entry_map(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(rows, cols, parameter index) of every upper-triangle coupling entry."""
        n = self.n_cavities
        rows, cols, pidx = [], [], []
        for p, group in enumerate(self.hopping_groups):
            for b in group:
                rows.append(b)
                cols.append(b + 1)
                pidx.append(p)
        offset = self.n_free_hoppings
        emitters = self.template.emitters
        for p, group in enumerate(self.coupling_groups):
            for k in group:
                rows.append(emitters[k].cavity_index - 1)
                cols.append(n + k)
                pidx.append(offset + p)
        return np.array(rows), np.array(cols), np.array(pidx)

    def config_from_parameters(self, params: Sequence[float]) -> SystemConfig:
        params = np.asarray(params, dtype=float)
        if params.shape != (self.n_free,):
            raise ConfigError(f"expected {self.n_free} parameters, got {params.shape}")
        hoppings = np.empty(self.n_cavities - 1)
        for p, group in enumerate(self.hopping_groups):
            hoppings[group] = params[p]
        couplings = np.empty(self.template.n_emitters)
        for p, group in enumerate(self.coupling_groups):
            couplings[group] = params[self.n_free_hoppings + p]
        return self.template.with_hoppings(hoppings).with_couplings(couplings)

    def check_parity(self) -> None:
        """Reject layouts whose mirror sectors cannot alternate through the spectrum.

        Perfect transfer needs eigenvectors to alternate between mirror-even
        and mirror-odd in energy order, so the even sector may exceed the odd
        one by at most dim mod 2 states. A full emitter comb with odd N has
        two mirror-fixed sites (centre cavity and its emitter) and fails.
        """
        n = self.n_cavities
        fixed = (n % 2) + sum(1 for c in self.template.emitter_cavities if 2 * c == n + 1)
        if fixed != self.dim % 2:
            raise ParityError(
                f"no mirror-symmetric solution for N={n} with this emitter layout "
                f"({fixed} mirror-fixed sites in a {self.dim}-state problem); "
                "remove the emitter in the central cavity (sparse_center=True) for odd N"
            )


def make_problem_jchh(n: int, sparse_center: bool = False) -> IepProblem:
    """One emitter per cavity (targets: 2n-site spectrum) or, for odd n, the centre emitter removed."""
    if n < 4:
        raise ConfigError("make_problem_jchh needs n >= 4")
    if sparse_center:
        if n % 2 == 0:
            raise ConfigError("sparse_center needs odd n (there is no single central cavity)")
        cavities = [c for c in range(1, n + 1) if c != (n + 1) // 2]
    else:
        cavities = list(range(1, n + 1))
    template = jchh([1.0] * (n - 1), [1.0] * len(cavities), emitter_cavities=cavities)
    dim = n + len(cavities)
    problem = IepProblem(template, target_spectrum(dim, 1.0))
    problem.check_parity()
    return problem


def make_problem_chain(n: int) -> IepProblem:
    """Cavity-only chain targeting its own perfect-transfer spectrum."""
    if n < 2:
        raise ConfigError("make_problem_chain needs n >= 2")
    template = SystemConfig(n, (1.0,) * (n - 1))
    return IepProblem(template, target_spectrum(n, 1.0))


def action(h: HamiltonianMatrix | np.ndarray, targets: Sequence[float]) -> float:
    """Sum of squared differences between sorted eigenvalues and targets."""
    entries = h.entries if isinstance(h, HamiltonianMatrix) else np.asarray(h, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (entries.shape[0],):
        raise ConfigError(f"{targets.size} targets for dimension {entries.shape[0]}")
    diff = eigendecompose(entries).eigenvalues - targets
    return float(diff @ diff)


def relative_errors(eigenvalues: Sequence[float], targets: Sequence[float]) -> np.ndarray:
    """|lambda_n - t_n| relative to the largest target magnitude."""
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    targets = np.asarray(targets, dtype=float)
    return np.abs(eigenvalues - targets) / np.max(np.abs(targets))


def heat_bath_probability(delta_s: float, beta: float) -> float:
    """exp(-beta dS) / (1 + exp(-beta dS)), evaluated without overflow."""
    x = 0.0 if delta_s == 0 or beta == 0 else -beta * delta_s
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def heat_bath_accept(delta_s: float, beta: float, u: float) -> bool:
    return u < heat_bath_probability(delta_s, beta)


@dataclass(frozen=True)
class AnnealReport:
    solution: SystemConfig
    final_action: float
    action_trace: tuple[float, ...]
    acceptance_rate: tuple[float, ...]
    elapsed_sweeps: int
    converged: bool
    max_relative_error: float
    targets: tuple[float, ...]
    schedule: AnnealSchedule
    free_parameters: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "solution": self.solution.to_dict(),
            "free_parameters": list(self.free_parameters),
            "final_action": self.final_action,
            "max_relative_error": self.max_relative_error,
            "converged": self.converged,
            "elapsed_sweeps": self.elapsed_sweeps,
            "action_trace": list(self.action_trace),
            "acceptance_rate": list(self.acceptance_rate),
            "targets": list(self.targets),
            "schedule": self.schedule.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> AnnealReport:
        return cls(
            solution=SystemConfig.from_dict(data["solution"]),
            final_action=data["final_action"],
            action_trace=tuple(data["action_trace"]),
            acceptance_rate=tuple(data["acceptance_rate"]),
            elapsed_sweeps=data["elapsed_sweeps"],
            converged=data["converged"],
            max_relative_error=data["max_relative_error"],
            targets=tuple(data["targets"]),
            schedule=AnnealSchedule.from_dict(data["schedule"]),
            free_parameters=tuple(data["free_parameters"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def load_report(path: str | Path) -> AnnealReport:
    return AnnealReport.from_dict(json.loads(Path(path).read_text()))


def solve(
    problem: IepProblem,
    schedule: AnnealSchedule = AnnealSchedule(),
    tolerance: float = CONVERGENCE_TOL,
) -> AnnealReport:
    """Anneal the free couplings of ``problem`` towards its target spectrum.

    All free parameters start at 1.0. Signs are unconstrained during the run
    (the array graph is a tree, so every sign pattern is gauge-equivalent) and
    the returned solution is mapped to the all-positive gauge.

    Raises:
        ParityError: the layout cannot host a perfect-transfer spectrum.
    """
    problem.check_parity()
    targets = np.asarray(problem.targets)
    rows, cols, pidx = problem.entry_map()
    dim = problem.dim
    h = np.zeros((dim, dim))

    def action_of(p: np.ndarray) -> float:
        vals = -p[pidx]
        h[rows, cols] = vals
        h[cols, rows] = vals
        diff = np.linalg.eigvalsh(h) - targets
        return float(diff @ diff)

    def max_error(p: np.ndarray) -> float:
        action_of(p)
        return float(relative_errors(np.linalg.eigvalsh(h), targets).max())

    rng = np.random.default_rng(schedule.rng_seed)
    n_free = problem.n_free
    params = np.ones(n_free)
    current = action_of(params)
    best_params, best = params.copy(), current
    step = schedule.step_size or DEFAULT_STEP_FRACTION * mean_gap(targets)
    beta = schedule.beta_initial
    sweeps = schedule.sweeps_per_stage

    trace: list[float] = []
    rates: list[float] = []
    stage = 0
    while True:
        if stage >= schedule.n_stages:
            refine = schedule.refine_tolerance
            if (
                refine is None
                or stage >= schedule.n_stages + schedule.max_refine_stages
                or max_error(best_params) <= refine
            ):
                break
        accepted = 0
        for _ in range(sweeps):
            proposal = params + rng.uniform(-step, step, n_free)
            trial = action_of(proposal)
            if heat_bath_accept(trial - current, beta, rng.random()):
                params, current = proposal, trial
                accepted += 1
                if current < best:
                    best, best_params = current, params.copy()
        trace.append(best)
        rates.append(accepted / sweeps)
        log.debug("stage %d beta=%.4g step=%.4g accept=%.3f best=%.3e", stage, beta, step, rates[-1], best)
        stage += 1
        beta *= schedule.alpha
        step *= schedule.step_decay

    best_params = np.abs(best_params)
    solution = problem.config_from_parameters(best_params)
    eig = eigendecompose(build_single_excitation(solution))
    diff = eig.eigenvalues - targets
    err = float(relative_errors(eig.eigenvalues, targets).max())
    return AnnealReport(
        solution=solution,
        final_action=float(diff @ diff),
        action_trace=tuple(trace),
        acceptance_rate=tuple(rates),
        elapsed_sweeps=stage * sweeps,
        converged=err <= tolerance,
        max_relative_error=err,
        targets=tuple(float(x) for x in targets),
        schedule=schedule,
        free_parameters=tuple(float(x) for x in best_params),
    )


def _solve_seed(args) -> AnnealReport:
    problem, schedule, tolerance = args
    return solve(problem, schedule, tolerance)


def solve_chains(
    problem: IepProblem,
    schedule: AnnealSchedule = AnnealSchedule(),
    chains: int = 1,
    jobs: int = 1,
    tolerance: float = CONVERGENCE_TOL,
) -> AnnealReport:
    """Run independent chains with seeds rng_seed, rng_seed+1, ...; return the lowest-action report."""
    if chains < 1:
        raise ConfigError("chains must be >= 1")
    problem.check_parity()
    tasks = [(problem, replace(schedule, rng_seed=schedule.rng_seed + k), tolerance) for k in range(chains)]
    if jobs > 1 and chains > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_solve_seed, tasks))
    else:
        reports = [_solve_seed(t) for t in tasks]
    return min(reports, key=lambda r: r.final_action)
