"""Seeded disorder ensembles and emitter-impurity scans.

Every realization draws its uniforms from a stream keyed by
``(rng_seed, realization_index)``, always in the same parameter order
(N-1 hoppings, N cavity energies, one per emitter coupling), so a
realization does not depend on how the ensemble is chunked or on which
disorder strengths are being studied.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from cavityqst.errors import ConfigError
from cavityqst.evolve import EigenSystem, pass_times, peak_fidelity
from cavityqst.linalg import jacobi_eigh
from cavityqst.model import EmitterSpec, SystemConfig, build_single_excitation
from cavityqst.spectra import christandl_couplings

CHUNK = 256


class DisorderKind(enum.Enum):
    HOPPING_ABS = "hopping"
    CAVITY_ENERGY = "energy"
    JCHH_COUPLINGS = "jchh"


@dataclass(frozen=True)
class DisorderSpec:
    kind: DisorderKind
    base: SystemConfig
    delta_j: float = 0.0
    delta_omega: float = 0.0
    delta_g: float = 0.0
    realizations: int = 1
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.kind, DisorderKind):
            object.__setattr__(self, "kind", DisorderKind(self.kind))
        for name in ("delta_j", "delta_omega", "delta_g"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ConfigError(f"{name} must be finite and >= 0, got {value}")
        if self.realizations < 1:
            raise ConfigError("realizations must be >= 1")
        if not 0 <= self.rng_seed < 2**64:
            raise ConfigError("rng_seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class EnsembleResult:
    mean_fidelity_per_pass: np.ndarray
    std_error_per_pass: np.ndarray
    realization_count: int
    samples: np.ndarray | None = None


def realization_uniforms(config: SystemConfig, rng_seed: int, realization_index: int) -> np.ndarray:
    seq = np.random.SeedSequence(rng_seed, spawn_key=(realization_index,))
    n = config.n_cavities
    return np.random.default_rng(seq).random(2 * n - 1 + config.n_emitters)


def perturb(base: SystemConfig, spec: DisorderSpec, realization_index: int) -> SystemConfig:
    """One disorder realization of ``base``.

    HOPPING_ABS adds a uniform shift in [-dJ, dJ] to each hopping;
    CAVITY_ENERGY adds a uniform energy in (-dOmega/2, dOmega/2) to each cavity;
    JCHH_COUPLINGS shifts hoppings within +-dJ/2 and emitter couplings within +-dg/2.
    """
    u = realization_uniforms(base, spec.rng_seed, realization_index)
    n, m = base.n_cavities, base.n_emitters
    u_hop, u_energy, u_coupling = u[: n - 1], u[n - 1 : 2 * n - 1], u[2 * n - 1 :]
    hoppings = np.asarray(base.hoppings)
    if spec.kind is DisorderKind.HOPPING_ABS:
        return base.with_hoppings(hoppings + spec.delta_j * (2 * u_hop - 1))
    if spec.kind is DisorderKind.CAVITY_ENERGY:
        return base.with_cavity_energies(np.asarray(base.cavity_energies) + spec.delta_omega * (u_energy - 0.5))
    hoppings = hoppings + spec.delta_j * (u_hop - 0.5)
    couplings = np.asarray(base.couplings) + spec.delta_g * (u_coupling - 0.5) if m else []
    return base.with_hoppings(hoppings).with_couplings(couplings)


def _chunk_fidelities(
    spec: DisorderSpec, start: int, stop: int, source: int, target: int, n_passes: int, search_time: bool
) -> np.ndarray:
    mats = np.stack(
        [build_single_excitation(perturb(spec.base, spec, r)).entries for r in range(start, stop)]
    )
    w, s = jacobi_eigh(mats)
    if search_time:
        out = np.empty((stop - start, n_passes))
        for k in range(stop - start):
            eig = EigenSystem(w[k], s[k])
            for p in range(n_passes):
                out[k, p] = peak_fidelity(eig, source, target, t_min=p * math.pi, t_max=(p + 1) * math.pi)[1]
        return out
    times = pass_times(n_passes)
    weights = s[:, target, :] * s[:, source, :]
    phases = np.exp(-1j * np.multiply.outer(times, w))  # (passes, R, dim)
    amps = np.einsum("prd,rd->rp", phases, weights)
    return np.minimum(1.0, np.abs(amps) ** 2)


def _chunk_task(args) -> np.ndarray:
    return _chunk_fidelities(*args)


def ensemble_pass_fidelity(
    spec: DisorderSpec,
    n_passes: int = 3,
    source: int = 0,
    target: int | None = None,
    search_time: bool = False,
    jobs: int = 1,
    keep_samples: bool = False,
) -> EnsembleResult:
    """Mean transfer fidelity at the clean pass times t_n = pi/2 + (n-1) pi.

    ``source``/``target`` are basis indices (default: first and last cavity).
    With ``search_time`` each pass instead takes the best f(t) inside
    [(n-1) pi, n pi]. Realizations are evaluated in fixed-size chunks and
    reduced in index order, so the result does not depend on ``jobs``.
    """
    if n_passes < 1:
        raise ConfigError("n_passes must be >= 1")
    if target is None:
        target = spec.base.n_cavities - 1
    r = spec.realizations
    tasks = [
        (spec, lo, min(lo + CHUNK, r), source, target, n_passes, search_time) for lo in range(0, r, CHUNK)
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_chunk_task, tasks))
    else:
        parts = [_chunk_task(t) for t in tasks]
    samples = np.concatenate(parts, axis=0)
    mean = samples.mean(axis=0)
    sem = samples.std(axis=0, ddof=1) / math.sqrt(r) if r > 1 else np.zeros(n_passes)
    return EnsembleResult(mean, sem, r, samples if keep_samples else None)


def disorder_curve(
    kind: DisorderKind,
    base: SystemConfig,
    deltas: Sequence[float],
    realizations: int,
    rng_seed: int = 0,
    n_passes: int = 3,
    jobs: int = 1,
    search_time: bool = False,
) -> list[tuple[float, ...]]:
    """Rows ``(delta, P_f pass 1, ..., pass n)`` for HOPPING_ABS or CAVITY_ENERGY disorder."""
    key = {DisorderKind.HOPPING_ABS: "delta_j", DisorderKind.CAVITY_ENERGY: "delta_omega"}.get(kind)
    if key is None:
        raise ConfigError("disorder_curve supports hopping and energy disorder; use heatmap for jchh")
    rows = []
    for delta in deltas:
        spec = DisorderSpec(kind, base, realizations=realizations, rng_seed=rng_seed, **{key: float(delta)})
        res = ensemble_pass_fidelity(spec, n_passes, jobs=jobs, search_time=search_time)
        rows.append((float(delta), *map(float, res.mean_fidelity_per_pass)))
    return rows


@dataclass(frozen=True)
class HeatmapPoint:
    delta_g: float
    delta_j: float
    mean_fidelity: float
    std_error: float


def heatmap(
    base: SystemConfig,
    delta_j_values: Sequence[float],
    delta_g_values: Sequence[float],
    realizations: int = 200,
    rng_seed: int = 0,
    jobs: int = 1,
) -> list[HeatmapPoint]:
    """Mean f(pi/2) under JCHH coupling disorder on a (delta_g, delta_j) grid, long form."""
    points = []
    for dg in delta_g_values:
        for dj in delta_j_values:
            spec = DisorderSpec(
                DisorderKind.JCHH_COUPLINGS,
                base,
                delta_j=float(dj),
                delta_g=float(dg),
                realizations=realizations,
                rng_seed=rng_seed,
            )
            res = ensemble_pass_fidelity(spec, n_passes=1, jobs=jobs)
            points.append(
                HeatmapPoint(float(dg), float(dj), float(res.mean_fidelity_per_pass[0]), float(res.std_error_per_pass[0]))
            )
    return points


def impurity_scan(
    n: int,
    positions: Sequence[int],
    g_values: Sequence[float],
    j0: float = 1.0,
    uniform: bool = False,
) -> list[tuple[int | str, float, float]]:
    """f(pi/2) on the n-cavity perfect-transfer chain with added emitters.

    Each row is ``(position, g, fidelity)``: a single emitter of coupling g in
    cavity ``position`` (1-based), or, with ``uniform``, one emitter of
    coupling g in every cavity (position reported as ``"all"``).
    """
    base = SystemConfig(n, tuple(christandl_couplings(n, j0)))
    t = math.pi / (2 * j0)
    layouts: list[tuple[int | str, list[int]]]
    if uniform:
        layouts = [("all", list(range(1, n + 1)))]
    else:
        for p in positions:
            if not 1 <= p <= n:
                raise ConfigError(f"impurity position {p} outside 1..{n}")
        layouts = [(p, [p]) for p in positions]

    rows: list[tuple[int | str, float, float]] = []
    for label, cavities in layouts:
        mats = np.stack(
            [
                build_single_excitation(
                    replace(base, emitters=tuple(EmitterSpec(c, float(g)) for c in cavities))
                ).entries
                for g in g_values
            ]
        )
        w, s = jacobi_eigh(mats)
        amps = np.einsum("kd,kd,kd->k", s[:, n - 1, :], s[:, 0, :], np.exp(-1j * w * t))
        for g, f in zip(g_values, np.minimum(1.0, np.abs(amps) ** 2)):
            rows.append((label, float(g), float(f)))
    return rows


def write_csv(path: str | Path | None, header: Sequence[str], rows) -> str:
    """Write rows with floats at 12 significant digits; returns the CSV text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([f"{x:.12g}" if isinstance(x, float) else x for x in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
