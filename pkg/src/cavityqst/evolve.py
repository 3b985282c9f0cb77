"""Exact time evolution and transfer-fidelity measurements (hbar = 1)."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from cavityqst.linalg import jacobi_eigh
from cavityqst.model import HamiltonianMatrix

GRID_PER_PERIOD = 2048
DEFAULT_SEARCH_WINDOW = 3 * math.pi
NORM_TOL = 1e-10


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues (ascending) and orthogonal eigenvector matrix, H = S diag(w) S^T."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def propagator(self, t: float) -> np.ndarray:
        s = self.eigenvectors
        return (s * np.exp(-1j * self.eigenvalues * t)) @ s.T

    def transfer_amplitudes(self, source: int, target: int, times) -> np.ndarray:
        """<target| exp(-iHt) |source> for each time in ``times``."""
        _check_index(source, self.dim)
        _check_index(target, self.dim)
        weights = self.eigenvectors[target] * self.eigenvectors[source]
        phases = np.exp(-1j * np.multiply.outer(np.asarray(times, dtype=float), self.eigenvalues))
        return phases @ weights


@dataclass(frozen=True)
class FidelityTrace:
    times: np.ndarray
    probabilities: np.ndarray

    def to_csv(self, path: str | Path | None = None, labels: Sequence[str] | None = None) -> str:
        """Serialise as ``t,p_1,...,p_dim`` rows with 12 significant digits."""
        dim = self.probabilities.shape[1]
        header = ["t"] + (list(labels) if labels else [f"p_{k}" for k in range(1, dim + 1)])
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for t, row in zip(self.times, self.probabilities):
            writer.writerow([f"{t:.12g}"] + [f"{p:.12g}" for p in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _check_index(index: int, dim: int) -> None:
    if not 0 <= index < dim:
        raise IndexError(f"basis index {index} out of range for dimension {dim}")


def eigendecompose(h: HamiltonianMatrix | np.ndarray) -> EigenSystem:
    entries = h.entries if isinstance(h, HamiltonianMatrix) else np.asarray(h, dtype=float)
    if not np.all(np.isfinite(entries)):
        raise ValueError("Hamiltonian has non-finite entries")
    if not np.allclose(entries, entries.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(entries).max())):
        raise ValueError("Hamiltonian is not symmetric")
    w, s = jacobi_eigh(entries)
    w.setflags(write=False)
    s.setflags(write=False)
    return EigenSystem(w, s)


def basis_vector(dim: int, index: int) -> np.ndarray:
    _check_index(index, dim)
    psi = np.zeros(dim, dtype=complex)
    psi[index] = 1.0
    return psi


def evolve_state(eig: EigenSystem, psi0: np.ndarray, t: float) -> np.ndarray:
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (eig.dim,):
        raise ValueError(f"state has shape {psi0.shape}, expected ({eig.dim},)")
    norm = np.vdot(psi0, psi0).real
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"initial state is not normalised (norm^2 = {norm})")
    s = eig.eigenvectors
    return s @ (np.exp(-1j * eig.eigenvalues * t) * (s.T @ psi0))


def fidelity(eig: EigenSystem, source: int, target: int, t: float) -> float:
    """Probability |<target|exp(-iHt)|source>|^2."""
    amp = eig.transfer_amplitudes(source, target, [t])[0]
    return float(min(1.0, abs(amp) ** 2))


def fidelity_curve(eig: EigenSystem, source: int, target: int, times) -> np.ndarray:
    amps = eig.transfer_amplitudes(source, target, times)
    return np.minimum(1.0, np.abs(amps) ** 2)


def pass_times(n_passes: int, period: float = math.pi) -> np.ndarray:
    """Arrival times t_n = period/2 + (n-1) period of the clean system."""
    if n_passes < 1:
        raise ValueError("n_passes must be >= 1")
    return period / 2 + period * np.arange(n_passes)


def pass_fidelities(eig: EigenSystem, source: int, target: int, n_passes: int) -> np.ndarray:
    return fidelity_curve(eig, source, target, pass_times(n_passes))


def peak_fidelity(
    eig: EigenSystem,
    source: int,
    target: int,
    t_max: float = DEFAULT_SEARCH_WINDOW,
    grid: int | None = None,
    t_min: float = 0.0,
) -> tuple[float, float]:
    """Maximise f(t) over [t_min, t_max]: grid scan, then bounded refinement.

    ``grid`` defaults to 2048 points per pi of window length; JCHH traces carry
    fast cavity-emitter oscillations that coarser grids miss.
    """
    span = t_max - t_min
    if span <= 0:
        raise ValueError("t_max must exceed t_min")
    if grid is None:
        grid = max(2, math.ceil(GRID_PER_PERIOD * span / math.pi) + 1)
    if grid < 2:
        raise ValueError("grid must be >= 2")
    times = np.linspace(t_min, t_max, grid)
    values = fidelity_curve(eig, source, target, times)
    k = int(np.argmax(values))
    best_t, best_f = float(times[k]), float(values[k])

    lo, hi = times[max(k - 1, 0)], times[min(k + 1, grid - 1)]
    res = minimize_scalar(
        lambda t: -fidelity(eig, source, target, t),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-6 * max(1.0, abs(best_t))},
    )
    if -res.fun > best_f:
        best_t, best_f = float(res.x), float(-res.fun)
    return best_t, best_f


def probability_trace(eig: EigenSystem, psi0: np.ndarray, times) -> FidelityTrace:
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (eig.dim,):
        raise ValueError(f"state has shape {psi0.shape}, expected ({eig.dim},)")
    times = np.asarray(times, dtype=float)
    s = eig.eigenvectors
    coeffs = s.T @ psi0
    phases = np.exp(-1j * np.multiply.outer(times, eig.eigenvalues))
    amplitudes = (phases * coeffs) @ s.T
    probs = np.abs(amplitudes) ** 2
    return FidelityTrace(times, probs)
