"""Perfect-transfer couplings and target spectra."""

from __future__ import annotations

import math

import numpy as np

from cavityqst.errors import ConfigError
from cavityqst.evolve import eigendecompose
from cavityqst.model import SystemConfig, build_single_excitation, chain, jchh

# Published annealed couplings (hoppings, emitter couplings) for arrays with
# one emitter per cavity, keyed by N. Values are as printed, including the
# 4-decimal entries of the N=16 column.
ANNEALED_JCHH_COUPLINGS: dict[int, tuple[tuple[float, ...], tuple[float, ...]]] = {
    8: (
        (4.521, 6.158, 7.232, 7.979, 7.232, 6.158, 4.521),
        (9.558, 7.825, 5.872, 3.234, 3.234, 5.872, 7.825, 9.558),
    ),
    12: (
        (5.597, 7.712, 9.255, 10.322, 11.355, 12.007, 11.355, 10.322, 9.255, 7.712, 5.597),
        (14.755, 13.056, 11.278, 9.261, 7.025, 3.987, 3.987, 7.025, 9.261, 11.278, 13.056, 14.755),
    ),
    16: (
        (6.519, 9.030, 10.876, 12.310, 13.515, 14.461, 15.294, 16.003,
         15.294, 14.461, 13.515, 12.310, 10.876, 9.0301, 6.519),
        (19.929, 18.264, 16.511, 14.708, 12.753, 10.581, 8.0311, 4.6159,
         4.6159, 8.0311, 10.581, 12.753, 14.708, 16.511, 18.264, 19.929),
    ),
}


def christandl_couplings(n: int, j0: float = 1.0) -> np.ndarray:
    """Hoppings J_i = sqrt(i (n - i)) * j0, i = 1..n-1."""
    if n < 2:
        raise ConfigError(f"need at least 2 sites, got {n}")
    if not j0 > 0:
        raise ConfigError(f"j0 must be positive, got {j0}")
    i = np.arange(1, n)
    return np.sqrt(i * (n - i)) * j0


def christandl_chain(n: int, j0: float = 1.0) -> SystemConfig:
    return chain(christandl_couplings(n, j0))


def target_spectrum(n: int, j0: float = 1.0) -> np.ndarray:
    """Eigenvalues of the n-site perfect-transfer chain, ascending.

    Equi-spaced with spacing 2*j0 and symmetric about zero.
    """
    if n < 2:
        raise ConfigError(f"need at least 2 sites, got {n}")
    return np.array(eigendecompose(build_single_excitation(christandl_chain(n, j0))).eigenvalues)


def empirical_jchh_couplings(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Fitted closed-form couplings for an n-cavity array with one emitter per cavity.

    The fitted expressions describe the first half of the array,
    ``J_i = sqrt(i (11n - 6i)) / 2`` and
    ``g_i = sqrt((2i - n - 1)(14i - 27n - 7)) / 4`` for ``i <= n/2``; the
    second half is their mirror image (``J_i = J_{n-i}``, ``g_i = g_{n+1-i}``).
    Only even n is supported.
    """
    if n < 4 or n % 2:
        raise ConfigError(f"empirical couplings are defined for even n >= 4, got {n}")
    half = n // 2
    i = np.arange(1, half + 1)
    j_half = np.sqrt(i * (11 * n - 6 * i)) / 2
    g_half = np.sqrt((2 * i - n - 1) * (14 * i - 27 * n - 7)) / 4
    hoppings = np.concatenate([j_half, j_half[:-1][::-1]])
    couplings = np.concatenate([g_half, g_half[::-1]])
    return hoppings, couplings


def empirical_jchh_config(n: int) -> SystemConfig:
    return jchh(*empirical_jchh_couplings(n))


def annealed_jchh_config(n: int) -> SystemConfig:
    """Published annealed couplings for n in {8, 12, 16}."""
    try:
        hoppings, couplings = ANNEALED_JCHH_COUPLINGS[n]
    except KeyError:
        raise ConfigError(
            f"no published couplings for n={n}; available: {sorted(ANNEALED_JCHH_COUPLINGS)}"
        ) from None
    return jchh(hoppings, couplings)


def mean_gap(targets) -> float:
    targets = np.asarray(targets, dtype=float)
    if targets.size < 2:
        return 1.0
    return float((targets[-1] - targets[0]) / (targets.size - 1))


def transfer_time(j0: float = 1.0) -> float:
    return math.pi / (2 * j0)
