"""Cavity-emitter array configurations and their Hamiltonian matrices.

Cavities are labelled 1..N (as in config files and on the command line);
matrix rows/columns are ordinary 0-based array indices into ``basis``.

Couplings enter the matrix with a minus sign: hopping ``J_i`` between
cavities ``i`` and ``i+1`` gives the entry ``-J_i`` and an emitter coupled
with ``g`` to its cavity gives ``-g``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from cavityqst.errors import ConfigError

CONFIG_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class EmitterSpec:
    """A two-level emitter sitting in cavity ``cavity_index`` (1-based)."""

    cavity_index: int
    coupling: float
    energy: float = 0.0


@dataclass(frozen=True)
class SystemConfig:
    """Complete description of a coupled cavity array.

    Args:
        n_cavities: number of cavities N.
        hoppings: the N-1 photon hopping rates between neighbouring cavities.
        cavity_energies: N cavity energies, all zero when omitted.
        emitters: emitters, at most one per cavity. Their order fixes the order
            of the emitter-excited basis states.
    """

    n_cavities: int
    hoppings: tuple[float, ...]
    cavity_energies: tuple[float, ...] = None  # type: ignore[assignment]
    emitters: tuple[EmitterSpec, ...] = ()

    def __post_init__(self) -> None:
        n = self.n_cavities
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
            raise ConfigError(f"n_cavities must be a positive integer, got {n!r}")
        object.__setattr__(self, "n_cavities", int(n))
        hops = tuple(float(x) for x in self.hoppings)
        if len(hops) != n - 1:
            raise ConfigError(f"expected {n - 1} hoppings for {n} cavities, got {len(hops)}")
        object.__setattr__(self, "hoppings", hops)
        if self.cavity_energies is None:
            energies = (0.0,) * n
        else:
            energies = tuple(float(x) for x in self.cavity_energies)
        if len(energies) != n:
            raise ConfigError(f"expected {n} cavity energies, got {len(energies)}")
        object.__setattr__(self, "cavity_energies", energies)

        emitters = tuple(
            e if isinstance(e, EmitterSpec) else EmitterSpec(**e) for e in self.emitters
        )
        seen: set[int] = set()
        for e in emitters:
            if not 1 <= e.cavity_index <= n:
                raise ConfigError(f"emitter cavity_index {e.cavity_index} outside 1..{n}")
            if e.cavity_index in seen:
                raise ConfigError(
                    f"more than one emitter in cavity {e.cavity_index}; "
                    "use effective_coupling() to merge them"
                )
            seen.add(e.cavity_index)
        emitters = tuple(
            EmitterSpec(int(e.cavity_index), float(e.coupling), float(e.energy)) for e in emitters
        )
        object.__setattr__(self, "emitters", emitters)

        values = hops + energies + tuple(x for e in emitters for x in (e.coupling, e.energy))
        if not all(math.isfinite(x) for x in values):
            raise ConfigError("couplings and energies must be finite")

    @property
    def n_emitters(self) -> int:
        return len(self.emitters)

    @property
    def couplings(self) -> tuple[float, ...]:
        return tuple(e.coupling for e in self.emitters)

    @property
    def emitter_cavities(self) -> tuple[int, ...]:
        return tuple(e.cavity_index for e in self.emitters)

    def with_hoppings(self, hoppings: Sequence[float]) -> SystemConfig:
        return replace(self, hoppings=tuple(hoppings))

    def with_couplings(self, couplings: Sequence[float]) -> SystemConfig:
        if len(couplings) != self.n_emitters:
            raise ConfigError(f"expected {self.n_emitters} couplings, got {len(couplings)}")
        emitters = tuple(replace(e, coupling=float(g)) for e, g in zip(self.emitters, couplings))
        return replace(self, emitters=emitters)

    def with_cavity_energies(self, energies: Sequence[float]) -> SystemConfig:
        return replace(self, cavity_energies=tuple(energies))

    def to_dict(self) -> dict:
        return {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "n_cavities": self.n_cavities,
            "hoppings": list(self.hoppings),
            "cavity_energies": list(self.cavity_energies),
            "emitters": [
                {"cavity_index": e.cavity_index, "coupling": e.coupling, "energy": e.energy}
                for e in self.emitters
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> SystemConfig:
        version = data.get("schema_version", CONFIG_SCHEMA_VERSION)
        if version != CONFIG_SCHEMA_VERSION:
            raise ConfigError(f"unsupported config schema_version {version}")
        unknown = set(data) - {"schema_version", "n_cavities", "hoppings", "cavity_energies", "emitters"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(
                n_cavities=data["n_cavities"],
                hoppings=tuple(data["hoppings"]),
                cavity_energies=data.get("cavity_energies"),
                emitters=tuple(EmitterSpec(**e) for e in data.get("emitters", ())),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed config: {exc}") from exc


def chain(hoppings: Sequence[float], cavity_energies: Sequence[float] | None = None) -> SystemConfig:
    """Cavity-only array with the given hoppings."""
    return SystemConfig(len(hoppings) + 1, tuple(hoppings), cavity_energies)


def jchh(
    hoppings: Sequence[float],
    couplings: Sequence[float],
    emitter_cavities: Iterable[int] | None = None,
) -> SystemConfig:
    """Array with emitters in ``emitter_cavities`` (every cavity by default)."""
    n = len(hoppings) + 1
    cavities = list(range(1, n + 1)) if emitter_cavities is None else list(emitter_cavities)
    if len(cavities) != len(couplings):
        raise ConfigError(f"{len(couplings)} couplings for {len(cavities)} emitters")
    emitters = tuple(EmitterSpec(c, g) for c, g in zip(cavities, couplings))
    return SystemConfig(n, tuple(hoppings), emitters=emitters)


def load_config(path: str | Path) -> SystemConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return SystemConfig.from_dict(data)


def save_config(config: SystemConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2) + "\n")


@dataclass(frozen=True)
class BasisState:
    photon_counts: tuple[int, ...]
    emitter_excited: tuple[bool, ...]

    @property
    def excitations(self) -> int:
        return sum(self.photon_counts) + sum(self.emitter_excited)

    def label(self) -> str:
        photons = ",".join(str(n) for n in self.photon_counts)
        if not self.emitter_excited:
            return f"|{photons}>"
        flags = ",".join("1" if f else "0" for f in self.emitter_excited)
        return f"|{photons};{flags}>"


@dataclass(frozen=True)
class HamiltonianMatrix:
    entries: np.ndarray
    basis: tuple[BasisState, ...] = field(repr=False)

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"Hamiltonian must be square, got shape {entries.shape}")
        if len(self.basis) != entries.shape[0]:
            raise ValueError("basis length does not match matrix dimension")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def index_of(self, state: BasisState) -> int:
        return self.basis.index(state)

    def cavity_state_index(self, cavity: int, n_photons: int = 1) -> int:
        """Index of the state with ``n_photons`` in cavity ``cavity`` (1-based) and nothing else."""
        n = len(self.basis[0].photon_counts)
        m = len(self.basis[0].emitter_excited)
        counts = [0] * n
        counts[cavity - 1] = n_photons
        return self.index_of(BasisState(tuple(counts), (False,) * m))


def single_excitation_basis(config: SystemConfig) -> tuple[BasisState, ...]:
    n, m = config.n_cavities, config.n_emitters
    states = []
    for i in range(n):
        counts = [0] * n
        counts[i] = 1
        states.append(BasisState(tuple(counts), (False,) * m))
    for k in range(m):
        flags = [False] * m
        flags[k] = True
        states.append(BasisState((0,) * n, tuple(flags)))
    return tuple(states)


def build_single_excitation(config: SystemConfig) -> HamiltonianMatrix:
    """Hamiltonian in the one-excitation sector.

    The first N basis states hold the photon in cavity 1..N, the remaining
    ones have the corresponding emitter (in ``config.emitters`` order) excited.
    """
    n, m = config.n_cavities, config.n_emitters
    h = np.zeros((n + m, n + m))
    h[np.arange(n), np.arange(n)] = config.cavity_energies
    for i, hop in enumerate(config.hoppings):
        h[i, i + 1] = h[i + 1, i] = -hop
    for k, e in enumerate(config.emitters):
        row = n + k
        h[row, row] = e.energy
        h[e.cavity_index - 1, row] = h[row, e.cavity_index - 1] = -e.coupling
    return HamiltonianMatrix(h, single_excitation_basis(config))


def multi_excitation_basis(config: SystemConfig, n_exc: int) -> tuple[BasisState, ...]:
    """All states with ``n_exc`` excitations, sorted descending by (photon_counts, emitter_flags).

    For ``n_exc == 1`` this reproduces :func:`single_excitation_basis`.
    """
    n, m = config.n_cavities, config.n_emitters
    keys = []
    for k in range(min(m, n_exc) + 1):
        for excited in itertools.combinations(range(m), k):
            flags = tuple(1 if j in excited else 0 for j in range(m))
            for modes in itertools.combinations_with_replacement(range(n), n_exc - k):
                counts = [0] * n
                for mode in modes:
                    counts[mode] += 1
                keys.append(tuple(counts) + flags)
    keys.sort(reverse=True)
    return tuple(BasisState(key[:n], tuple(bool(f) for f in key[n:])) for key in keys)


def build_multi_excitation(config: SystemConfig, n_exc: int) -> HamiltonianMatrix:
    """Hamiltonian restricted to the sector with ``n_exc`` total excitations.

    Photons are bosons (any number per cavity); emitters hold at most one
    excitation. A hop of one photon from cavity i to i+1 carries
    ``-J_i * sqrt(n_i) * sqrt(n_{i+1} + 1)`` and an emitter releasing its
    excitation into its cavity carries ``-g * sqrt(n_cavity + 1)``.
    """
    if not isinstance(n_exc, (int, np.integer)) or n_exc < 1:
        raise ConfigError(f"n_exc must be a positive integer, got {n_exc!r}")
    basis = multi_excitation_basis(config, n_exc)
    index = {(s.photon_counts, s.emitter_excited): i for i, s in enumerate(basis)}
    omega = np.asarray(config.cavity_energies)
    h = np.zeros((len(basis), len(basis)))
    for a, state in enumerate(basis):
        counts, flags = state.photon_counts, state.emitter_excited
        h[a, a] = float(np.dot(counts, omega)) + sum(
            e.energy for e, excited in zip(config.emitters, flags) if excited
        )
        for i, hop in enumerate(config.hoppings):
            if counts[i] == 0:
                continue
            moved = list(counts)
            moved[i] -= 1
            moved[i + 1] += 1
            b = index[(tuple(moved), flags)]
            h[a, b] = h[b, a] = -hop * math.sqrt(counts[i]) * math.sqrt(counts[i + 1] + 1)
        for k, e in enumerate(config.emitters):
            if not flags[k]:
                continue
            c = e.cavity_index - 1
            released = list(counts)
            released[c] += 1
            lowered = tuple(False if j == k else f for j, f in enumerate(flags))
            b = index[(tuple(released), lowered)]
            h[a, b] = h[b, a] = -e.coupling * math.sqrt(counts[c] + 1)
    return HamiltonianMatrix(h, basis)


def boundary_engineered_equivalent(
    n_cavities: int, bulk_j: float, end_g: float
) -> tuple[SystemConfig, SystemConfig, tuple[int, ...]]:
    """Pair an end-emitter array with the equivalent boundary-engineered chain.

    Returns ``(with_emitters, chain_config, perm)``: ``with_emitters`` has
    ``n_cavities - 2`` cavities with emitters (coupling ``end_g``) in the two
    end cavities; ``chain_config`` is an ``n_cavities`` chain whose first and
    last bonds are ``end_g``. ``perm[a]`` is the chain site matching basis
    state ``a`` of the emitter array, so that
    ``H_emitters == H_chain[np.ix_(perm, perm)]`` entry for entry.
    """
    if n_cavities < 4:
        raise ConfigError("boundary engineering needs n_cavities >= 4")
    inner = n_cavities - 2
    with_emitters = jchh([bulk_j] * (inner - 1), [end_g, end_g], emitter_cavities=[1, inner])
    chain_config = chain([end_g] + [bulk_j] * (n_cavities - 3) + [end_g])
    # cavities 1..N-2 sit at chain sites 2..N-1; the two emitters are the chain ends
    perm = tuple(range(1, inner + 1)) + (0, n_cavities - 1)
    return with_emitters, chain_config, perm


def effective_coupling(g_values: Sequence[float]) -> float:
    """Collective coupling sqrt(sum g_j^2) of several emitters sharing one cavity."""
    if len(g_values) == 0:
        raise ConfigError("effective_coupling needs at least one coupling")
    return math.sqrt(math.fsum(float(g) ** 2 for g in g_values))
