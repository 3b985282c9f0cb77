"""End-to-end acceptance checks, one test per criterion.

A PASS/FAIL summary line per criterion is printed at the end of the run
(see conftest.py).
"""

import filecmp
import math
import subprocess
import sys
import time

import numpy as np
import pytest
import scipy.linalg

from cavityqst.disorder import DisorderKind, DisorderSpec, ensemble_pass_fidelity, heatmap, impurity_scan
from cavityqst.errors import ParityError
from cavityqst.evolve import (
    basis_vector,
    eigendecompose,
    evolve_state,
    fidelity,
    peak_fidelity,
)
from cavityqst.iep import AnnealSchedule, make_problem_chain, make_problem_jchh, relative_errors, solve
from cavityqst.model import (
    boundary_engineered_equivalent,
    build_multi_excitation,
    build_single_excitation,
    chain,
)
from cavityqst.spectra import (
    annealed_jchh_config,
    christandl_chain,
    empirical_jchh_config,
    empirical_jchh_couplings,
    target_spectrum,
)

HALF_PI = math.pi / 2

# N=8 comparison table, first half of the mirror-symmetric array.
REF_J_FORMULA = [4.527, 6.164, 7.246, 8.000]
REF_G_ANNEALED = [9.558, 7.824, 5.872, 3.234]
REF_G_FORMULA = [9.562, 7.806, 5.826, 3.231]


def transfer(config, t=HALF_PI):
    eig = eigendecompose(build_single_excitation(config))
    return fidelity(eig, 0, config.n_cavities - 1, t)


def test_criterion_01_cavity_only_annealing_recovers_perfect_couplings():
    """Annealed N=8 cavity-only couplings within 0.5% of sqrt(i(8-i)), under 2 minutes."""
    start = time.perf_counter()
    report = solve(make_problem_chain(8), AnnealSchedule(rng_seed=0))
    elapsed = time.perf_counter() - start
    expected = np.sqrt([i * (8 - i) for i in range(1, 8)])
    np.testing.assert_allclose(report.solution.hoppings, expected, rtol=5e-3)
    assert elapsed < 120


def test_criterion_02_clean_chain_transfer():
    """N=8 perfect-transfer chain: f(pi/2) and f(3pi/2) at least 1 - 1e-9."""
    config = christandl_chain(8)
    assert transfer(config) >= 1 - 1e-9
    assert transfer(config, HALF_PI + math.pi) >= 1 - 1e-9


def test_criterion_03_jchh_engineering():
    """Published N=8 couplings transfer; the seeded annealer matches the spectrum to 0.1% and transfers."""
    assert transfer(annealed_jchh_config(8)) >= 0.99
    report = solve(make_problem_jchh(8), AnnealSchedule(rng_seed=0))
    eig = eigendecompose(build_single_excitation(report.solution))
    assert relative_errors(eig.eigenvalues, target_spectrum(16)).max() <= 1e-3
    assert fidelity(eig, 0, 7, HALF_PI) >= 0.99
    assert fidelity(eig, 0, 7, HALF_PI + math.pi) >= 0.99


@pytest.mark.parametrize("n", [12, 16])
def test_criterion_04_published_longer_arrays(n):
    """Published N=12 and N=16 couplings give f(pi/2) >= 0.99."""
    assert transfer(annealed_jchh_config(n)) >= 0.99


def test_criterion_05_empirical_formulas():
    """Closed-form N=8 couplings: J within 0.2%, g within 1% of the published comparison values; f(pi/2) >= 0.99."""
    j, g = empirical_jchh_couplings(8)
    np.testing.assert_allclose(j[:4], REF_J_FORMULA, rtol=2e-3)
    np.testing.assert_allclose(g[:4], REF_G_ANNEALED, rtol=1e-2)
    np.testing.assert_allclose(g[:4], REF_G_FORMULA, rtol=1e-2)
    assert transfer(empirical_jchh_config(8)) >= 0.99


def test_criterion_06_parity_constraint():
    """Odd full comb raises PARITY; sparse centre-removed N=9 converges and transfers."""
    for n in (5, 7, 9, 11):
        with pytest.raises(ParityError):
            make_problem_jchh(n)
    report = solve(make_problem_jchh(9, sparse_center=True), AnnealSchedule(rng_seed=0))
    assert report.converged
    assert report.solution.n_cavities + report.solution.n_emitters == 17
    assert transfer(report.solution) >= 0.99


def test_criterion_07_multi_excitation_dichotomy():
    """Two excitations: cavity-only N=8 peak >= 0.999, JCHH N=8 peak < 0.9 over [0, 4pi]."""
    h = build_multi_excitation(christandl_chain(8), 2)
    f_chain = peak_fidelity(eigendecompose(h), h.cavity_state_index(1, 2), h.cavity_state_index(8, 2), 4 * math.pi)[1]
    assert f_chain >= 0.999
    h = build_multi_excitation(annealed_jchh_config(8), 2)
    assert h.dim == 128
    f_jchh = peak_fidelity(eigendecompose(h), h.cavity_state_index(1, 2), h.cavity_state_index(8, 2), 4 * math.pi)[1]
    assert f_jchh < 0.9


@pytest.mark.parametrize("n", [6, 8, 9, 12])
def test_criterion_08_boundary_engineering(n):
    """End emitters equal a boundary-engineered chain after permutation (max abs difference <= 1e-14)."""
    a, b, perm = boundary_engineered_equivalent(n, 1.0, 0.37)
    ha = build_single_excitation(a).entries
    hb = build_single_excitation(b).entries
    assert np.max(np.abs(ha - hb[np.ix_(perm, perm)])) <= 1e-14


def test_criterion_09_disorder_suite():
    """Clean ensemble, decreasing passes, impurity mirror symmetry, uniform-g revival, monotone heatmap."""
    base = christandl_chain(8)
    clean = ensemble_pass_fidelity(DisorderSpec(DisorderKind.HOPPING_ABS, base, realizations=50))
    np.testing.assert_allclose(clean.mean_fidelity_per_pass, 1.0, rtol=0, atol=1e-9)

    noisy = ensemble_pass_fidelity(
        DisorderSpec(DisorderKind.HOPPING_ABS, base, delta_j=0.5, realizations=1000, rng_seed=0)
    )
    p = noisy.mean_fidelity_per_pass
    assert p[0] > p[1] > p[2]

    g_grid = np.linspace(0, 4, 41)
    for i in range(1, 5):
        left = [r[2] for r in impurity_scan(9, [i], g_grid)]
        right = [r[2] for r in impurity_scan(9, [10 - i], g_grid)]
        np.testing.assert_allclose(left, right, rtol=0, atol=1e-10)

    f = np.array([r[2] for r in impurity_scan(9, [], g_grid, uniform=True)])
    minima = [k for k in range(1, len(f) - 1) if f[k] < f[k - 1] and f[k] < f[k + 1]]
    assert minima, "f(g) has no interior local minimum"
    k = minima[0]
    assert f[k:].max() > f[k] + 0.05

    deltas = np.linspace(0, 4, 6)
    points = heatmap(annealed_jchh_config(8), deltas, deltas, realizations=200, rng_seed=0)
    mean = np.array([q.mean_fidelity for q in points]).reshape(6, 6)  # rows: delta_g, cols: delta_j
    err = np.array([q.std_error for q in points]).reshape(6, 6)
    slack_j = 2 * np.hypot(err[:, 1:], err[:, :-1])
    slack_g = 2 * np.hypot(err[1:, :], err[:-1, :])
    assert np.all(mean[:, 1:] - mean[:, :-1] <= slack_j)
    assert np.all(mean[1:, :] - mean[:-1, :] <= slack_g)


def test_criterion_10_numerics_suite():
    """Eigensystem bounds, unitarity/reversibility/composition on 200 instances, expm oracle, additivity."""
    rng = np.random.default_rng(20240601)
    for _ in range(200):
        dim = int(rng.integers(1, 65))
        a = rng.normal(size=(dim, dim)) * rng.uniform(0.1, 5)
        h = a + a.T
        eig = eigendecompose(h)
        s, w = eig.eigenvectors, eig.eigenvalues
        assert np.max(np.abs(s.T @ s - np.eye(dim))) <= 1e-10
        assert np.max(np.abs(s @ np.diag(w) @ s.T - h)) <= 1e-9 * max(1.0, np.abs(h).max())

        psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        psi /= np.linalg.norm(psi)
        t1, t2 = rng.uniform(0, 10), rng.uniform(-5, 5)
        out = evolve_state(eig, psi, t1)
        assert abs(np.linalg.norm(out) - 1) <= 1e-9
        assert np.max(np.abs(evolve_state(eig, out, -t1) - psi)) <= 1e-8
        assert np.max(np.abs(evolve_state(eig, psi, t1 + t2) - evolve_state(eig, out, t2))) <= 1e-8

        if dim <= 6:
            assert np.max(np.abs(out - scipy.linalg.expm(-1j * h * t1) @ psi)) <= 1e-8

    for dim in range(1, 7):
        for _ in range(10):
            a = rng.normal(size=(dim, dim))
            h = a + a.T
            psi = basis_vector(dim, int(rng.integers(dim)))
            t = rng.uniform(-10, 10)
            got = evolve_state(eigendecompose(h), psi, t)
            assert np.max(np.abs(got - scipy.linalg.expm(-1j * h * t) @ psi)) <= 1e-8

    for _ in range(20):
        n = int(rng.integers(2, 9))
        config = chain(rng.uniform(0.2, 3, n - 1), rng.uniform(-1, 1, n))
        single = eigendecompose(build_single_excitation(config)).eigenvalues
        pairs = np.sort([single[i] + single[j] for i in range(n) for j in range(i, n)])
        two = eigendecompose(build_multi_excitation(config, 2)).eigenvalues
        np.testing.assert_allclose(two, pairs, rtol=0, atol=1e-9)


RUNS = [
    ["chain", "--n", "8"],
    ["iep", "--n", "4", "--cavity-only", "--sweeps", "200", "--chains", "2", "--seed", "3"],
    ["iep", "--n", "8", "--sweeps", "100", "--chains", "2", "--seed", "3"],
    ["disorder", "--kind", "hopping", "--delta-j", "0.5", "--r", "300", "--seed", "11"],
    ["disorder", "--kind", "energy", "--delta-omega", "1", "--r", "1", "--seed", "11"],
    ["disorder", "--kind", "jchh", "--grid", "3", "--r", "20", "--seed", "11"],
    ["multi", "--n", "6", "--n-exc", "2"],
    ["impurity", "--g-grid", "0:4:11"],
    ["boundary", "--n", "9"],
]


def test_criterion_11_reproducible_outputs(tmp_path):
    """Every subcommand writes byte-identical files on two consecutive runs."""
    dirs = [tmp_path / "a", tmp_path / "b"]
    for out in dirs:
        for argv in RUNS:
            proc = subprocess.run(
                [sys.executable, "-m", "cavityqst", *argv, "--out", str(out)], capture_output=True, text=True
            )
            # a short anneal may legitimately report NONCONVERGENCE; its files are still compared
            assert proc.returncode in (0, 4), proc.stderr
    names = sorted(p.name for p in dirs[0].iterdir())
    assert names == sorted(p.name for p in dirs[1].iterdir())
    assert sum(n.endswith(".csv") for n in names) >= 10
    match, mismatch, errors = filecmp.cmpfiles(dirs[0], dirs[1], names, shallow=False)
    assert mismatch == [] and errors == []
