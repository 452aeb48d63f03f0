from dataclasses import replace

import numpy as np
import pytest

from oracles import full_slice_svt
from shtra.solver import (
    HistoryRecord,
    SolverConfig,
    SolverState,
    bond_energies,
    history_csv,
    init_state,
    objective,
    prune_ranks,
    solve,
    update_beta,
    update_duals,
    update_g,
    update_m,
    update_x,
    update_y,
    update_z,
)
from shtra.synthetic import tr_tensor
from shtra.tensor import ObservationMask, frobenius_norm, inner_product, make_mask, unfold_circular
from shtra.tr import TRChain, core_unfold_2, random_chain, subchain_matrix, tr_reconstruct
from shtra.tsvd import sth, tnn
from shtra.tv import DiffStack, apply_d, apply_d_adjoint, dtd_spectrum

DIMS = (3, 4, 2)
W = (1.0, 2.0, 0.5)


def random_state(seed=0, dims=DIMS, ranks=2, beta=(0.3, 0.7, 0.9)):
    rng = np.random.default_rng(seed)
    chain = random_chain(dims, ranks, seed + 100)

    def stack():
        return DiffStack(tuple(rng.standard_normal(dims) for _ in dims), W)

    return SolverState(
        x=rng.standard_normal(dims),
        chain=chain,
        m=[rng.standard_normal(c.shape) for c in chain.cores],
        z=rng.standard_normal(dims),
        y=stack(),
        lam1=rng.standard_normal(dims),
        lam2=stack(),
        lam3=[rng.standard_normal(c.shape) for c in chain.cores],
        beta=beta,
    )


CONFIG = SolverConfig(lam=0.2, weights=W, tr_ranks=2)


# ---- subproblem objectives written from the augmented Lagrangian


def g_objective(state, cores, n):
    chain = TRChain(tuple(cores))
    b3 = state.beta[2]
    fit = 0.5 * frobenius_norm(state.x - tr_reconstruct(chain)) ** 2
    g = cores[n]
    return fit + inner_product(state.lam3[n], state.m[n] - g) + 0.5 * b3 * frobenius_norm(state.m[n] - g) ** 2


def z_objective(state, z):
    b1, b2, _ = state.beta
    r = state.y - apply_d(z, W)
    return (
        inner_product(state.lam1, z - state.x)
        + 0.5 * b1 * frobenius_norm(z - state.x) ** 2
        + state.lam2.inner(r)
        + 0.5 * b2 * r.frobenius_norm() ** 2
    )


def x_objective(state, x):
    b1 = state.beta[0]
    fit = 0.5 * frobenius_norm(x - tr_reconstruct(state.chain)) ** 2
    return fit + inner_product(state.lam1, state.z - x) + 0.5 * b1 * frobenius_norm(state.z - x) ** 2


# ---- G


def test_update_g_fixed_point():
    s = random_state(1)
    s = replace(s, x=tr_reconstruct(s.chain), m=list(s.chain.cores), lam3=[np.zeros_like(c) for c in s.chain.cores])
    new = update_g(s, CONFIG)
    for a, b in zip(new.cores, s.chain.cores):
        np.testing.assert_allclose(a, b, atol=1e-10)


def test_update_g_large_penalty_returns_m():
    s = replace(random_state(2), beta=(0.3, 0.7, 1e9))
    for a, b in zip(update_g(s, CONFIG).cores, s.m):
        np.testing.assert_allclose(a, b, atol=1e-6)


def test_update_g_beats_perturbations():
    s = random_state(3)
    new = update_g(s, CONFIG).cores
    rng = np.random.default_rng(4)
    # first core was solved against the old cores, the last against the new ones
    cases = [(0, [new[0]] + list(s.chain.cores[1:])), (len(new) - 1, list(new))]
    for n, cores in cases:
        best = g_objective(s, cores, n)
        for _ in range(100):
            trial = list(cores)
            trial[n] = cores[n] + 1e-3 * rng.standard_normal(cores[n].shape)
            assert best <= g_objective(s, trial, n) + 1e-12


# ---- M


def test_update_m_matches_permuted_svt():
    s = random_state(5)
    got = update_m(s, CONFIG)
    b3 = s.beta[2]
    for g, lam, m in zip(s.chain.cores, s.lam3, got):
        assert m.shape == g.shape
        ref = full_slice_svt(np.transpose(g - lam / b3, (0, 2, 1)), 1.0 / b3)
        np.testing.assert_allclose(m, np.transpose(ref, (0, 2, 1)), atol=1e-10)


def test_update_m_limits():
    s = random_state(6)
    zero = replace(s, chain=TRChain(tuple(np.zeros_like(c) for c in s.chain.cores)), lam3=[np.zeros_like(c) for c in s.lam3])
    assert all(not m.any() for m in update_m(zero, CONFIG))
    big = replace(s, beta=(0.3, 0.7, 1e9), lam3=[np.zeros_like(c) for c in s.lam3])
    for m, g in zip(update_m(big, CONFIG), s.chain.cores):
        np.testing.assert_allclose(m, g, atol=1e-6)


def test_update_m_threads_identical():
    s = random_state(7)
    a = update_m(s, CONFIG)
    b = update_m(s, replace(CONFIG, threads=3))
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


# ---- Z


def test_update_z_without_tv_coupling():
    s = random_state(8, beta=(0.3, 0.0, 0.9))
    s = replace(s, lam2=s.lam2 * 0.0)
    np.testing.assert_allclose(update_z(s, CONFIG, dtd_spectrum(DIMS, W)), s.x - s.lam1 / 0.3, atol=1e-12)


def test_update_z_solves_linear_system_and_subproblem():
    s = random_state(9)
    b1, b2, _ = s.beta
    spectrum = dtd_spectrum(DIMS, W)
    z = update_z(s, CONFIG, spectrum)
    j = b1 * s.x - s.lam1 + apply_d_adjoint(s.lam2 + b2 * s.y)
    residual = b1 * z + b2 * apply_d_adjoint(apply_d(z, W)) - j
    assert frobenius_norm(residual) <= 1e-8 * frobenius_norm(j)
    np.testing.assert_allclose(update_z(replace(s, z=z), CONFIG, spectrum), z, atol=1e-12)
    rng = np.random.default_rng(10)
    best = z_objective(s, z)
    for _ in range(100):
        assert best <= z_objective(s, z + 1e-3 * rng.standard_normal(z.shape)) + 1e-12


# ---- Y


def test_update_y_cases():
    s = random_state(11)
    b2 = s.beta[1]
    dz = apply_d(s.z, W)
    exact = update_y(s, replace(CONFIG, lam=0.0))
    for a, b in zip(exact.active(), (dz - s.lam2 / b2).active()):
        np.testing.assert_array_equal(a, b)
    huge = update_y(s, replace(CONFIG, lam=1e6))
    assert all(not c.any() for c in huge.active())
    y = update_y(s, CONFIG)
    tau = CONFIG.lam / b2
    for comp, d, l in zip(y.components, dz.components, s.lam2.components):
        shifted = d - l / b2
        for got, v in zip(comp.ravel(), shifted.ravel()):
            assert got == float(sth(v, tau))


# ---- X


def test_update_x_examples():
    s = random_state(12)
    t = np.random.default_rng(13).standard_normal(DIMS)
    full = ObservationMask(np.ones(DIMS, dtype=bool))
    np.testing.assert_array_equal(update_x(s, CONFIG, t, full), t)
    none = ObservationMask(np.zeros(DIMS, dtype=bool))
    plain = replace(s, beta=(0.0, 0.7, 0.9), lam1=np.zeros(DIMS))
    np.testing.assert_allclose(update_x(plain, CONFIG, t, none), tr_reconstruct(s.chain), atol=1e-14)


def test_update_x_beats_printed_formula_and_perturbations():
    s = random_state(14)
    t = np.random.default_rng(15).standard_normal(DIMS)
    mask = make_mask(DIMS, 0.5, 3)
    x = update_x(s, CONFIG, t, mask)
    np.testing.assert_array_equal(x[mask.observed], t[mask.observed])
    b1 = s.beta[0]
    printed = (tr_reconstruct(s.chain) + s.lam1 - b1 * s.z) / (1.0 - b1)
    printed = np.where(mask.observed, t, printed)
    best = x_objective(s, x)
    assert best < x_objective(s, printed)
    rng = np.random.default_rng(16)
    for _ in range(100):
        trial = x + np.where(mask.observed, 0.0, 1e-3 * rng.standard_normal(DIMS))
        assert best <= x_objective(s, trial) + 1e-12


# ---- duals and penalties


def test_update_duals_cases():
    s = random_state(17)
    consistent = replace(s, z=s.x.copy(), y=apply_d(s.x, W), m=list(s.chain.cores))
    lam1, lam2, lam3, zeta = update_duals(consistent, CONFIG)
    np.testing.assert_array_equal(lam1, s.lam1)
    assert all(np.array_equal(a, b) for a, b in zip(lam2.active(), s.lam2.active()))
    assert all(np.array_equal(a, b) for a, b in zip(lam3, s.lam3))
    assert zeta == (0.0, 0.0, 0.0)

    frozen = replace(s, beta=(0.0, 0.0, 0.0))
    lam1, lam2, lam3, _ = update_duals(frozen, CONFIG)
    np.testing.assert_array_equal(lam1, s.lam1)
    assert all(np.array_equal(a, b) for a, b in zip(lam3, s.lam3))

    b1, b2, b3 = s.beta
    lam1, lam2, lam3, zeta = update_duals(s, CONFIG)
    np.testing.assert_allclose(lam1, s.lam1 + b1 * (s.z - s.x), rtol=1e-15)
    dz = apply_d(s.z, W)
    for got, l, y, d in zip(lam2.components, s.lam2.components, s.y.components, dz.components):
        np.testing.assert_allclose(got, l + b2 * (y - d), rtol=1e-14, atol=1e-14)
    for got, l, m, g in zip(lam3, s.lam3, s.m, s.chain.cores):
        np.testing.assert_allclose(got, l + b3 * (m - g), rtol=1e-15)
    assert zeta[0] == pytest.approx(frobenius_norm(s.z - s.x))
    assert zeta[2] == pytest.approx(sum(frobenius_norm(m - g) for m, g in zip(s.m, s.chain.cores)))


def test_update_beta_rules():
    base = SolverConfig()
    assert update_beta((0.1, 0.2, 0.3), (1, 1, 1), None, replace(base, kappa=1.0)) == (0.1, 0.2, 0.3)
    assert update_beta((9.99, 1.0, 0.5), (1, 1, 1), None, base) == (10.0, 1.01, 0.505)
    rule = replace(base, penalty_rule="residual-driven", eta=(1.1, 0.9))
    beta = (0.1, 0.2, 0.3)
    zeta = (8.0, 4.0, 2.0)
    for _ in range(5):
        halved = tuple(z / 2 for z in zeta)
        assert update_beta(beta, halved, zeta, rule) == beta
        zeta = halved
    grown = update_beta(beta, (1.0, 0.5, 2.0), (1.0, 1.0, 2.0), rule)
    assert grown == pytest.approx((0.11, 0.2, 0.33))
    assert update_beta((9.5, 0.2, 0.3), (1, 1, 1), (1, 1, 1), rule)[0] == 10.0


# ---- pruning


def padded_state(seed=18):
    chain = random_chain((3, 4, 5), 2, seed)
    cores = list(chain.cores)
    # append an all-zero index to the bond between core 0 and core 1
    cores[0] = np.concatenate([cores[0], np.zeros((2, 3, 1))], axis=2)
    cores[1] = np.concatenate([cores[1], np.zeros((1, 4, 2))], axis=0)
    padded = TRChain(tuple(cores))
    x = tr_reconstruct(padded)
    state = SolverState(
        x=x, chain=padded, m=list(padded.cores), z=x, y=None, lam1=x * 0,
        lam2=None, lam3=[np.zeros_like(c) for c in padded.cores], beta=(0.1, 0.1, 0.1),
    )
    return state, x


def test_prune_removes_padded_bond():
    state, x = padded_state()
    assert state.chain.ranks == (3, 2, 2)
    for tol in (1e-3, 0.0):
        pruned = prune_ranks(state, replace(CONFIG, prune_tol=tol))
        assert pruned.chain.ranks == (2, 2, 2)
        assert all(m.shape == g.shape for m, g in zip(pruned.m, pruned.chain.cores))
        assert all(l.shape == g.shape for l, g in zip(pruned.lam3, pruned.chain.cores))
        assert frobenius_norm(tr_reconstruct(pruned.chain) - x) <= 1e-12 * frobenius_norm(x)


def test_prune_keeps_full_rank_bonds():
    chain = random_chain((3, 4, 5), 2, 19)
    state = replace(padded_state()[0], chain=chain, m=list(chain.cores), lam3=[np.zeros_like(c) for c in chain.cores])
    assert prune_ranks(state, CONFIG) is state


def test_prune_finds_rotated_redundant_bond():
    state, x = padded_state(20)
    q, _ = np.linalg.qr(np.random.default_rng(21).standard_normal((3, 3)))
    cores = list(state.chain.cores)
    cores[0] = np.tensordot(cores[0], q, axes=(2, 0))
    cores[1] = np.tensordot(q.T, cores[1], axes=(1, 0))
    rotated = TRChain(tuple(cores))
    assert bond_energies(list(rotated.cores), 0).min() > 0.05 * bond_energies(list(rotated.cores), 0).max()
    state = replace(state, chain=rotated, m=list(rotated.cores))
    pruned = prune_ranks(state, CONFIG)
    assert pruned.chain.ranks == (2, 2, 2)
    y = tr_reconstruct(pruned.chain)
    assert frobenius_norm(y - x) <= 1e-10 * frobenius_norm(x)
    for n in range(3):
        err = frobenius_norm(unfold_circular(y, n) - core_unfold_2(pruned.chain.cores[n]) @ subchain_matrix(pruned.chain, n).T)
        assert err <= 1e-12 * frobenius_norm(y)


def test_prune_keeps_at_least_one_index():
    chain = random_chain((3, 4), (2, 1), 22)
    zeroed = TRChain((np.zeros_like(chain.cores[0]), np.zeros_like(chain.cores[1])))
    state = replace(padded_state()[0], chain=zeroed, m=list(zeroed.cores), lam3=list(zeroed.cores))
    assert prune_ranks(state, CONFIG).chain.ranks == (1, 1)


# ---- objective


def test_objective_examples():
    s = random_state(23)
    zero_chain = TRChain(tuple(np.zeros_like(c) for c in s.chain.cores))
    assert objective(replace(s, x=np.zeros(DIMS), chain=zero_chain), CONFIG) == 0.0
    exact = replace(s, x=tr_reconstruct(s.chain))
    tnns = sum(tnn(np.transpose(g, (0, 2, 1))) for g in s.chain.cores)
    assert objective(exact, replace(CONFIG, lam=0.0)) == pytest.approx(tnns, rel=1e-10)
    by_hand = (
        0.5 * frobenius_norm(s.x - tr_reconstruct(s.chain)) ** 2
        + CONFIG.lam * np.abs(np.concatenate([c.ravel() for c in apply_d(s.x, W).active()])).sum()
        + tnns
    )
    assert objective(s, CONFIG) == pytest.approx(by_hand, rel=1e-12)
    no_tv = replace(CONFIG, lam=0.0, use_tv=False, beta=(0.3, 0.0, 0.9))
    assert objective(s, no_tv) == pytest.approx(by_hand - CONFIG.lam * apply_d(s.x, W).l1_norm(), rel=1e-12)


# ---- full solver


def test_init_state():
    t = np.random.default_rng(24).standard_normal((4, 5, 3))
    mask = make_mask(t.shape, 0.4, 1)
    s = init_state(mask.project(t), mask, SolverConfig(tr_ranks=3))
    np.testing.assert_array_equal(s.x, mask.project(t))
    np.testing.assert_array_equal(s.z, s.x)
    assert s.chain.ranks == (3, 3, 3)
    assert all(np.array_equal(m, g) for m, g in zip(s.m, s.chain.cores))
    assert not s.lam1.any() and all(not l.any() for l in s.lam3)


def test_fully_observed_returns_input():
    t = tr_tensor((4, 5, 3), 2, 1)
    full = make_mask(t.shape, 1.0, 0)
    res = solve(t, full, SolverConfig(tr_ranks=3, weights=(1, 1, 0)))
    np.testing.assert_array_equal(res.x, t)
    assert res.converged and len(res.history) <= 2


def test_observed_entries_kept_every_iteration():
    t = 100 * tr_tensor((5, 6, 4), 2, 2)
    mask = make_mask(t.shape, 0.5, 3)
    seen = []
    solve(t, mask, SolverConfig(maxiter=15, tr_ranks=3), callback=lambda s, r: seen.append(np.array_equal(s.x[mask.observed], t[mask.observed])))
    assert len(seen) == 15 and all(seen)


def test_solver_deterministic_across_threads():
    t = 100 * tr_tensor((6, 6, 6), 2, 4)
    mask = make_mask(t.shape, 0.5, 5)
    config = SolverConfig(maxiter=25, tr_ranks=3, weights=(1, 1, 1))
    a = solve(t, mask, config)
    b = solve(t, mask, config)
    c = solve(t, mask, replace(config, threads=3))
    assert history_csv(a.history) == history_csv(b.history) == history_csv(c.history)
    np.testing.assert_array_equal(a.x, c.x)


def test_pure_tr_mode_recovers_scaled_tensor():
    t = 100 * tr_tensor((8, 8, 8, 8), 2, 1)
    mask = make_mask(t.shape, 0.6, 7)
    config = SolverConfig(lam=0.0, use_tv=False, beta=(0.001, 0.0, 0.8), tr_ranks=4, weights=(0, 0, 0, 0))
    res = solve(t, mask, config)
    assert np.linalg.norm(res.x - t) / np.linalg.norm(res.x) < 1e-2
    assert all(r <= 3 for r in res.history[-1].ranks)


def test_bounded_residuals_with_fixed_penalty():
    t = 100 * tr_tensor((8, 8, 8, 8), 2, 1)
    mask = make_mask(t.shape, 0.6, 7)
    config = SolverConfig(lam=0.0, kappa=1.0, tr_ranks=4, weights=(1, 1, 1, 1), maxiter=200, epsilon=1e-14)
    res = solve(t, mask, config)
    zetas = np.array([[h.zeta1, h.zeta2, h.zeta3] for h in res.history])
    assert np.all(np.isfinite(zetas))
    assert np.all(zetas[-50:].max(axis=0) <= zetas[:10].max(axis=0))


def test_solve_rejects_bad_input():
    t = np.ones((3, 3, 2))
    mask = make_mask(t.shape, 0.5, 0)
    with pytest.raises(ValueError):
        solve(t, make_mask((3, 3, 3), 0.5, 0))
    bad = t.copy()
    bad[mask.observed.nonzero()[0][0], mask.observed.nonzero()[1][0], mask.observed.nonzero()[2][0]] = np.inf
    with pytest.raises(ValueError):
        solve(bad, mask)
    for cfg in (SolverConfig(lam=-1.0), SolverConfig(beta=(0.0, 1.0, 1.0)), SolverConfig(use_tv=False),
                SolverConfig(penalty_rule="nope"), SolverConfig(weights=(1.0, 1.0))):
        with pytest.raises(ValueError):
            solve(t, mask, cfg)


def test_history_record_round_trip():
    rec = HistoryRecord(3, 0.1, 1e-3, 2.5, 1 / 3, 12.75, (4, 3, 2))
    assert HistoryRecord.from_csv_row(rec.csv_row()) == rec
    text = history_csv([rec])
    assert text.splitlines()[0] == "iter,relchange,zeta1,zeta2,zeta3,objective,ranks"
