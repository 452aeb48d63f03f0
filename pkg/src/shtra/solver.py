"""ADMM solver for smooth hierarchical tensor-ring completion.

Model::

    min  1/2 ||X - F(G_1..G_N)||_F^2 + lam ||D(X)||_1 + sum_n ||G_n||_TNN
    s.t. P_O(X) = P_O(T)

split with ``Z = X``, ``Y = D(Z)`` and ``M_n = G_n``. One iteration runs
G -> M -> Z -> Y -> X -> duals -> beta (-> rank pruning).

TNN on a core ``R_{n-1} x I_n x R_n`` is taken after permuting it to
``R_{n-1} x R_n x I_n`` so that the DFT runs along the physical mode.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
from threadpoolctl import threadpool_limits

from . import tensor as tc
from .tr import TRChain, core_fold_2, core_unfold_2, random_chain, subchain_matrix, tr_reconstruct
from .tsvd import sth, t_svt, tnn
from .tv import apply_d, apply_d_adjoint, dtd_spectrum, solve_z

log = logging.getLogger(__name__)

PENALTY_RULES = ("multiplicative", "residual-driven")
HISTORY_FIELDS = ("iter", "relchange", "zeta1", "zeta2", "zeta3", "objective", "ranks")


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters. Defaults are the color-image settings.

    ``weights=None`` means weight 4 on the first two modes and 0 elsewhere.
    ``use_tv=False`` switches the Z/Y path off entirely (pure hierarchical
    TR completion) and requires ``lam == 0``.
    """

    lam: float = 3e-4
    beta: tuple = (0.001, 0.001, 0.8)
    weights: tuple | None = None
    tr_ranks: object = 15
    maxiter: int = 400
    epsilon: float = 5e-4
    kappa: float = 1.01
    beta_cap: float = 10.0
    eta: tuple = (1.1, 0.9)
    penalty_rule: str = "multiplicative"
    prune: bool = True
    prune_tol: float = 5e-2
    prune_interval: int = 10
    use_tv: bool = True
    seed: int = 0
    threads: int = 1

    def validate(self, ndim=None):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if len(self.beta) != 3:
            raise ValueError("beta needs three entries")
        b1, b2, b3 = self.beta
        if b1 <= 0 or b3 <= 0 or b2 < 0 or (self.use_tv and b2 <= 0):
            raise ValueError(f"penalties must be positive, got {self.beta}")
        if not self.use_tv and self.lam != 0:
            raise ValueError("disabling the TV path requires lam == 0")
        if self.maxiter < 1:
            raise ValueError("maxiter must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.kappa < 1:
            raise ValueError("kappa must be >= 1")
        if self.penalty_rule not in PENALTY_RULES:
            raise ValueError(f"penalty_rule must be one of {PENALTY_RULES}")
        if self.eta[0] < 1 or not 0 < self.eta[1]:
            raise ValueError(f"invalid eta {self.eta}")
        if self.prune_tol < 0 or self.prune_interval < 1:
            raise ValueError("invalid pruning settings")
        if self.threads < 1:
            raise ValueError("threads must be positive")
        if ndim is not None and self.weights is not None and len(self.weights) != ndim:
            raise ValueError(f"need {ndim} TV weights, got {len(self.weights)}")

    def weights_for(self, ndim):
        if self.weights is not None:
            return tuple(float(w) for w in self.weights)
        return tuple(4.0 if d < 2 else 0.0 for d in range(ndim))


@dataclass
class SolverState:
    x: np.ndarray
    chain: TRChain
    m: list
    z: np.ndarray
    y: object
    lam1: np.ndarray
    lam2: object
    lam3: list
    beta: tuple
    zeta: tuple = (math.inf, math.inf, math.inf)
    iter: int = 0
    history: list = field(default_factory=list)


@dataclass(frozen=True)
class HistoryRecord:
    iter: int
    relchange: float
    zeta1: float
    zeta2: float
    zeta3: float
    objective: float
    ranks: tuple

    def csv_row(self):
        nums = (self.relchange, self.zeta1, self.zeta2, self.zeta3, self.objective)
        return ",".join([str(self.iter)] + [repr(float(v)) for v in nums] + [";".join(map(str, self.ranks))])

    @classmethod
    def from_csv_row(cls, row):
        parts = row.strip().split(",")
        ranks = tuple(int(r) for r in parts[6].split(";"))
        return cls(int(parts[0]), *(float(p) for p in parts[1:6]), ranks)


def history_csv(history):
    return "\n".join([",".join(HISTORY_FIELDS)] + [h.csv_row() for h in history]) + "\n"


@dataclass
class SolveResult:
    x: np.ndarray
    history: list
    state: SolverState
    converged: bool


def _to_svt_layout(core):
    return np.transpose(core, (0, 2, 1))


def _core_tnn(core):
    return tnn(_to_svt_layout(core))


def _map(fn, items, threads):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def init_state(t, mask, config):
    """Zero-filled X, random normal cores, M = G, Z = X, Y = D(Z), zero duals."""
    t = np.asarray(t, dtype=np.float64)
    x = mask.project(t)
    chain = random_chain(t.shape, config.tr_ranks, config.seed)
    w = config.weights_for(t.ndim)
    y = apply_d(x, w)
    return SolverState(
        x=x,
        chain=chain,
        m=[c.copy() for c in chain.cores],
        z=x.copy(),
        y=y,
        lam1=np.zeros_like(x),
        lam2=y * 0.0,
        lam3=[np.zeros_like(c) for c in chain.cores],
        beta=tuple(float(b) for b in config.beta),
    )


def update_g(state, config):
    """Gauss-Seidel least-squares sweep over the cores.

    ``(G_n)_<2> (A^T A + b3 I) = X_<n> A + (L3_n)_<2> + b3 (M_n)_<2>`` with
    ``A`` the subchain matrix of the current (partly updated) chain.
    """
    b3 = state.beta[2]
    cores = list(state.chain.cores)
    for n in range(len(cores)):
        a = subchain_matrix(TRChain(tuple(cores)), n)
        rhs = tc.unfold_circular(state.x, n) @ a
        rhs += core_unfold_2(state.lam3[n]) + b3 * core_unfold_2(state.m[n])
        gram = a.T @ a
        gram[np.diag_indices_from(gram)] += b3
        sol = scipy.linalg.solve(gram, rhs.T, assume_a="pos")
        cores[n] = core_fold_2(sol.T, cores[n].shape)
    return TRChain(tuple(cores))


def update_m(state, config):
    """Threshold the frequency singular values of ``G_n - L3_n / b3`` at ``1 / b3``.

    The slice level ``1 / b3`` makes this the exact minimiser of the M
    subproblem for the TNN normalised by ``1 / I_n``; see :func:`t_svt`.
    """
    b3 = state.beta[2]

    def one(pair):
        g, lam = pair
        shifted = _to_svt_layout(g - lam / b3)
        tau = 1.0 / (b3 * shifted.shape[2])
        return np.ascontiguousarray(_to_svt_layout(t_svt(shifted, tau)))

    return _map(one, list(zip(state.chain.cores, state.lam3)), config.threads)


def update_z(state, config, spectrum):
    """Solve ``(b1 I + b2 D*D) Z = D*(L2 + b2 Y) + b1 X - L1``."""
    b1, b2, _ = state.beta
    j = b1 * state.x - state.lam1
    if not config.use_tv:
        return j / b1
    j += apply_d_adjoint(state.lam2 + b2 * state.y, state.x.shape)
    return solve_z(j, b1, b2, spectrum)


def update_y(state, config):
    w = config.weights_for(state.z.ndim)
    dz = apply_d(state.z, w)
    if not config.use_tv:
        return dz
    b2 = state.beta[1]
    return (dz - state.lam2 / b2).map(lambda c: sth(c, config.lam / b2))


def update_x(state, config, t, mask):
    """Observed entries copied from ``t``; the rest ``(F(G) + L1 + b1 Z) / (1 + b1)``."""
    b1 = state.beta[0]
    free = (tr_reconstruct(state.chain) + state.lam1 + b1 * state.z) / (1.0 + b1)
    return np.where(mask.observed, t, free)


def update_duals(state, config):
    """Dual ascent; returns ``(lam1, lam2, lam3, zeta)``."""
    b1, b2, b3 = state.beta
    w = config.weights_for(state.z.ndim)
    r1 = state.z - state.x
    r2 = state.y - apply_d(state.z, w)
    r3 = [m - g for m, g in zip(state.m, state.chain.cores)]
    lam1 = state.lam1 + b1 * r1
    lam2 = state.lam2 + b2 * r2 if config.use_tv else state.lam2
    lam3 = [l + b3 * r for l, r in zip(state.lam3, r3)]
    zeta = (
        tc.frobenius_norm(r1),
        r2.frobenius_norm(),
        float(sum(np.linalg.norm(r.ravel()) for r in r3)),
    )
    return lam1, lam2, lam3, zeta


def update_beta(beta, zeta, zeta_prev, config):
    """Multiplicative growth ``min(kappa b, cap)`` or the residual-driven rule.

    The residual rule grows ``b_i`` by ``eta1`` when ``zeta_i`` failed to
    drop below ``eta2`` times its previous value; the cap applies to both.
    """
    cap = config.beta_cap
    if config.penalty_rule == "multiplicative":
        return tuple(min(config.kappa * b, cap) if b > 0 else b for b in beta)
    eta1, eta2 = config.eta
    if zeta_prev is None:
        return tuple(beta)
    return tuple(
        min(eta1 * b, cap) if (b > 0 and z > eta2 * zp) else b
        for b, z, zp in zip(beta, zeta, zeta_prev)
    )


def bond_energies(m, n):
    """``e(r) = ||M_n(:, :, r)||_F + ||M_{n+1}(r, :, :)||_F`` for the bond after core n."""
    left = m[n]
    right = m[(n + 1) % len(m)]
    return np.sqrt((left**2).sum(axis=(0, 1))) + np.sqrt((right**2).sum(axis=(1, 2)))


def bond_basis(m, n):
    """Orthogonal change of basis on the bond after core n that concentrates energy.

    Columns are eigenvectors of ``L^T L + R R^T`` (``L``, ``R`` the bond-side
    unfoldings of ``M_n`` and ``M_{n+1}``), largest eigenvalue first.
    """
    left = m[n].reshape(-1, m[n].shape[2], order="F")
    nxt = m[(n + 1) % len(m)]
    right = nxt.reshape(nxt.shape[0], -1, order="F")
    _, vecs = np.linalg.eigh(left.T @ left + right @ right.T)
    return vecs[:, ::-1]


def _rotate_bond(arrays, n, basis):
    nxt = (n + 1) % len(arrays)
    arrays[n] = np.tensordot(arrays[n], basis, axes=(2, 0))
    arrays[nxt] = np.tensordot(basis.T, arrays[nxt], axes=(1, 0))


def prune_ranks(state, config):
    """Drop bond indices whose joint energy in M is at most ``prune_tol * max``.

    An orthogonal gauge change on a bond leaves F(G), every Frobenius norm
    and every TNN unchanged, so a redundant bond direction need not be
    aligned with a coordinate. When no coordinate index qualifies, the bond
    is rotated into the eigenbasis of :func:`bond_basis` and tested again.
    Rotation and deletion are applied alike to the cores, to M and to the
    multipliers. At least one index per bond survives.
    """
    size = len(state.m)
    cores = list(state.chain.cores)
    m = list(state.m)
    lam3 = list(state.lam3)
    changed = False
    for n in range(size):
        if size == 1 or m[n].shape[2] == 1:
            continue
        nxt = (n + 1) % size
        e = bond_energies(m, n)
        keep = e > config.prune_tol * e.max()
        if keep.all():
            basis = bond_basis(m, n)
            rotated = list(m)
            _rotate_bond(rotated, n, basis)
            e = bond_energies(rotated, n)
            keep = e > config.prune_tol * e.max()
            if keep.all():
                continue
            for arrays in (cores, m, lam3):
                _rotate_bond(arrays, n, basis)
        if not keep.any():
            keep[np.argmax(e)] = True
        changed = True
        for arrays in (cores, m, lam3):
            arrays[n] = np.ascontiguousarray(arrays[n][:, :, keep])
            arrays[nxt] = np.ascontiguousarray(arrays[nxt][keep, :, :])
    if not changed:
        return state
    log.debug("pruned ranks to %s", [c.shape[2] for c in cores])
    return replace(state, chain=TRChain(tuple(cores)), m=m, lam3=lam3)


def objective(state, config):
    """``1/2 ||X - F(G)||^2 + lam ||D(X)||_1 + sum_n TNN(G_n)`` with the unnormalised TNN."""
    fit = 0.5 * tc.frobenius_norm(state.x - tr_reconstruct(state.chain)) ** 2
    tv = 0.0
    if config.use_tv and config.lam > 0:
        tv = config.lam * apply_d(state.x, config.weights_for(state.x.ndim)).l1_norm()
    return fit + tv + sum(_core_tnn(g) for g in state.chain.cores)


def _check_finite(state):
    for name in ("x", "z", "lam1"):
        if not np.all(np.isfinite(getattr(state, name))):
            raise FloatingPointError(f"non-finite values in {name} at iteration {state.iter}")
    if not all(np.all(np.isfinite(g)) for g in state.chain.cores):
        raise FloatingPointError(f"non-finite TR core at iteration {state.iter}")


def step(state, config, t, mask, spectrum):
    """One full ADMM iteration; returns the new state and the relative change."""
    x_last = state.x
    state = replace(state, iter=state.iter + 1)
    state = replace(state, chain=update_g(state, config))
    state = replace(state, m=update_m(state, config))
    if config.prune and state.iter % config.prune_interval == 0:
        state = prune_ranks(state, config)
    state = replace(state, z=update_z(state, config, spectrum))
    state = replace(state, y=update_y(state, config))
    state = replace(state, x=update_x(state, config, t, mask))
    lam1, lam2, lam3, zeta = update_duals(state, config)
    zeta_prev = None if state.iter == 1 else state.zeta
    beta = update_beta(state.beta, zeta, zeta_prev, config)
    state = replace(state, lam1=lam1, lam2=lam2, lam3=lam3, zeta=zeta, beta=beta)
    _check_finite(state)
    last_norm = tc.frobenius_norm(x_last)
    diff = tc.frobenius_norm(state.x - x_last)
    relchange = diff / last_norm if last_norm > 0 else (0.0 if diff == 0 else math.inf)
    return state, relchange


def solve(t, mask, config=None, callback=None):
    """Complete ``t`` from the entries flagged in ``mask``.

    ``callback(state, record)`` is called after every iteration. Stops when
    ``||X - X_last|| / ||X_last|| < epsilon`` or after ``maxiter`` sweeps.
    """
    config = SolverConfig() if config is None else config
    t = np.asarray(t, dtype=np.float64)
    config.validate(t.ndim)
    if mask.shape != t.shape:
        raise ValueError(f"mask shape {mask.shape} does not match tensor {t.shape}")
    if not np.all(np.isfinite(t[mask.observed])):
        raise ValueError("observed entries contain non-finite values")
    # fix the memory layout so that results depend on values alone
    t = np.asfortranarray(mask.project(t))
    mask = replace(mask, observed=np.asfortranarray(mask.observed))
    spectrum = dtd_spectrum(t.shape, config.weights_for(t.ndim)) if config.use_tv else None
    converged = False
    with threadpool_limits(limits=1):
        state = init_state(t, mask, config)
        while state.iter < config.maxiter:
            state, relchange = step(state, config, t, mask, spectrum)
            record = HistoryRecord(
                state.iter, relchange, *state.zeta, objective(state, config), state.chain.ranks
            )
            state.history.append(record)
            if callback is not None:
                callback(state, record)
            if relchange < config.epsilon:
                converged = True
                break
    return SolveResult(state.x, state.history, state, converged)
