"""Tensor-ring chains: reconstruction, connect products and subchain matrices.

Core ``n`` has shape ``(R_{n-1}, I_n, R_n)`` with ``R_{-1} = R_{N-1}`` closing
the ring. Merged mode indices follow column-major order (left factor
fastest), which is what makes :func:`subchain_matrix` line up with
:func:`shtra.tensor.unfold_circular`.
"""

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .rng import SplitMix64
from .tensor import fold_circular


@dataclass(frozen=True)
class TRChain:
    """Ordered ring of 3-order cores.

    ``ranks[n]`` is the bond dimension between core ``n`` and core ``n + 1``
    (circularly), i.e. the usual TR rank vector ``[R_1, ..., R_N]``.
    """

    cores: tuple

    def __post_init__(self):
        cores = tuple(np.asarray(c, dtype=np.float64) for c in self.cores)
        object.__setattr__(self, "cores", cores)
        if not cores:
            raise ValueError("a chain needs at least one core")
        for n, core in enumerate(cores):
            if core.ndim != 3:
                raise ValueError(f"core {n} is not 3-order: shape {core.shape}")
            nxt = cores[(n + 1) % len(cores)]
            if core.shape[2] != nxt.shape[0]:
                raise ValueError(
                    f"rank mismatch between core {n} {core.shape} and core "
                    f"{(n + 1) % len(cores)} {nxt.shape}"
                )

    def __len__(self):
        return len(self.cores)

    @property
    def dims(self):
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self):
        return tuple(c.shape[2] for c in self.cores)


def tensor_connect_product(g, h):
    """Merge adjacent cores: slice ``(i, j)`` of the result is ``G(i) @ H(j)``.

    The merged index is ``i + I_g * j``.
    """
    if g.shape[2] != h.shape[0]:
        raise ValueError(f"rank mismatch: {g.shape} then {h.shape}")
    out = np.einsum("aib,bjc->aijc", g, h)
    return out.reshape(g.shape[0], g.shape[1] * h.shape[1], h.shape[2], order="F")


def merge_cores(cores):
    return reduce(tensor_connect_product, cores)


def tr_element(chain, index):
    """Single entry ``Trace(G_1(i_1) ... G_N(i_N))`` by direct slice products."""
    if len(index) != len(chain):
        raise IndexError(f"expected {len(chain)} indices, got {len(index)}")
    prod = None
    for core, i in zip(chain.cores, index):
        if not 0 <= i < core.shape[1]:
            raise IndexError(f"index {i} out of range for mode of size {core.shape[1]}")
        prod = core[:, i, :] if prod is None else prod @ core[:, i, :]
    return float(np.trace(prod))


def core_unfold_2(g):
    """Mode-2 unfolding ``I_n x (R_{n-1} R_n)``, left rank index fastest."""
    return g.transpose(1, 0, 2).reshape(g.shape[1], -1, order="F")


def core_fold_2(mat, shape):
    r_in, size, r_out = shape
    return np.reshape(mat, (size, r_in, r_out), order="F").transpose(1, 0, 2)


def subchain_matrix(chain, n):
    """Matrix ``G^(!=n)_<2>`` of shape ``prod_{m != n} I_m x R_{n-1} R_n``.

    Built from the connect product ``G_{n+1} ... G_N G_1 ... G_{n-1}`` and
    arranged so that ``X_<n> = core_unfold_2(G_n) @ subchain_matrix(chain, n).T``.
    """
    size = len(chain)
    if size < 2:
        raise ValueError("subchain matrix needs a chain with at least two cores")
    order = [(n + k) % size for k in range(1, size)]
    sub = merge_cores([chain.cores[m] for m in order])
    # sub[b, j, a]: b = R_n, a = R_{n-1}
    return sub.transpose(1, 2, 0).reshape(sub.shape[1], -1, order="F")


def tr_reconstruct(chain):
    """Full tensor represented by the chain.

    The ring is closed by contracting the cheapest core against the subchain
    of all the others, which is the trace over the closing rank pair without
    materialising an ``R x prod(I) x R`` intermediate.
    """
    if len(chain) == 1:
        return np.einsum("aia->i", chain.cores[0]).copy()
    n = int(np.argmax(chain.dims))
    unfolded = core_unfold_2(chain.cores[n]) @ subchain_matrix(chain, n).T
    return fold_circular(unfolded, n, chain.dims)


def chain_shift(chain, k):
    """Rotate so that core ``k`` comes first (the ring counterpart of ``permute_circular``)."""
    k %= len(chain)
    return TRChain(chain.cores[k:] + chain.cores[:k])


def _normalize_ranks(dims, ranks):
    if np.isscalar(ranks):
        ranks = [int(ranks)] * len(dims)
    ranks = [int(r) for r in ranks]
    if len(ranks) != len(dims):
        raise ValueError(f"need {len(dims)} ranks, got {len(ranks)}")
    if min(ranks) < 1 or min(dims) < 1:
        raise ValueError("ranks and dims must be positive")
    return ranks


def random_chain(dims, ranks, seed):
    """Chain with i.i.d. standard normal cores drawn from SplitMix64/Box-Muller.

    Cores are filled in order, each in column-major order, from one stream.
    """
    dims = [int(d) for d in dims]
    ranks = _normalize_ranks(dims, ranks)
    rng = SplitMix64(seed)
    cores = []
    for n, size in enumerate(dims):
        shape = (ranks[n - 1], size, ranks[n])
        cores.append(rng.normal_block(int(np.prod(shape))).reshape(shape, order="F"))
    return TRChain(tuple(cores))
