"""Observability and attack-resilience analysis of a measurement model.

Stream subsets are arrays of 0-based stream indices.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass
from math import comb

import numpy as np

from .errors import AllStreamsCompromised, TooLarge

INVERTIBLE_TOL = 1e-9
ORTHO_TOL = 1e-12
DEFAULT_SUBSET_BUDGET = 10**6
DEFAULT_EXACT_CAP = 20
_CHUNK = 1 << 14


def _as_index(X, P):
    idx = np.unique(np.asarray(list(X) if not isinstance(X, np.ndarray) else X, dtype=np.int64))
    if idx.size and (idx[0] < 0 or idx[-1] >= P):
        raise ValueError(f"stream indices must lie in [0, {P})")
    return idx


def grammian(model, X=None) -> np.ndarray:
    """``sum_{p in X} h_p h_p^T``; all streams when ``X`` is None."""
    H = model.H if X is None else model.H[_as_index(X, model.n_streams)]
    return H.T @ H


def _selector_counts(model, X=None) -> np.ndarray:
    """Diagonal of the Grammian of a selector model: streams per component."""
    cols = model.columns if X is None else model.columns[_as_index(X, model.n_streams)]
    return np.bincount(cols, minlength=model.m_dim).astype(float)


def clean_lambda_min(model, X=None) -> float:
    """``lambda_min`` of the Grammian of ``X`` without forming it for selector models."""
    if model.is_selector:
        return float(_selector_counts(model, X).min())
    return lambda_min(grammian(model, X))


def lambda_min(G) -> float:
    return float(np.linalg.eigvalsh(G)[0])


def _invertible(lmin, G_scale=1.0):
    return bool(lmin > INVERTIBLE_TOL * max(1.0, G_scale))


def is_globally_observable(model, X=None) -> bool:
    if model.is_selector:
        return bool(_selector_counts(model, X).min() > 0)
    G = grammian(model, X)
    ev = np.linalg.eigvalsh(G)
    return _invertible(ev[0], ev[-1])


def complement(model, X) -> np.ndarray:
    mask = np.ones(model.n_streams, dtype=bool)
    mask[_as_index(X, model.n_streams)] = False
    return np.flatnonzero(mask)


def _removal_minima(model, size, budget):
    """Yield, chunk by chunk, ``(subsets, lambda_min(G_{P minus subset}))``
    for every subset of ``size`` streams."""
    P = model.n_streams
    n_sub = comb(P, size)
    if n_sub > budget:
        raise TooLarge(f"C({P}, {size}) = {n_sub} subsets exceeds the budget of {budget}")
    H = model.H
    G_all = H.T @ H
    if size == 0:
        yield np.empty((1, 0), np.int64), np.linalg.eigvalsh(G_all)[:1]
        return
    combos = itertools.combinations(range(P), size)
    while True:
        block = np.array(list(itertools.islice(combos, _CHUNK)), dtype=np.int64).reshape(-1, size)
        if not len(block):
            return
        Hs = H[block]  # (B, size, M)
        G = G_all[None] - np.einsum("bsi,bsj->bij", Hs, Hs)
        yield block, np.linalg.eigvalsh(G)[:, 0]


def is_sparse_observable(model, s, budget=DEFAULT_SUBSET_BUDGET) -> bool:
    """True iff the Grammian stays invertible after removing *any* ``s`` streams."""
    P = model.n_streams
    if not 0 <= s < P:
        raise ValueError(f"need 0 <= s < P={P}")
    scale = np.linalg.eigvalsh(grammian(model))[-1]
    for _, lmins in _removal_minima(model, s, budget):
        if not np.all(lmins > INVERTIBLE_TOL * max(1.0, scale)):
            return False
    return True


def orthogonal_structure(model):
    """``(unique_rows, labels)`` when the distinct measurement vectors form an
    orthonormal set, else None. ``labels[p]`` indexes the unique row of stream ``p``."""
    keys = np.round(model.H, 12)
    uniq, first, labels = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    V = model.H[first]
    if len(V) > model.m_dim:
        return None
    if np.max(np.abs(V @ V.T - np.eye(len(V)))) > ORTHO_TOL:
        return None
    return V, labels.ravel()


def min_multiplicity(model, X=None, structure=None) -> int:
    """Smallest number of streams in ``X`` sharing one direction of an
    orthonormal basis that extends the unique rows (0 if a direction is unused)."""
    if structure is None and model.is_selector:
        return int(_selector_counts(model, X).min())
    structure = structure or orthogonal_structure(model)
    if structure is None:
        raise ValueError("the model's unique rows are not orthonormal")
    V, labels = structure
    if len(V) < model.m_dim:
        return 0
    sel = labels if X is None else labels[_as_index(X, model.n_streams)]
    return int(np.bincount(sel, minlength=len(V)).min())


def max_tolerable_s(model, budget=DEFAULT_SUBSET_BUDGET, exhaustive=False) -> int:
    """Largest ``s`` with ``lambda_min(G_{P minus A}) > |A|`` for every ``|A| <= s``.

    Orthonormal unique rows use the counting shortcut ``(m - 1) // 2`` with
    ``m`` the smallest multiplicity; otherwise (or with ``exhaustive=True``)
    every candidate set is enumerated.
    """
    if not exhaustive and model.is_selector:
        m = min_multiplicity(model)
        if m == 0:
            raise ValueError("model is not globally observable")
        return (m - 1) // 2
    structure = None if exhaustive else orthogonal_structure(model)
    if structure is not None:
        m = min_multiplicity(model, structure=structure)
        if m == 0:
            raise ValueError("model is not globally observable")
        return (m - 1) // 2
    if not is_globally_observable(model):
        raise ValueError("model is not globally observable")
    P = model.n_streams
    s = 0
    while s + 1 < P:
        size = s + 1
        worst = min(lm.min() for _, lm in _removal_minima(model, size, budget))
        if not worst > size + INVERTIBLE_TOL:
            break
        s = size
    return s


def delta_A(model, A, exact_cap=DEFAULT_EXACT_CAP) -> tuple[float, bool]:
    """Worst-case disturbance ``max_{|v|_inf <= 1} ||H_A^T v||_2``.

    The objective is convex, so the maximum sits on a vertex of the cube;
    for ``|A| <= exact_cap`` all sign vectors (up to a global sign) are
    enumerated and ``(value, True)`` returned. Larger sets return the bound
    ``(|A|, False)`` that unit rows guarantee.
    """
    idx = _as_index(A, model.n_streams)
    k = len(idx)
    if k == 0:
        return 0.0, True
    if k > exact_cap:
        return float(k), False
    HA = model.rows(idx)
    best = 0.0
    n_vert = 1 << (k - 1)
    bits = np.arange(k - 1)
    for lo in range(0, n_vert, _CHUNK):
        codes = np.arange(lo, min(n_vert, lo + _CHUNK))
        signs = np.ones((len(codes), k))
        signs[:, 1:] = 1.0 - 2.0 * ((codes[:, None] >> bits) & 1)
        best = max(best, float(np.max(np.linalg.norm(signs @ HA, axis=1))))
    return min(best, float(k)), True


@dataclass(frozen=True)
class ResilienceReport:
    n_streams: int
    n_compromised: int
    lambda_min_clean: float
    delta_A: float
    delta_exact: bool
    margin_kappa: float
    strict_holds: bool
    relaxed_holds: bool

    @property
    def verdict(self) -> str:
        if self.strict_holds:
            return "sufficient condition satisfied"
        return "sufficient condition violated"

    def to_dict(self) -> dict:
        return {**asdict(self), "verdict": self.verdict}


def check_resilience(model, A, exact_cap=DEFAULT_EXACT_CAP) -> ResilienceReport:
    """Evaluate ``lambda_min(G_N) > Delta_A`` and the cruder ``lambda_min(G_N) > |A|``.

    When ``Delta_A`` is only bounded (large ``A``) the strict check uses the
    bound, so it can only err on the conservative side. A failed check means
    the guarantee is lost, not that estimation is impossible.
    """
    idx = _as_index(A, model.n_streams)
    if len(idx) == model.n_streams:
        raise AllStreamsCompromised("every measurement stream is compromised")
    lmin = max(clean_lambda_min(model, complement(model, idx)), 0.0)
    delta, exact = delta_A(model, idx, exact_cap)
    return ResilienceReport(
        n_streams=model.n_streams,
        n_compromised=len(idx),
        lambda_min_clean=lmin,
        delta_A=delta,
        delta_exact=exact,
        margin_kappa=lmin - delta,
        strict_holds=bool(lmin > delta + INVERTIBLE_TOL),
        relaxed_holds=bool(lmin > len(idx) + INVERTIBLE_TOL),
    )
