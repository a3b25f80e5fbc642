import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sagesim.errors import AllStreamsCompromised, TooLarge
from sagesim.measurement import MeasurementModel
from sagesim.resilience import (
    check_resilience,
    complement,
    delta_A,
    grammian,
    is_globally_observable,
    is_sparse_observable,
    lambda_min,
    max_tolerable_s,
    min_multiplicity,
    orthogonal_structure,
)


def rows_model(rows):
    rows = np.asarray(rows, dtype=float)
    return MeasurementModel(rows.shape[1], [r[None] for r in rows])


def copies(counts):
    """Model with ``counts[m]`` copies of canonical vector ``e_m``."""
    M = len(counts)
    return rows_model(np.vstack([np.tile(np.eye(M)[m], (c, 1)) for m, c in enumerate(counts)]))


@st.composite
def orthogonal_models(draw, max_P=12, max_M=4):
    M = draw(st.integers(1, max_M))
    P = draw(st.integers(M, max_P))
    labels = draw(st.lists(st.integers(0, M - 1), min_size=P, max_size=P))
    seed = draw(st.integers(0, 2**31))
    Q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((M, M)))
    signs = draw(st.lists(st.sampled_from([-1.0, 1.0]), min_size=P, max_size=P))
    # distinct rows must be orthonormal, so a direction keeps one sign
    rows = Q[labels] * np.array([signs[labels[p]] for p in range(P)])[:, None]
    return rows_model(rows)


def brute_sparse_observable(model, s):
    H = model.H
    # eigenvalues of the Grammian are squared singular values of H
    tol = np.sqrt(1e-9 * max(1.0, np.linalg.norm(H, 2) ** 2))
    for X in itertools.combinations(range(model.n_streams), s):
        keep = np.setdiff1d(np.arange(model.n_streams), X)
        if np.linalg.matrix_rank(H[keep], tol=tol) < model.m_dim:
            return False
    return True


def brute_delta(model, A):
    HA = model.H[list(A)]
    return max(np.linalg.norm(np.array(v) @ HA) for v in itertools.product((-1.0, 1.0), repeat=len(A)))


# ---------------------------------------------------------------- Grammian

def test_grammian_examples():
    m = rows_model([[1, 0], [1, 0], [0, 1]])
    assert np.array_equal(grammian(m, []), np.zeros((2, 2)))
    assert np.allclose(grammian(m), np.diag([2.0, 1.0]))
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((4, 4)))
    assert np.allclose(grammian(rows_model(Q)), np.eye(4), atol=1e-12)


@given(st.integers(1, 10), st.integers(1, 4), st.integers(0, 10**6))
@settings(max_examples=50)
def test_grammian_additive_over_disjoint_sets(P, M, seed):
    rng = np.random.default_rng(seed)
    m = rows_model(rng.standard_normal((P, M)) + 1e-3)
    perm = rng.permutation(P)
    X, Y = perm[: P // 2], perm[P // 2:]
    assert np.allclose(grammian(m, np.concatenate([X, Y])), grammian(m, X) + grammian(m, Y), atol=1e-12)
    assert lambda_min(grammian(m)) > -1e-12


# ---------------------------------------------------------------- observability

def test_global_observability_examples():
    assert is_globally_observable(rows_model([[1, 0], [0, 1]]))
    assert not is_globally_observable(rows_model([[1, 0], [1, 0]]))
    rng = np.random.default_rng(1)
    for M in (2, 3, 5):
        rows = rng.standard_normal((2 * M, M))
        assert is_globally_observable(rows_model(rows)) == (np.linalg.matrix_rank(rows) == M)


def test_sparse_observability_examples():
    m = copies([3, 3])
    assert is_sparse_observable(m, 2) and not is_sparse_observable(m, 3)
    assert is_sparse_observable(rows_model([[1, 0], [0, 1]]), 0)
    assert not is_sparse_observable(rows_model([[1, 0], [0, 1]]), 1)
    with pytest.raises(ValueError):
        is_sparse_observable(m, 6)


def test_sparse_observability_budget():
    with pytest.raises(TooLarge):
        is_sparse_observable(copies([20, 20]), 10, budget=1000)


@given(st.integers(2, 9), st.integers(1, 3), st.integers(0, 10**6), st.data())
@settings(max_examples=60, deadline=None)
def test_sparse_observability_matches_brute_force(P, M, seed, data):
    rng = np.random.default_rng(seed)
    rows = rng.standard_normal((P, M))
    # duplicate some rows so that removal matters
    rows[rng.random(P) < 0.4] = rows[0]
    m = rows_model(rows)
    s = data.draw(st.integers(0, P - 1))
    assert is_sparse_observable(m, s) == brute_sparse_observable(m, s)


# ---------------------------------------------------------------- tolerable s

def test_max_tolerable_s_scalar_majority():
    assert max_tolerable_s(copies([11])) == 5
    assert max_tolerable_s(copies([11]), exhaustive=True) == 5


def test_max_tolerable_s_five_copies():
    m = copies([5, 5])
    assert max_tolerable_s(m) == 2
    assert max_tolerable_s(m, exhaustive=True) == 2


def test_max_tolerable_s_window_multiplicity_five():
    assert max_tolerable_s(copies([5, 7, 6, 9])) == 2


def test_max_tolerable_s_unobservable():
    with pytest.raises(ValueError):
        max_tolerable_s(rows_model([[1, 0], [1, 0]]))


def test_desk_field_tolerates_one_stream():
    from sagesim.config import config_from_dict
    from sagesim.scenarios import field_doc

    m = config_from_dict(field_doc()).model
    assert min_multiplicity(m) == 4 and max_tolerable_s(m) == 1


@given(orthogonal_models())
@settings(max_examples=100, deadline=None)
def test_orthogonal_shortcut_matches_exhaustive(m):
    if not is_globally_observable(m):
        return
    assert max_tolerable_s(m) == max_tolerable_s(m, exhaustive=True)


@given(orthogonal_models(), st.data())
@settings(max_examples=100, deadline=None)
def test_multiplicity_equals_spectral_lambda_min(m, data):
    structure = orthogonal_structure(m)
    assert structure is not None
    A = data.draw(st.lists(st.integers(0, m.n_streams - 1), unique=True, max_size=m.n_streams - 1))
    clean = complement(m, A)
    assert abs(lambda_min(grammian(m, clean)) - min_multiplicity(m, clean)) < 1e-9


@given(orthogonal_models())
@settings(max_examples=100, deadline=None)
def test_tolerable_s_implies_2s_sparse_observable(m):
    if not is_globally_observable(m):
        return
    s = max_tolerable_s(m)
    if 2 * s < m.n_streams:
        assert is_sparse_observable(m, 2 * s)


# ---------------------------------------------------------------- Delta_A

def test_delta_examples():
    m = rows_model([[1, 0], [1, 0], [0, 1], [0.6, 0.8]])
    assert delta_A(m, [3]) == (1.0, True)
    assert delta_A(m, [0, 1])[0] == pytest.approx(2.0)
    assert delta_A(m, [0, 2])[0] == pytest.approx(np.sqrt(2))
    assert delta_A(m, []) == (0.0, True)


def test_delta_bound_beyond_cap():
    m = copies([25, 25])
    assert delta_A(m, range(21)) == (21.0, False)
    assert delta_A(m, range(21), exact_cap=25)[1]


@given(st.integers(1, 6), st.integers(1, 4), st.integers(0, 10**6))
@settings(max_examples=60, deadline=None)
def test_delta_matches_dense_enumeration_and_bounds(k, M, seed):
    rng = np.random.default_rng(seed)
    m = rows_model(rng.standard_normal((k + 2, M)))
    A = list(range(k))
    val, exact = delta_A(m, A)
    assert exact
    assert abs(val - brute_delta(m, A)) < 1e-9
    assert val <= k + 1e-9
    V = rng.uniform(-1, 1, size=(2000, k))
    assert val >= np.linalg.norm(V @ m.H[A], axis=1).max() - 1e-12


# ---------------------------------------------------------------- reports

def test_report_no_attack():
    m = copies([2, 3])
    r = check_resilience(m, [])
    assert r.strict_holds and r.margin_kappa == pytest.approx(2.0) and r.delta_A == 0.0


def test_report_scalar_conditions():
    m = copies([5])
    ok = check_resilience(m, [0, 1])
    assert ok.lambda_min_clean == pytest.approx(3) and ok.delta_A == pytest.approx(2) and ok.strict_holds
    bad = check_resilience(m, [0, 1, 2])
    assert not bad.strict_holds and not bad.relaxed_holds
    assert bad.verdict == "sufficient condition violated"
    with pytest.raises(AllStreamsCompromised):
        check_resilience(m, range(5))


def test_report_dict_is_json_ready():
    import json

    d = check_resilience(copies([3, 3]), [0]).to_dict()
    assert json.loads(json.dumps(d))["verdict"] == "sufficient condition satisfied"


@given(st.integers(2, 10), st.integers(1, 3), st.integers(0, 10**6), st.data())
@settings(max_examples=80, deadline=None)
def test_report_invariants(P, M, seed, data):
    rng = np.random.default_rng(seed)
    m = rows_model(rng.standard_normal((P, M)))
    A = data.draw(st.lists(st.integers(0, P - 1), unique=True, max_size=P - 1))
    r = check_resilience(m, A)
    assert r.delta_A <= len(A) + 1e-9
    assert r.margin_kappa == pytest.approx(r.lambda_min_clean - r.delta_A)
    if r.relaxed_holds:
        assert r.strict_holds


# ---------------------------------------------------------------- selector fast path

@given(st.integers(1, 4), st.lists(st.integers(0, 3), min_size=1, max_size=12), st.data())
@settings(max_examples=60, deadline=None)
def test_selector_shortcuts_match_dense(M, cols, data):
    cols = [c % M for c in cols]
    sel = MeasurementModel.from_selectors(M, [cols])
    H = np.eye(M)[cols]
    A = data.draw(st.lists(st.integers(0, len(cols) - 1), unique=True, max_size=len(cols) - 1))
    clean = complement(sel, A)
    lmin = np.linalg.eigvalsh(H[clean].T @ H[clean])[0]
    assert min_multiplicity(sel, clean) == round(lmin)
    assert is_globally_observable(sel, clean) == bool(lmin > 1e-9)
    if is_globally_observable(sel):
        assert max_tolerable_s(sel) == max_tolerable_s(sel, exhaustive=True)
    r = check_resilience(sel, A)
    assert r.lambda_min_clean == pytest.approx(max(lmin, 0.0), abs=1e-9)
    assert r.delta_A == pytest.approx(brute_delta(sel, A) if A else 0.0, abs=1e-9)

def test_large_selector_model_never_densifies():
    M, P = 10_000, 200_000
    cols = np.random.default_rng(0).integers(0, M, size=P)
    m = MeasurementModel.from_selectors(M, np.array_split(cols, 100))
    counts = np.bincount(cols, minlength=M)
    assert min_multiplicity(m) == counts.min()
    r = check_resilience(m, np.arange(30))
    assert not r.delta_exact and r.delta_A == 30.0
    assert "H" not in m.__dict__
