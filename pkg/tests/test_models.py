import json

import mpmath

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relaxpt import oracle
from relaxpt import precision as prec
from relaxpt.models import (ModelSpec, build_anharmonic, build_heisenberg, build_herbst_simon,
                            build_zeeman_pencil, ipr, parse_number, zeeman_energy, zeeman_self_test)
from relaxpt.models.heisenberg import random_fields, sector_states
from relaxpt.models.zeeman import sturmian_states


def _is_symmetric(H):
    D = H.to_dense()
    return np.array_equal(D, D.T)


# oscillators

def test_quartic_ground_diagonal():
    assert build_anharmonic(2, 1.0, 10).diagonal()[0] == pytest.approx(1.75, abs=1e-15)


def test_free_oscillator():
    for H in (build_anharmonic(3, 0.0, 12), build_herbst_simon(0.0, 12)):
        assert np.array_equal(H.to_dense(), np.diag(2.0 * np.arange(12) + 1))


@pytest.mark.parametrize("s", [2, 3, 4])
def test_anharmonic_structure(s):
    H = build_anharmonic(s, 0.7, 40)
    assert _is_symmetric(H)
    assert H.bandwidth() == 2 * s


def test_herbst_simon_structure():
    H = build_herbst_simon(0.5, 30)
    assert _is_symmetric(H) and H.bandwidth() == 4


def test_oversized_intermediate_keeps_top_block_exact():
    small = build_anharmonic(3, 1.0, 20).to_dense()
    big = build_anharmonic(3, 1.0, 60).to_dense()[:20, :20]
    assert np.allclose(small, big, rtol=1e-14, atol=0)


def test_oscillator_errors():
    with pytest.raises(ValueError):
        build_anharmonic(5, 1.0, 40)
    with pytest.raises(ValueError):
        build_anharmonic(2, 1.0, 5)
    with pytest.raises(ValueError):
        build_herbst_simon(0.3, 7)


def test_extended_build_matches_double():
    d = build_herbst_simon(parse_number("sqrt0.3"), 30)
    x = build_herbst_simon(parse_number("sqrt0.3", prec.EXTENDED), 30, prec.EXTENDED)
    assert x.is_extended
    assert np.allclose(x.to_double().to_dense(), d.to_dense(), rtol=1e-15, atol=1e-15)


@pytest.mark.parametrize("s,g,N", [(2, 1.0, 200), (2, 8.0, 400), (2, 100.0, 1000), (3, 100.0, 1000),
                                   (4, 100.0, 1000)])
def test_truncation_stability(s, g, N):
    e1 = oracle.ground_energy(build_anharmonic(s, g, N))
    e2 = oracle.ground_energy(build_anharmonic(s, g, 2 * N))
    assert abs(e1 - e2) < 1e-10


def test_herbst_simon_truncation_stability():
    g = parse_number("sqrt0.3")
    assert abs(oracle.ground_energy(build_herbst_simon(g, 400))
               - oracle.ground_energy(build_herbst_simon(g, 800))) < 1e-10


def test_quartic_truncation_n300():
    assert abs(oracle.ground_energy(build_anharmonic(2, 1.0, 200))
               - oracle.ground_energy(build_anharmonic(2, 1.0, 300))) < 1e-10


# hydrogen in a field

def test_sturmian_states_order():
    assert sturmian_states(6) == [(1, 0), (2, 0), (3, 0), (3, 2), (4, 0), (4, 2)]


def test_zeeman_structure():
    P = build_zeeman_pencil(1.0, 60)
    assert _is_symmetric(P.A) and _is_symmetric(P.S)
    assert np.all(np.linalg.eigvalsh(P.S.to_dense()) > 0)


def test_zeeman_zero_field():
    from relaxpt.core import SolverConfig
    from relaxpt.pencil import relax_iterate_generalized

    P = build_zeeman_pencil(0.0, 40)
    state, status = relax_iterate_generalized(P, SolverConfig(tol=1e-12), reference=0.0)
    assert state.k <= 2
    assert zeeman_energy(state.energy) == pytest.approx(-0.5, abs=1e-14)


def test_zeeman_validation_gate():
    e, ok = zeeman_self_test()
    assert ok
    assert e == pytest.approx(-0.3312, abs=1e-4)


def test_zeeman_errors():
    with pytest.raises(ValueError):
        build_zeeman_pencil(1.0, 5)


# Heisenberg

def test_two_spin_singlet():
    H, _ = build_heisenberg(2, 0.0, periodic=False)
    assert oracle.ground_energy(H) == pytest.approx(-0.75, abs=1e-14)


def test_three_spin_ring_matches_dense():
    H, _ = build_heisenberg(3, 0.0)
    assert H.dim == 8
    w = oracle.dense_eig(H).eigenvalues
    # S1.S2 + S2.S3 + S3.S1 = (S_tot^2 - 9/4) / 2
    assert np.allclose(np.sort(w), [-0.75] * 4 + [0.75] * 4, atol=1e-14)


def test_heisenberg_errors():
    with pytest.raises(ValueError):
        build_heisenberg(2, 1.0, periodic=True)
    with pytest.raises(ValueError):
        build_heisenberg(5, 1.0, sz_sector=True)


@settings(max_examples=10, deadline=None)
@given(L=st.integers(3, 8), h=st.floats(0, 10), seed=st.integers(0, 2**63 - 1), periodic=st.booleans())
def test_heisenberg_properties(L, h, seed, periodic):
    H, f = build_heisenberg(L, h, seed, periodic)
    H2, f2 = build_heisenberg(L, h, seed, periodic)
    assert np.array_equal(f, f2)
    assert np.array_equal(H.to_scipy().toarray(), H2.to_scipy().toarray())
    assert _is_symmetric(H)
    assert H.row_nnz().max() <= L + 1
    assert np.all(np.abs(f) <= h)


def test_fields_are_seeded():
    assert not np.array_equal(random_fields(8, 1.0, 1), random_fields(8, 1.0, 2))


def test_sz_sector_contains_ground_state_energy_block():
    H, _ = build_heisenberg(8, 0.0, sz_sector=True)
    assert H.dim == len(sector_states(8, 4)) == 70
    full, _ = build_heisenberg(8, 0.0)
    assert oracle.ground_energy(H) == pytest.approx(oracle.ground_energy(full), abs=1e-12)


def test_ipr():
    assert ipr(np.eye(5)[2]) == 1.0
    assert ipr(np.ones(8)) == pytest.approx(1 / 8)
    assert ipr(3.0 * np.ones(8)) == pytest.approx(1 / 8)
    with pytest.raises(ValueError):
        ipr(np.zeros(3))


def test_ipr_regimes():
    hi, _ = build_heisenberg(12, 50.0, seed=7)
    lo, _ = build_heisenberg(12, 1.0, seed=7)
    assert ipr(oracle.ground_state(hi)[1]) > 0.9
    assert ipr(oracle.ground_state(lo)[1]) < 0.1


# specs

@pytest.mark.parametrize("spec", [
    ModelSpec("anharmonic", {"s": 3, "g": 100, "N": 1000}),
    ModelSpec("herbst-simon", {"g": "sqrt0.3"}),
    ModelSpec("zeeman", {"B": 10}),
    ModelSpec("heisenberg", {"L": 12, "h": 5, "seed": 2**63 - 5, "periodic": False}),
])
def test_spec_round_trip(spec):
    assert ModelSpec.from_json(spec.to_json()) == spec
    assert json.loads(spec.to_json())["model"] == spec.model


def test_spec_errors():
    with pytest.raises(ValueError):
        ModelSpec("nonsense")
    with pytest.raises(ValueError):
        ModelSpec("anharmonic", {"g": 1, "q": 2})
    with pytest.raises(ValueError):
        ModelSpec("zeeman", {})


def test_parse_number():
    assert parse_number("sqrt0.3") == pytest.approx(0.3 ** 0.5, rel=1e-16)
    assert parse_number("1/4") == 0.25
    assert parse_number("1e-3") == 1e-3
    x = parse_number("sqrt0.3", prec.EXTENDED)
    with prec.workdps():
        assert abs(x * x - mpmath.mpf("0.3")) < mpmath.mpf("1e-38")
    with pytest.raises(ValueError):
        parse_number("root3")


def test_default_basis_size():
    assert ModelSpec("anharmonic", {"g": 100}).build().dim == 1000
    assert ModelSpec("anharmonic", {"g": 1}).build().dim == 200
