import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magtrans.effective import (
    CouplingSet,
    build_rwa_hamiltonian,
    couplings_from_config,
    eliminate,
    transduction_rate,
    validity,
)
from magtrans.errors import DomainError, SingularError
from magtrans.levels import Detunings
from magtrans.oracle import solve_elimination_numeric


def random_case(rng, complex_h=True):
    z = lambda: rng.normal() + 1j * rng.normal()
    h_perp = z() if complex_h else rng.normal()
    c = CouplingSet(z(), z(), z(), h_perp, z(), n_er=rng.uniform(1, 10), n_fe=rng.uniform(1, 10))
    d = Detunings(*(rng.uniform(2, 20, size=3) * rng.choice([-1, 1], size=3)))
    return c, d


def zero_couplings():
    return CouplingSet(0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0)


def test_aggregated_couplings():
    c = CouplingSet(1, 1, 0.058, -1.41e13, 1, 1e15, 6e17)
    assert c.g_tilde == pytest.approx(0.058 * math.sqrt(6e17))
    assert c.h == pytest.approx(-1.41e13 / math.sqrt(6e17))


def test_h_perp_needs_magnet_spins():
    with pytest.raises(DomainError):
        CouplingSet(1, 1, 0, 1.0, 1, 1, 0)
    assert CouplingSet(1, 1, 0, 0.0, 1, 1, 0).h == 0.0


def test_couplings_from_table_config(case2):
    c = couplings_from_config(case2)
    assert c.h_perp == pytest.approx(-1.410150e13, rel=1e-12)
    assert c.h == pytest.approx(-18205.5, rel=1e-4)
    assert c.g_tilde == pytest.approx(4.4927e7, rel=1e-4)


def test_couplings_from_config_overrides(case1, case2):
    c = couplings_from_config(case2, j_perp=1e9, rabi_pump=2e6)
    assert c.h_perp == pytest.approx(-1e9 * 5 * 7.9 / 2)
    assert c.rabi_pump == 2e6
    assert couplings_from_config(case1).magnon_free
    with pytest.raises(DomainError):
        couplings_from_config(case1, j_perp=1e9)


def test_diagonal_matrix_when_uncoupled():
    d = Detunings(3.0, 2.0, 5.0)
    h = build_rwa_hamiltonian(zero_couplings(), d).entries
    assert np.array_equal(h, np.diag([0, 2.0, 3.0, 5.0, 0]).astype(complex))


def test_matrix_layout_and_table_entry(case2):
    c = couplings_from_config(case2)
    h = build_rwa_hamiltonian(c, Detunings(1e9, 1e9, 10e9)).entries
    assert h[0, 1] == pytest.approx(4.49e7, rel=1e-3)
    assert h[0, 2] == 1.0 and h[2, 3] == c.rabi_pump and h[3, 4] == c.g_a
    for i, j in [(0, 3), (0, 4), (1, 3), (1, 4), (2, 4)]:
        assert h[i, j] == 0 and h[j, i] == 0


def test_complex_h_phase_and_hermiticity():
    c = CouplingSet(1, 2, 3, 1 - 2j, 0.5, 1, 1)
    m = build_rwa_hamiltonian(c, Detunings(3, 4, 5))
    assert m.entries[1, 2] == 1 - 2j and m.entries[2, 1] == 1 + 2j
    assert m.is_hermitian()


def test_hermitian_random(rng):
    for _ in range(200):
        c, d = random_case(rng)
        h = build_rwa_hamiltonian(c, d).entries
        assert np.max(np.abs(h - h.conj().T)) < 1e-12 * np.max(np.abs(h))


def test_atom_only_variant():
    c = CouplingSet(5, 2, 3, 4, 1, 1, 1)
    h = build_rwa_hamiltonian(c, Detunings(7, 8, 9), cavity_modes=False).entries
    assert h.shape == (4, 4)
    assert h[0, 3] == 5 and h[0, 1] == 3 and h[0, 2] == 2 and h[1, 2] == 4 and h[2, 3] == 1
    assert np.allclose(h, h.conj().T)


def test_magnet_free_matrix_decouples_magnon():
    c = CouplingSet(1, 1, 0, 0, 1, 1, 0)
    h = build_rwa_hamiltonian(c, Detunings(2, math.inf, 3)).entries
    assert np.all(np.isfinite(h)) and np.all(h[1] == 0)
    with pytest.raises(DomainError):
        build_rwa_hamiltonian(CouplingSet(1, 1, 1, 0, 1, 1, 1), Detunings(2, math.inf, 3))


def test_elimination_matches_linear_solve(rng):
    worst = 0.0
    for _ in range(1000):
        c, d = random_case(rng)
        closed = eliminate(c, d).as_array()
        numeric = solve_elimination_numeric(build_rwa_hamiltonian(c, d)).as_array()
        worst = max(worst, np.max(np.abs(closed - numeric)) / np.max(np.abs(numeric)))
    assert worst < 1e-10


def test_elimination_denominator_is_block_determinant(rng):
    c, d = random_case(rng)
    block = build_rwa_hamiltonian(c, d).entries[1:4, 1:4]
    assert eliminate(c, d).denominator == pytest.approx(np.linalg.det(block).real, rel=1e-12)


def test_elimination_pump_off():
    c = CouplingSet(1, 2, 3, 4, 0.0, 1, 1)
    coef = eliminate(c, Detunings(5, 6, 7))
    assert coef.c3[0] == 0


def test_elimination_lambda_reduction():
    g_a, g_b, om, dl, dc = 0.7 + 0.1j, 0.3 - 0.2j, 0.4 + 0.3j, 5.0, 9.0
    c = CouplingSet(g_a, g_b, 0.0, 0.0, om, 1, 1)
    d = Detunings(dl, 11.0, dc)
    coef = eliminate(c, d)
    assert coef.c1 == (0, 0)
    # Two-level inverse of [[delta, Omega], [Omega*, Delta]].
    den = dl * dc - abs(om) ** 2
    assert coef.c2[0] == pytest.approx(-dc * np.conj(g_b) / den)
    assert coef.c2[1] == pytest.approx(om * g_a / den)
    assert coef.c3[0] == pytest.approx(np.conj(om) * np.conj(g_b) / den)
    assert coef.c3[1] == pytest.approx(-dl * g_a / den)
    inf_branch = eliminate(c, Detunings(dl, math.inf, dc))
    assert np.allclose(inf_branch.as_array(), coef.as_array(), rtol=1e-14)


def test_elimination_singular():
    c = CouplingSet(1, 1, 1, 0, 1.0, 1, 1)
    # Delta*delta*delta_tilde - delta_tilde*|Omega|^2 = 0 with delta*Delta = 1.
    with pytest.raises(SingularError) as info:
        eliminate(c, Detunings(1.0, 2.0, 1.0))
    assert info.value.denominator == 0


def test_no_magnet_example_value():
    c = CouplingSet(52.0, 1.0, 0.0, 0.0, 1.0, 1e15, 0.0)
    m = transduction_rate(c, Detunings(1e9, math.inf, 10e9))
    assert m.s_over_omega == pytest.approx(5.2e-3, rel=1e-12)


def test_no_magnet_reduction_random(rng):
    for _ in range(1000):
        c, d = random_case(rng)
        c = CouplingSet(c.g_a, c.g_b, 0.0, 0.0, c.rabi_pump, c.n_er, c.n_fe)
        s = transduction_rate(c, d).s_rate
        ref = c.n_er * np.conj(c.g_b) * np.conj(c.g_a) * np.conj(c.rabi_pump) / (d.delta_cap * d.delta)
        assert abs(s - ref) <= 1e-12 * abs(ref)


def test_rate_from_numeric_elimination(rng):
    """The same rate assembled from the numerically eliminated amplitudes."""
    for _ in range(200):
        c, d = random_case(rng)
        m = transduction_rate(c, d)
        coef = solve_elimination_numeric(build_rwa_hamiltonian(c, d))
        den = coef.denominator
        pair = d.delta * d.delta_tilde - abs(c.h) ** 2
        scale = den / (d.delta_cap * pair)
        coupling_04 = c.g_tilde * coef.c1[1] + c.g_b * coef.c2[1]
        assert m.s_rate == pytest.approx(c.n_er * np.conj(coupling_04) * scale, rel=1e-9)
        # Both pulls appear with the opposite sign in the eliminated equations.
        self_b = c.g_tilde * coef.c1[0] + c.g_b * coef.c2[0]
        self_a = np.conj(c.g_a) * coef.c3[1]
        assert -self_b.real * scale == pytest.approx(m.lambda_b, rel=1e-9)
        assert -self_a.real * scale == pytest.approx(m.lambda_a, rel=1e-9)


def test_interference_null():
    # delta_tilde * g_b = h * g_tilde with n_fe = 1
    c = CouplingSet(3.0, 2.0, 5.0, 4.0, 1.0, 1, 1)
    m = transduction_rate(c, Detunings(7.0, 10.0, 11.0))
    assert m.s_rate == 0


def test_pump_off_gives_zero_rate():
    c = CouplingSet(3.0, 2.0, 5.0, 4.0, 0.0, 1, 1)
    assert transduction_rate(c, Detunings(7.0, 12.0, 11.0)).s_rate == 0


def test_conjugation_consistency(rng):
    for _ in range(100):
        c, d = random_case(rng)
        m, mc = transduction_rate(c, d), transduction_rate(c.conjugate(), d)
        assert mc.s_rate == pytest.approx(np.conj(m.s_rate), rel=1e-13)
        assert mc.lambda_b == pytest.approx(m.lambda_b, rel=1e-13)


@pytest.mark.parametrize("field", ["n_er", "g_a", "rabi_pump"])
def test_linear_scaling(rng, field):
    c, d = random_case(rng)
    base = transduction_rate(c, d).s_rate
    doubled = CouplingSet(**{**c.__dict__, field: 2 * getattr(c, field)})
    assert transduction_rate(doubled, d).s_rate == pytest.approx(2 * base, rel=1e-12)


def test_rate_singular_cases():
    c = CouplingSet(1, 1, 1, 1, 1, 1, 1)
    with pytest.raises(SingularError):
        transduction_rate(c, Detunings(1.0, 1.0, 0.0))
    with pytest.raises(SingularError):
        transduction_rate(c, Detunings(1.0, 1.0, 2.0))
    bare = CouplingSet(1, 1, 0, 0, 1, 1, 0)
    with pytest.raises(SingularError):
        transduction_rate(bare, Detunings(0.0, math.inf, 2.0))


def test_lambda_values():
    c = CouplingSet(2.0, 1.0, 0.0, 0.0, 1.0, 1, 0)
    m = transduction_rate(c, Detunings(4.0, math.inf, 8.0))
    assert m.lambda_a == 0.5
    assert m.lambda_b == 0.25


def test_validity_ratio_example(case2):
    c = couplings_from_config(case2)
    r = validity(c, Detunings(1e9, 1e9, 10e9), case2)
    assert r.ratios["delta/rabi_pump"] == pytest.approx(86.96, rel=1e-3)
    assert r.ok


def test_validity_linewidth_mask(case2):
    c = couplings_from_config(case2)
    r = validity(c, Detunings(10e6, 1e9, 10e9), case2)
    assert r.mask["delta"] and not r.ok
    r = validity(c, Detunings(1e9, 6e6, 10e9), case2)
    assert r.mask["delta_tilde"]
    assert not validity(c, Detunings(10e6, 6e6, 10e9)).mask["delta"]


def test_validity_zero_couplings(case2):
    r = validity(zero_couplings(), Detunings(1e9, 1e9, 1e9), case2)
    assert all(math.isinf(v) for v in r.ratios.values())
    assert r.ok
    assert not validity(zero_couplings(), Detunings(1e6, 1e9, 1e9), case2).ok


def test_validity_threshold_and_failures(case2):
    c = couplings_from_config(case2)
    with pytest.raises(DomainError):
        validity(c, Detunings(1e9, 1e9, 1e9), case2, threshold=1.0)
    r = validity(c, Detunings(1e9, 1e8, 10e9), case2)
    assert "delta_tilde/g_tilde" in r.failing()


def test_validity_without_magnet(case1):
    c = couplings_from_config(case1)
    r = validity(c, Detunings(1e9, math.inf, 10e9), case1)
    assert r.ratios["pump_shift"] == pytest.approx(10e9 * 1e9 / 11.5e6**2)
    assert math.isinf(r.ratios["delta_tilde/h"])


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 10), st.floats(-10, 10),
    st.floats(20, 100), st.floats(20, 100), st.floats(200, 1000),
)
def test_rate_finite_property(g_a, g_b, g_t, h, dl, dt, dc):
    m = transduction_rate(CouplingSet(g_a, g_b, g_t, h, 1.0, 1, 1), Detunings(dl, dt, dc))
    assert np.isfinite(m.s_rate) and np.isfinite(m.lambda_b)
