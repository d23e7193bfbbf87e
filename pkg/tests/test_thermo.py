import json
import math

import numpy as np
import pytest

from coupled_otto import thermo as th
from coupled_otto.errors import ConfigError, InconsistentEnergies, RangeError, UnphysicalTriple
from coupled_otto.oracle import thermal_trace, two_qubit_hamiltonians
from coupled_otto.protocol import TanhSweepConfig, endpoint_frequencies, tanh_sweep
from coupled_otto.spin_system import CouplingConfig, persistence_for


def rotation_triple(c):
    P = ((1 + c) / 2) ** 2
    return P, c * c, P


def random_point(rng):
    w1 = rng.uniform(0.5, 6)
    r = rng.uniform(0.05, 0.95)
    J = rng.uniform(0, r * w1 / 8)
    bath = th.BathConfig.from_ratio(rng.uniform(0.3, 10), rng.uniform(0.05, 0.95))
    return bath, th.CycleInputs(w1, r * w1, J, rotation_triple(rng.uniform(-1, 1)))


def test_partition_function_values():
    assert th.partition_function(1.0, 0.0, 0.0) == 4.0
    assert math.isclose(th.partition_function(1.0, math.log(2), 0.0), 4.5)
    assert math.isclose(th.partition_function(1.0, math.log(2), 0.125), 3.5 + math.e)
    # hbar w1 = 2 sqrt(5), k T = 2, J = 0.2
    assert abs(th.partition_function(0.5, 2 * math.sqrt(5), 0.2) - 12.689) < 1e-3
    assert math.isclose(th.partition_function(1e-12, 1.0, 0.1), 4.0, rel_tol=1e-9)
    with pytest.raises(ConfigError):
        th.partition_function(0.0, 1.0, 0.0)


def test_bath_config():
    b = th.BathConfig.from_ratio(2.0, 0.5)
    assert (b.T_h, b.T_c) == (2.0, 1.0)
    assert (b.beta_h, b.beta_c, b.carnot) == (0.5, 1.0, 0.5)
    for T_h, T_c in ((1.0, 1.0), (1.0, 2.0), (1.0, 0.0), (math.inf, 1.0)):
        with pytest.raises(ConfigError):
            th.BathConfig(T_h, T_c)


def test_cycle_inputs_validation():
    with pytest.raises(ConfigError):
        th.CycleInputs(0.0, 1.0, 0.0)
    with pytest.raises(ConfigError):
        th.CycleInputs(1.0, 1.0, 0.0, (1.0, 1.0))
    with pytest.raises(UnphysicalTriple):
        th.CycleInputs(2.0, 1.0, 0.0, (1.0, 0.0, 1.0))


def test_energy_A_limits():
    w, J = 1.5, 0.05
    hot = th.BathConfig(1e6, 1e5)
    cold = th.BathConfig(1e-2, 1e-3)
    inp = th.CycleInputs(w, 0.5, J)
    # infinite temperature: mean of the four levels
    assert math.isclose(th.energy_A(hot, inp), -2 * J, rel_tol=1e-3)
    # zero temperature: ground level -w (since w > 8J)
    assert math.isclose(th.energy_A(cold, inp), -w, rel_tol=1e-12)


def test_energy_A_matches_dense_thermal_trace():
    # field (1, 0, 2), J = 0.125, k T_h = 2
    J, beta = 0.125, 0.5
    H = two_qubit_hamiltonians(1.0, 0.0, 2.0, J)
    inp = th.CycleInputs(2 * math.sqrt(5), 2.0, J)
    b = th.BathConfig.from_ratio(2.0, 0.5)
    assert math.isclose(th.energy_A(b, inp), thermal_trace(H, beta, H), rel_tol=1e-12)
    Hc = two_qubit_hamiltonians(1.0, 0.0, 0.0, J)
    assert math.isclose(th.energy_C(b, inp), thermal_trace(Hc, 1.0, Hc), rel_tol=1e-12)


def test_adiabatic_energies_scale():
    b = th.BathConfig.from_ratio(3.0, 0.3)
    inp = th.CycleInputs(4.0, 1.5, 0.0)
    assert math.isclose(th.energy_B(b, inp), th.energy_A(b, inp) * 1.5 / 4.0, rel_tol=1e-12)
    assert math.isclose(th.energy_D(b, inp), th.energy_C(b, inp) * 4.0 / 1.5, rel_tol=1e-12)
    # with coupling the singlet energy does not scale
    inpJ = th.CycleInputs(4.0, 1.5, 0.1)
    Z = th.partition_function(b.beta_h, 4.0, 0.1)
    expected = -0.8 * math.exp(0.8 * b.beta_h) / Z - 3.0 * math.sinh(4.0 * b.beta_h) / Z
    assert math.isclose(th.energy_B(b, inpJ), expected, rel_tol=1e-12)


def test_energy_D_is_swapped_energy_B():
    triple = rotation_triple(0.3)
    b, inp = th.BathConfig(3.0, 0.8), th.CycleInputs(4.0, 1.5, 0.07, triple)
    # energy_B only sees T_h, so a bath with T_h = 0.8 plays the cold bath
    swapped = th.CycleInputs(1.5, 4.0, 0.07, triple)
    assert th.energy_D(b, inp) == th.energy_B(th.BathConfig(0.8, 0.5), swapped)
    assert th.energy_C(b, inp) == th.energy_A(th.BathConfig(0.8, 0.5), swapped)


def test_stroke_energies_match_double_sum():
    # sum over initial Gibbs populations and transition probabilities
    proto = tanh_sweep(TanhSweepConfig(1.0, 2.0, 0.0, 0.4))
    w1, w2 = endpoint_frequencies(proto)
    J = 0.1
    _, tm = persistence_for(proto, CouplingConfig(J), steps=20000)
    b = th.BathConfig.from_ratio(2.0, 0.4)
    inp = th.CycleInputs(w1, w2, J, tm.persistence)

    def levels(w):
        return np.array([-8 * J, w, 0.0, -w])

    def after(beta, w_from, w_to):
        pops = np.exp(-beta * levels(w_from))
        pops /= pops.sum()
        return float(pops @ tm.p @ levels(w_to))

    assert math.isclose(th.energy_B(b, inp), after(b.beta_h, w1, w2), rel_tol=1e-10)
    assert math.isclose(th.energy_D(b, inp), after(b.beta_c, w2, w1), rel_tol=1e-10)


def test_heats_are_energy_differences():
    rng = np.random.default_rng(3)
    for _ in range(200):
        b, inp = random_point(rng)
        rep = th.heats(b, inp)
        scale = max(abs(rep.E_A), abs(rep.E_C), 1.0)
        assert math.isclose(rep.Q_h, rep.E_A - rep.E_D, rel_tol=1e-9, abs_tol=1e-12 * scale)
        assert math.isclose(rep.Q_c, rep.E_C - rep.E_B, rel_tol=1e-9, abs_tol=1e-12 * scale)


def test_equal_temperatures():
    terms = th.heat_terms(0.7, 0.7, 2.0, 2.0, 0.1)
    assert all(t == 0 for t in terms)
    qh_leak, qh_ad, _, qc_leak, qc_ad, _ = th.heat_terms(0.7, 0.7, 2.0, 1.0, 0.1)
    # the singlet populations still differ, so the leak does not vanish
    assert qh_leak != 0 and qc_leak == -qh_leak
    # equal temperatures with a frequency change: work is consumed, not produced
    assert qh_ad + qc_ad < 0


def test_otto_efficiency():
    b = th.BathConfig.from_ratio(5.0, 0.1)
    rep = th.heats(b, th.CycleInputs(4.0, 1.5, 0.0))
    assert rep.regime is th.Regime.ENGINE
    assert math.isclose(rep.efficiency, 1 - 1.5 / 4.0, rel_tol=1e-12)


def test_leak_antisymmetry_and_zero_coupling():
    rng = np.random.default_rng(4)
    for _ in range(100):
        b, inp = random_point(rng)
        rep = th.heats(b, inp)
        assert rep.Qc_leak == -rep.Qh_leak
    rep = th.heats(th.BathConfig(2.0, 1.0), th.CycleInputs(3.0, 1.0, 0.0))
    assert rep.Qh_leak == 0 and rep.Qc_leak == 0
    assert not math.copysign(1, rep.Qh_leak) < 0


def test_adiabatic_friction_vanishes():
    rep = th.heats(th.BathConfig(2.0, 1.0), th.CycleInputs(3.0, 1.0, 0.1))
    assert rep.Qh_fric == 0 and rep.Qc_fric == 0


@pytest.mark.parametrize(
    "q, regime",
    [
        ((2.0, -1.0, 1.0), th.Regime.ENGINE),
        ((1.0, -0.5, 0.5), th.Regime.ENGINE),
        ((-0.5, 0.2, -0.3), th.Regime.REFRIGERATOR),
        ((-2.0, 1.0, -1.0), th.Regime.REFRIGERATOR),
        ((1.0, -2.0, -1.0), th.Regime.ACCELERATOR),
        ((-1.0, -2.0, -3.0), th.Regime.HEATER),
        ((1.0, -1.0, 0.0), th.Regime.BOUNDARY),
        ((0.0, -1.0, -1.0), th.Regime.BOUNDARY),
    ],
)
def test_classify_regime(q, regime):
    assert th.classify_regime(*q) is regime


def test_classify_regime_rejects_inconsistent():
    with pytest.raises(InconsistentEnergies):
        th.classify_regime(1.0, -0.5, 0.6)
    # heat pumped uphill while work is produced violates the second law
    with pytest.raises(InconsistentEnergies):
        th.classify_regime(1.0, 2.0, 3.0)
    with pytest.raises(InconsistentEnergies):
        th.classify_regime(-2.0, 1.0, -1.0 + 1e-6)


def test_zero_planes_match_heats():
    rng = np.random.default_rng(5)
    b = th.BathConfig.from_ratio(4.7, 0.375)
    w1, w2, J = 2 * math.sqrt(5), 2.0, 0.125
    planes = {q: th.zero_plane(q, b, w1, w2, J) for q in ("Q_h", "Q_c", "W")}
    for _ in range(100):
        triple = rotation_triple(rng.uniform(-1, 1))
        rep = th.heats(b, th.CycleInputs(w1, w2, J, triple))
        for q, plane in planes.items():
            scale = max(abs(rep.Q_h), abs(rep.Q_c), 1.0)
            assert abs(plane(*triple) - getattr(rep, q)) <= 1e-12 * scale
    assert planes["W"].row()[0] == "W"
    assert np.allclose(planes["W"].row()[1:], np.add(planes["Q_h"].row()[1:], planes["Q_c"].row()[1:]))
    with pytest.raises(ConfigError):
        th.zero_plane("E", b, w1, w2, J)


def test_fig4_adiabatic_point_is_engine():
    b = th.BathConfig.from_ratio(4.7, 0.375)
    rep = th.heats(b, th.CycleInputs(2 * math.sqrt(5), 2.0, 0.125))
    assert rep.regime is th.Regime.ENGINE
    assert 0 < rep.efficiency < b.carnot


def test_friction_reduces_work():
    rng = np.random.default_rng(6)
    for _ in range(2000):
        b, inp = random_point(rng)
        real = th.heats(b, inp)
        ideal = th.heats(b, th.CycleInputs(inp.omega1, inp.omega2, inp.J))
        assert real.W <= ideal.W + 1e-12


def test_friction_monotone_in_each_probability():
    # interior triple with all off-diagonals inside (0, 1)
    base = np.array([0.5, 0.3, 0.4])
    b = th.BathConfig.from_ratio(4.0, 0.3)
    h = 1e-6

    def q(triple):
        rep = th.heats(b, th.CycleInputs(4.0, 1.5, 0.05, tuple(triple)))
        return np.array([rep.Qh_fric, rep.Qc_fric])

    q0 = q(base)
    for k, sign in ((0, 1), (1, -1), (2, 1)):
        step = base.copy()
        step[k] += h
        assert np.all(sign * (q(step) - q0) > 0)


def test_plane_ordering():
    rng = np.random.default_rng(8)
    for _ in range(500):
        b, inp = random_point(rng)
        rep = th.heats(b, inp)
        assert np.sign(rep.W) in (np.sign(rep.Q_h), np.sign(rep.Q_c))


def test_carnot_bound():
    rng = np.random.default_rng(7)
    engines = 0
    for _ in range(5000):
        b, inp = random_point(rng)
        rep = th.heats(b, inp)
        if rep.regime is th.Regime.ENGINE:
            engines += 1
            assert rep.efficiency < b.carnot
        else:
            assert rep.efficiency is None
    assert engines > 50


def test_low_temperature_range_error():
    with pytest.raises(RangeError):
        th.heats(th.BathConfig(0.01, 0.001), th.CycleInputs(4.0, 1.0, 0.0))


def test_report_serializes():
    rep = th.heats(th.BathConfig(2.0, 1.0), th.CycleInputs(3.0, 1.0, 0.05, rotation_triple(0.8)))
    d = json.loads(json.dumps(rep.to_dict()))
    assert d["regime"] == rep.regime.value
    assert len(d) == 15 and d["W"] == rep.W
    assert str(th.Regime.HEATER) == "heater"
