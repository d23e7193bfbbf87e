import csv
import io
import json
import math

import numpy as np
import pytest

from coupled_otto import explorer as ex
from coupled_otto.errors import ConfigError, NoEngineRegion
from coupled_otto.protocol import TanhSweepConfig
from coupled_otto.spin_system import CouplingConfig
from coupled_otto.thermo import BathConfig, CycleInputs, Regime, heats


def small_spec(**kw):
    args = dict(
        hbar_omega1=4.0,
        tc_over_th=0.1,
        axes=[ex.Axis("J", 0.0, 0.5, 11), ex.Axis("tau", 0.5, 10.0, 3, "log")],
        fixed={"omega_ratio": 0.375, "kT_h": 5.54},
        max_step_angle=5e-3,
    )
    args.update(kw)
    return ex.SweepSpec(**args)


def test_axis_validation():
    assert np.allclose(ex.Axis("J", 0, 1, 3).values(), [0, 0.5, 1])
    assert np.allclose(ex.Axis("tau", 1, 100, 3, "log").values(), [1, 10, 100])
    assert ex.Axis("kT_h", 2.0, 2.0, 1).values().tolist() == [2.0]
    for bad in (
        dict(name="B", lo=0, hi=1, n=2),
        dict(name="J", lo=1, hi=0, n=2),
        dict(name="J", lo=0, hi=1, n=0),
        dict(name="J", lo=0, hi=1, n=2.5),
        dict(name="J", lo=1, hi=1, n=3),
        dict(name="tau", lo=0, hi=1, n=3, scale="log"),
        dict(name="tau", lo=0.1, hi=1, n=3, scale="cubic"),
    ):
        with pytest.raises(ConfigError):
            ex.Axis(**bad)


def test_spec_validation():
    with pytest.raises(ConfigError):
        small_spec(fixed={"omega_ratio": 0.375})
    with pytest.raises(ConfigError):
        small_spec(axes=[ex.Axis("J", 0, 1, 2), ex.Axis("J", 0, 1, 2)])
    with pytest.raises(ConfigError):
        small_spec(tc_over_th=1.0)
    with pytest.raises(ConfigError):
        small_spec(objective="power")
    with pytest.raises(ConfigError):
        small_spec(fixed={"omega_ratio": 0.375, "kT_h": 5.54, "B": 1.0})
    with pytest.raises(ConfigError):
        small_spec(workers=0)
    # tau is irrelevant in adiabatic mode
    spec = small_spec(axes=[ex.Axis("J", 0, 0.1, 2)], mode="adiabatic")
    assert spec.axis_names == ("J",)


def test_grid_order_is_lexicographic():
    spec = small_spec(axes=[ex.Axis("J", 0, 0.1, 2), ex.Axis("kT_h", 1, 3, 3)], fixed={"omega_ratio": 0.5, "tau": 1.0})
    pts = [(p["J"], p["kT_h"]) for p in spec.grid()]
    assert pts == [(0.0, 1.0), (0.0, 2.0), (0.0, 3.0), (0.1, 1.0), (0.1, 2.0), (0.1, 3.0)]


def test_single_point_grid_equals_heats():
    spec = small_spec(axes=[ex.Axis("J", 0.1, 0.1, 1)], fixed={"omega_ratio": 0.5, "kT_h": 3.0}, mode="adiabatic")
    (rec,) = ex.grid_sweep(spec)
    rep = heats(BathConfig.from_ratio(3.0, 0.1), CycleInputs(4.0, 2.0, 0.1))
    for k, v in rep.to_dict().items():
        assert rec[k] == v
    assert rec["error"] is None and (rec["P"], rec["P1"], rec["P2"]) == (1.0, 1.0, 1.0)


def test_empty_axes_rejected():
    spec = small_spec(axes=[], fixed={"J": 0.0, "tau": 1.0, "omega_ratio": 0.5, "kT_h": 1.0})
    with pytest.raises(ConfigError):
        ex.grid_sweep(spec)
    with pytest.raises(ConfigError):
        ex.heat_leak_map(spec)


def test_fig5_work_falls_with_coupling():
    recs = ex.grid_sweep(small_spec())
    for tau in sorted({r["tau"] for r in recs}):
        W = [r["W"] for r in recs if r["tau"] == tau]
        assert np.all(np.diff(W) < 0)
        assert W[0] > 0 > W[-1]
        assert all(r["error"] is None for r in recs)


def test_fig7_efficiency_exceeds_uncoupled_value():
    spec = small_spec(fixed={"omega_ratio": 0.6475, "kT_h": 0.5})
    recs = ex.grid_sweep(spec)
    eta0 = 1 - 0.6475
    engine = [r for r in recs if r["regime"] == "engine"]
    assert len(engine) >= 15
    for r in engine:
        if r["J"] > 0:
            assert r["efficiency"] > eta0
        else:
            assert r["efficiency"] <= eta0 + 1e-12
        assert r["efficiency"] < 0.9


def test_workers_give_identical_csv():
    spec = small_spec(axes=[ex.Axis("J", 0.0, 0.3, 3), ex.Axis("tau", 0.2, 2.0, 3, "log")])
    a = ex.records_to_csv(ex.grid_sweep(spec), ex.sweep_columns(spec))
    b = ex.records_to_csv(ex.grid_sweep(ex.SweepSpec(**{**spec.to_dict(), "workers": 2})), ex.sweep_columns(spec))
    assert a == b


def test_csv_format():
    spec = small_spec(axes=[ex.Axis("J", 0.0, 0.3, 2)], mode="adiabatic")
    text = ex.records_to_csv(ex.grid_sweep(spec), ex.sweep_columns(spec))
    assert "\r" not in text and text.endswith("\n")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["J", *ex.REPORT_COLUMNS]
    assert len(rows) == 3
    assert float(rows[2][0]) == 0.3 and rows[1][-1] == ""
    assert ex._fmt(0.1) == "0.10000000000000001" and ex._fmt(True) == "true"
    assert json.loads(ex.records_to_json([{"regime": Regime.ENGINE, "x": np.float64(1.5)}])) == [
        {"regime": "engine", "x": 1.5}
    ]


def test_heat_leak_map():
    spec = small_spec(axes=[ex.Axis("J", 0.0, 0.5, 6)], fixed={"omega_ratio": 0.6475, "kT_h": 0.5}, mode="adiabatic")
    rows = ex.heat_leak_map(spec)
    assert rows[0]["Qh_leak"] == 0 and rows[0]["negative_leak"] is False
    for r in rows:
        assert r["Qc_leak"] == -r["Qh_leak"]
        assert r["negative_leak"] == (r["Qh_leak"] < 0)
    assert any(r["negative_leak"] for r in rows)


def test_tau_trajectory_reaches_adiabatic_limit():
    base = TanhSweepConfig(1.0, 2.0, 0.0, 1.0)
    bath = BathConfig.from_ratio(4.7, 0.375)
    pts = ex.tau_trajectory(base, CouplingConfig(0.125), [0.05, 1.0, 10.0], bath, max_step_angle=1e-2)
    assert np.allclose(pts[-1].persistence, 1, atol=1e-3)
    assert pts[0].persistence[0] < 0.9
    assert pts[-1].regime is Regime.ENGINE
    assert ex.regime_sequence(pts)[-1] is Regime.ENGINE
    d = pts[0].to_dict()
    assert set(d) == {"tau", "P", "P1", "P2", "regime", "Q_h", "Q_c", "W"}
    with pytest.raises(ConfigError):
        ex.tau_trajectory(base, CouplingConfig(0.1), [1.0, 0.5], bath)


def test_tau_trajectory_persistence_independent_of_bath():
    base = TanhSweepConfig(1.0, 2.0, 0.0, 1.0)
    taus = [0.1, 0.5]
    a = ex.tau_trajectory(base, CouplingConfig(0.125), taus, BathConfig.from_ratio(2.0, 0.5), max_step_angle=1e-2)
    b = ex.tau_trajectory(base, CouplingConfig(0.125), taus, BathConfig.from_ratio(4.7, 0.375), max_step_angle=1e-2)
    assert [p.persistence for p in a] == [p.persistence for p in b]


def test_regime_sequence_collapses_repeats():
    mk = lambda r: ex.TrajectoryPoint(1.0, (1, 1, 1), r, 0, 0, 0)  # noqa: E731
    seq = ex.regime_sequence([mk(Regime.HEATER), mk(Regime.HEATER), mk(Regime.ENGINE), mk(Regime.ENGINE)])
    assert seq == [Regime.HEATER, Regime.ENGINE]


def test_maximize_single_point():
    spec = small_spec(axes=[ex.Axis("J", 0.0, 0.0, 1)], fixed={"omega_ratio": 0.375, "kT_h": 5.54},
                      objective="work", mode="adiabatic")  # fmt: skip
    res = ex.maximize(spec)
    rep = heats(BathConfig.from_ratio(5.54, 0.1), CycleInputs(4.0, 1.5, 0.0))
    assert res.value == rep.W == res.coarse_best
    assert json.loads(json.dumps(res.to_dict()))["params"]["J"] == 0.0


def test_maximize_beats_coarse_grid():
    spec = small_spec(
        axes=[ex.Axis("kT_h", 1, 10, 5), ex.Axis("omega_ratio", 0.1, 0.9, 5)],
        fixed={"J": 0.0},
        objective="work",
        mode="adiabatic",
    )
    res = ex.maximize(spec)
    coarse = [ex._score(spec, p, {})[0] for p in spec.grid()]
    assert res.value >= max(coarse) == res.coarse_best
    assert 1 <= res.params["kT_h"] <= 10 and 0.1 <= res.params["omega_ratio"] <= 0.9
    assert math.isclose(res.value, res.report.W)


def test_maximize_without_engine_region():
    # omega2/omega1 below T_c/T_h never runs as an engine
    spec = small_spec(axes=[ex.Axis("omega_ratio", 0.02, 0.08, 4)], fixed={"J": 0.0, "kT_h": 1.0},
                      objective="efficiency", mode="adiabatic")  # fmt: skip
    with pytest.raises(NoEngineRegion):
        ex.maximize(spec)
    with pytest.raises(ConfigError):
        ex.maximize(small_spec())


def test_spec_roundtrip():
    spec = small_spec(objective="work")
    again = ex.SweepSpec(**spec.to_dict())
    assert again == spec
    assert json.loads(json.dumps(spec.to_dict()))["axes"][1]["scale"] == "log"


def test_failing_points_are_recorded_not_fatal():
    # k T_h = 0.001 overflows the Boltzmann factors; the other point is fine
    spec = small_spec(axes=[ex.Axis("kT_h", 0.001, 1.0, 2)], fixed={"J": 0.0, "omega_ratio": 0.5}, mode="adiabatic")
    bad, good = ex.grid_sweep(spec)
    assert bad["error"].startswith("RangeError") and bad["W"] is None
    assert good["error"] is None and good["W"] is not None


def test_efficiency_optimum_depends_on_coupling_range():
    # with J capped at 0.3 the optimum sits on the cap; a wider range moves it inward
    capped = ex.maximize(ex.SweepSpec(4.0, 0.1, axes=[ex.Axis("J", 0, 0.3, 7), ex.Axis("omega_ratio", 0.5, 0.95, 10)],
                                      fixed={"kT_h": 0.5}, objective="efficiency", mode="adiabatic"))  # fmt: skip
    wide = ex.maximize(ex.SweepSpec(4.0, 0.1, axes=[ex.Axis("J", 0, 0.5, 11), ex.Axis("omega_ratio", 0.5, 0.95, 10)],
                                    fixed={"kT_h": 0.5}, objective="efficiency", mode="adiabatic"))  # fmt: skip
    assert capped.params["J"] == pytest.approx(0.3, abs=1e-9)
    assert capped.value == pytest.approx(0.8577, abs=1e-4)
    assert wide.params["J"] == pytest.approx(0.35, abs=0.005)
    assert wide.params["omega_ratio"] == pytest.approx(0.735, abs=0.005)
    assert capped.value < wide.value < 0.9
