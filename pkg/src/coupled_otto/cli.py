"""Command-line front end.

Usage::

    coupled-otto evolve|cycle|planes|sweep|optimize --config run.json [--out PATH] [--format csv|json]

Exit codes: 0 success, 2 configuration error, 3 numerical or physical error.
Errors are reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from . import explorer
from .errors import ConfigError, NumericalError, OttoError
from .explorer import Axis, SweepSpec
from .protocol import FieldProtocol, TanhSweepConfig, endpoint_frequencies, tanh_sweep
from .spin_system import DEFAULT_STEP_ANGLE, CouplingConfig, persistence_for
from .thermo import BathConfig, CycleInputs, heats, zero_plane

COMMANDS = ("evolve", "cycle", "planes", "sweep", "optimize")
FORMATS = ("csv", "json")
_TANH_KEYS = {f.name for f in fields(TanhSweepConfig)}


def _require(d, key, kind=dict):
    if key not in d:
        raise ConfigError(f"missing '{key}'")
    if kind is not None and not isinstance(d[key], kind):
        raise ConfigError(f"'{key}' must be a {kind.__name__}")
    return d[key]


def _check_keys(d, allowed, where):
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")


def _num(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where} must be a number")
    return float(v)


@dataclass(frozen=True)
class RunConfig:
    """Parsed run configuration; ``from_dict(to_dict())`` is the identity.

    Exactly one of ``tanh`` and ``samples`` describes the protocol (either may
    be absent for ``sweep``/``optimize``, which build their own).
    """

    tanh: Optional[TanhSweepConfig] = None
    samples: Optional[tuple] = None
    n_samples: int = 2001
    widen: bool = True
    J: float = 0.0
    T_h: Optional[float] = None
    tc_over_th: Optional[float] = None
    steps: Optional[int] = None
    max_step_angle: float = DEFAULT_STEP_ANGLE
    adiabatic: bool = False
    trajectory: Optional[Axis] = None
    sweep: Optional[SweepSpec] = None
    sweep_table: str = "cycle"
    out_path: Optional[str] = None
    out_format: str = "json"

    def __post_init__(self):
        if self.tanh is not None and self.samples is not None:
            raise ConfigError("give exactly one protocol form: 'tanh' or 'samples'")
        if self.out_format not in FORMATS:
            raise ConfigError(f"output format must be one of {FORMATS}")
        if self.sweep_table not in ("cycle", "heat_leak"):
            raise ConfigError("sweep table must be 'cycle' or 'heat_leak'")
        if self.steps is not None and (int(self.steps) != self.steps or self.steps < 1):
            raise ConfigError("steps must be a positive integer")
        if not self.max_step_angle > 0:
            raise ConfigError("max_step_angle must be positive")
        if self.trajectory is not None and self.trajectory.name != "tau":
            raise ConfigError("trajectory axis must be 'tau'")

    # -- parsing -----------------------------------------------------------

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        _check_keys(d, {"protocol", "coupling", "bath", "discretization", "adiabatic",
                        "trajectory", "sweep", "output"}, "config")  # fmt: skip
        kw = {}
        if "protocol" in d:
            p = _require(d, "protocol")
            _check_keys(p, {"tanh", "samples", "n_samples", "widen"}, "protocol")
            if ("tanh" in p) == ("samples" in p):
                raise ConfigError("protocol needs exactly one of 'tanh' or 'samples'")
            if "tanh" in p:
                t = _require(p, "tanh")
                _check_keys(t, _TANH_KEYS, "protocol.tanh")
                try:
                    kw["tanh"] = TanhSweepConfig(**{k: (v if isinstance(v, bool) else _num(v, k)) for k, v in t.items()})
                except TypeError as exc:
                    raise ConfigError(f"protocol.tanh: {exc}") from None
            else:
                rows = _require(p, "samples", list)
                try:
                    kw["samples"] = tuple(tuple(_num(v, "sample") for v in r) for r in rows)
                except TypeError:
                    raise ConfigError("samples must be rows of (time, X, Y, Z)") from None
                FieldProtocol.from_table(kw["samples"])
            if "n_samples" in p:
                kw["n_samples"] = int(_num(p["n_samples"], "n_samples"))
            if "widen" in p:
                kw["widen"] = bool(p["widen"])
        if "coupling" in d:
            c = _require(d, "coupling")
            _check_keys(c, {"J"}, "coupling")
            kw["J"] = _num(_require(c, "J", None), "J")
        if "bath" in d:
            b = _require(d, "bath")
            _check_keys(b, {"T_h", "tc_over_th"}, "bath")
            kw["T_h"] = _num(_require(b, "T_h", None), "T_h")
            kw["tc_over_th"] = _num(_require(b, "tc_over_th", None), "tc_over_th")
        if "discretization" in d:
            s = _require(d, "discretization")
            _check_keys(s, {"steps", "max_step_angle"}, "discretization")
            if s.get("steps") is not None:
                kw["steps"] = int(_num(s["steps"], "steps"))
            if "max_step_angle" in s:
                kw["max_step_angle"] = _num(s["max_step_angle"], "max_step_angle")
        if "adiabatic" in d:
            kw["adiabatic"] = bool(d["adiabatic"])
        if d.get("trajectory") is not None:
            tr = _require(d, "trajectory")
            _check_keys(tr, {"lo", "hi", "n", "scale"}, "trajectory")
            kw["trajectory"] = Axis("tau", **tr)
        if d.get("sweep") is not None:
            sw = dict(_require(d, "sweep"))
            kw["sweep_table"] = sw.pop("table", "cycle")
            try:
                kw["sweep"] = SweepSpec(**sw)
            except TypeError as exc:
                raise ConfigError(f"sweep: {exc}") from None
        if "output" in d:
            o = _require(d, "output")
            _check_keys(o, {"path", "format"}, "output")
            kw["out_path"] = o.get("path")
            kw["out_format"] = o.get("format", "json")
        return cls(**kw)

    def to_dict(self) -> dict:
        d = {}
        if self.tanh is not None or self.samples is not None:
            p = {"tanh": vars(self.tanh).copy()} if self.tanh is not None else {"samples": [list(r) for r in self.samples]}
            p.update(n_samples=self.n_samples, widen=self.widen)
            d["protocol"] = p
        d["coupling"] = {"J": self.J}
        if self.T_h is not None:
            d["bath"] = {"T_h": self.T_h, "tc_over_th": self.tc_over_th}
        d["discretization"] = {"steps": self.steps, "max_step_angle": self.max_step_angle}
        d["adiabatic"] = self.adiabatic
        if self.trajectory is not None:
            t = vars(self.trajectory).copy()
            t.pop("name")
            d["trajectory"] = t
        if self.sweep is not None:
            d["sweep"] = dict(self.sweep.to_dict(), table=self.sweep_table)
        d["output"] = {"path": self.out_path, "format": self.out_format}
        return d

    # -- derived objects ---------------------------------------------------

    def protocol(self) -> FieldProtocol:
        if self.tanh is not None:
            return tanh_sweep(self.tanh.widened() if self.widen else self.tanh, self.n_samples)
        if self.samples is not None:
            return FieldProtocol.from_table(self.samples)
        raise ConfigError("this command needs a 'protocol' section")

    def bath(self) -> BathConfig:
        if self.T_h is None:
            raise ConfigError("this command needs a 'bath' section")
        if not 0 < self.tc_over_th < 1:
            raise ConfigError("bath: need 0 < T_c/T_h < 1")
        return BathConfig.from_ratio(self.T_h, self.tc_over_th)

    def coupling(self) -> CouplingConfig:
        return CouplingConfig(self.J)

    def spec(self) -> SweepSpec:
        if self.sweep is None:
            raise ConfigError("this command needs a 'sweep' section")
        return self.sweep


# ---------------------------------------------------------------------------
# output helpers


def _cplx(z):
    return [float(np.real(z)), float(np.imag(z))]


def _flat_csv(d: dict) -> str:
    scalars = {k: v for k, v in d.items() if not isinstance(v, (dict, list, tuple))}
    return explorer.records_to_csv([scalars])


def _json(obj) -> str:
    return json.dumps(obj, indent=1, allow_nan=True) + "\n"


# ---------------------------------------------------------------------------
# commands; each returns the output text


def cmd_evolve(cfg: RunConfig) -> str:
    proto = cfg.protocol()
    res, tm = persistence_for(proto, cfg.coupling(), cfg.steps, cfg.max_step_angle)
    w1, w2 = endpoint_frequencies(proto)
    a, b, g = res.composed.astuple()
    P, P1, P2 = tm.persistence
    out = {
        "alpha": _cplx(a),
        "beta": _cplx(b),
        "gamma": _cplx(g),
        "U": [[_cplx(z) for z in row] for row in res.U],
        "P": P,
        "P1": P1,
        "P2": P2,
        "omega1": w1,
        "omega2": w2,
        "steps": res.steps,
    }
    if cfg.out_format == "csv":
        flat = {"alpha_re": a.real, "alpha_im": a.imag, "beta_re": b.real, "beta_im": b.imag,
                "gamma_re": g.real, "gamma_im": g.imag, "P": P, "P1": P1, "P2": P2,
                "omega1": w1, "omega2": w2, "steps": res.steps}  # fmt: skip
        return _flat_csv(flat)
    out["config"] = cfg.to_dict()
    return _json(out)


def _cycle_persistence(cfg: RunConfig, proto: FieldProtocol):
    if cfg.adiabatic:
        return (1.0, 1.0, 1.0)
    return persistence_for(proto, cfg.coupling(), cfg.steps, cfg.max_step_angle)[1].persistence


def cmd_cycle(cfg: RunConfig) -> str:
    bath = cfg.bath()
    proto = cfg.protocol()
    w1, w2 = endpoint_frequencies(proto)
    triple = _cycle_persistence(cfg, proto)
    rep = heats(bath, CycleInputs(w1, w2, cfg.J, triple))
    out = {"omega1": w1, "omega2": w2, "P": triple[0], "P1": triple[1], "P2": triple[2], **rep.to_dict()}
    if cfg.out_format == "csv":
        return _flat_csv(out)
    out["config"] = cfg.to_dict()
    return _json(out)


def cmd_planes(cfg: RunConfig) -> str:
    bath = cfg.bath()
    proto = cfg.protocol()
    w1, w2 = endpoint_frequencies(proto)
    planes = [zero_plane(q, bath, w1, w2, cfg.J) for q in ("Q_h", "Q_c", "W")]
    cols = ["quantity", "c0", "c_P", "c_P1", "c_P2"]
    rows = [dict(zip(cols, pl.row())) for pl in planes]
    traj = []
    if cfg.trajectory is not None:
        if cfg.tanh is None:
            raise ConfigError("a trajectory needs a tanh protocol")
        pts = explorer.tau_trajectory(
            cfg.tanh, cfg.coupling(), cfg.trajectory.values(), bath,
            widen=True, steps=cfg.steps, max_step_angle=cfg.max_step_angle,
        )  # fmt: skip
        traj = [p.to_dict() for p in pts]
    if cfg.out_format == "csv":
        text = explorer.records_to_csv(rows, cols)
        if traj:
            text += "\n" + explorer.records_to_csv(traj)
        return text
    return _json({"planes": rows, "trajectory": traj, "config": cfg.to_dict()})


def cmd_sweep(cfg: RunConfig) -> str:
    spec = cfg.spec()
    if cfg.sweep_table == "heat_leak":
        recs = explorer.heat_leak_map(spec)
        cols = list(spec.axis_names) + ["Qh_leak", "Qc_leak", "negative_leak"]
    else:
        recs = explorer.grid_sweep(spec)
        cols = explorer.sweep_columns(spec)
    if cfg.out_format == "csv":
        return explorer.records_to_csv(recs, cols)
    return explorer.records_to_json(recs)


def cmd_optimize(cfg: RunConfig) -> str:
    res = explorer.maximize(cfg.spec())
    if cfg.out_format == "csv":
        row = dict(res.params)
        row.update(value=res.value, coarse_best=res.coarse_best, **res.report.to_dict())
        return explorer.records_to_csv([row])
    return _json(dict(res.to_dict(), config=cfg.to_dict()))


_DISPATCH = {
    "evolve": cmd_evolve,
    "cycle": cmd_cycle,
    "planes": cmd_planes,
    "sweep": cmd_sweep,
    "optimize": cmd_optimize,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coupled-otto", description="Coupled two-qubit quantum Otto cycle toolkit.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", help="output path (default: config output.path, else stdout)")
    ap.add_argument("--format", choices=FORMATS, help="output format (overrides the config)")
    return ap


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return parse_config(raw)


def parse_config(raw) -> RunConfig:
    """:meth:`RunConfig.from_dict` with malformed-value errors mapped to :class:`ConfigError`."""
    try:
        return RunConfig.from_dict(raw)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"malformed config: {exc}") from None


def _fail(exc: Exception, code: int) -> int:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(err) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.format:
            cfg = parse_config(dict(cfg.to_dict(), output={"path": cfg.out_path, "format": args.format}))
        text = _DISPATCH[args.command](cfg)
        path = args.out or cfg.out_path
        if path:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except ConfigError as exc:
        return _fail(exc, 2)
    except (NumericalError, OttoError, FloatingPointError, OverflowError) as exc:
        return _fail(exc, 3)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
