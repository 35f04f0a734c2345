"""Command line interface: ``fiesta {spectrum,transitions,optimize,fidelity-sweep}``.

Configuration is an INI file.  Every physical quantity carries a unit suffix:
frequencies ``_ghz`` (ordinary frequency, multiplied by 2 pi) or
``_over_omega`` / ``_over_delta``; times ``_ns``, ``_ps``, ``_us`` or
``_omega`` (the dimensionless product omega t); phases ``_rad``.
Internally angular frequencies are in rad/ns and times in ns.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .branches import get_branches
from .errors import ConfigError, FiestaError
from .floquet import DriveConfig, floquet_modes_analytic, fold_quasienergy, mode_fidelity, quasienergies_analytic, solve_floquet
from .optimize import optimize_gate, sweep_edge_transitions, sweep_gate_fidelity
from .propagation import NoiseModel
from .pulse import PulseEnvelope
from .tomography import RotationTarget

log = logging.getLogger("fiesta")

TWO_PI = 2 * math.pi
DEFAULT_GHZ = 2.288
TIME_SCALE = {"_ns": 1.0, "_ps": 1e-3, "_us": 1e3}

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


@dataclass
class RunConfig:
    """Parsed run configuration in internal units."""

    drive: DriveConfig
    pulse: PulseEnvelope | None = None
    t1: float | None = None
    target: RotationTarget | None = None
    constraints: tuple[float, float] = (0.04, 0.08)
    grids: dict[str, np.ndarray] = field(default_factory=dict)
    edge: str = "rise"
    output: str | None = None


def _float(text: str, key: str) -> float:
    try:
        val = float(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: not a number: {text!r}") from exc
    if not math.isfinite(val):
        raise ConfigError(f"{key}: must be finite")
    return val


def parse_grid(text: str, key: str) -> np.ndarray:
    """``start:stop:count`` (inclusive linspace) or a comma separated list."""
    text = text.strip()
    if not text:
        return np.array([])
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"{key}: grid must be start:stop:count")
        lo, hi = _float(parts[0], key), _float(parts[1], key)
        try:
            n = int(parts[2])
        except ValueError as exc:
            raise ConfigError(f"{key}: grid count must be an integer") from exc
        if n < 1 or lo > hi:
            raise ConfigError(f"{key}: need count >= 1 and start <= stop")
        return np.linspace(lo, hi, n)
    return np.array([_float(v, key) for v in text.split(",") if v.strip()])


class _Section:
    """Unit-aware view of one config section."""

    def __init__(self, cp: configparser.ConfigParser, name: str, omega: float = math.nan, delta: float = math.nan):
        self.name = name
        self.data = dict(cp[name]) if cp.has_section(name) else {}
        self.omega, self.delta = omega, delta

    def _find(self, base: str, suffixes):
        hits = [(s, self.data[base + s]) for s in suffixes if base + s in self.data]
        if len(hits) > 1:
            raise ConfigError(f"[{self.name}] {base}: given in more than one unit")
        return hits[0] if hits else (None, None)

    def _freq_scale(self, suffix: str) -> float:
        return {"_ghz": TWO_PI, "_over_omega": self.omega, "_over_delta": self.delta}[suffix]

    def _time_scale(self, suffix: str) -> float:
        return 1.0 / self.omega if suffix == "_omega" else TIME_SCALE[suffix]

    def freq(self, base: str, default=None, grid: bool = False):
        suffix, raw = self._find(base, ("_ghz", "_over_omega", "_over_delta"))
        if suffix is None:
            return default
        key = f"[{self.name}] {base}{suffix}"
        scale = self._freq_scale(suffix)
        return parse_grid(raw, key) * scale if grid else _float(raw, key) * scale

    def time(self, base: str, default=None, grid: bool = False):
        suffix, raw = self._find(base, ("_ns", "_ps", "_us", "_omega"))
        if suffix is None:
            return default
        key = f"[{self.name}] {base}{suffix}"
        scale = self._time_scale(suffix)
        return parse_grid(raw, key) * scale if grid else _float(raw, key) * scale

    def phase(self, base: str, default=None, grid: bool = False):
        raw = self.data.get(base + "_rad")
        if raw is None:
            return default
        key = f"[{self.name}] {base}_rad"
        return parse_grid(raw, key) if grid else _float(raw, key)

    def text(self, key: str, default=None):
        return self.data.get(key, default)


def load_config(path: str | None) -> RunConfig:
    """Read a config file; a missing path gives the built-in defaults."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                cp.read_file(fh)
        except OSError:
            raise
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}") from exc

    d = _Section(cp, "drive")
    d_suf, _ = d._find("delta", ("_ghz", "_over_omega", "_over_delta"))
    o_suf, _ = d._find("omega", ("_ghz", "_over_omega", "_over_delta"))
    if d_suf == "_over_delta" or o_suf == "_over_omega" or (d_suf, o_suf) == ("_over_omega", "_over_delta"):
        raise ConfigError("[drive] delta and omega cannot both be relative")
    if d_suf == "_over_omega":
        d.omega = d.freq("omega", TWO_PI * DEFAULT_GHZ)
        d.delta = d.freq("delta")
    else:
        d.delta = d.freq("delta", TWO_PI * DEFAULT_GHZ)
        d.omega = d.freq("omega", d.delta)
    delta, omega = d.delta, d.omega
    try:
        drive = DriveConfig(delta, omega, d.phase("phi", 0.0))
    except FiestaError as exc:
        raise ConfigError(str(exc)) from exc

    def section(name):
        return _Section(cp, name, omega, delta)

    ps = section("pulse")
    pulse = None
    if ps.data:
        try:
            pulse = PulseEnvelope(
                ps.freq("a_max", 0.25 * delta),
                ps.time("t_rise", 1.0 / omega),
                ps.time("t_plateau", 0.0),
                ps.time("t_fall", 1.0 / omega),
            )
        except FiestaError as exc:
            raise ConfigError(str(exc)) from exc

    ns = section("noise")
    t1 = ns.time("t1")
    if t1 is not None and t1 <= 0:
        raise ConfigError("[noise] t1 must be positive")

    ts = section("target")
    axis = ts.text("axis", "x").lower()
    if axis not in ("x", "y"):
        raise ConfigError("[target] axis must be x or y")
    angle = ts.phase("angle", math.pi / 2)
    try:
        target = RotationTarget(ts.phase("axis_phase", 0.0 if axis == "x" else -math.pi / 2), angle)
    except FiestaError as exc:
        raise ConfigError(str(exc)) from exc

    cs = section("constraints")
    constraints = (cs.time("resolution", 0.04), cs.time("min_edge", 0.08))
    if constraints[0] <= 0 or constraints[1] < 0:
        raise ConfigError("[constraints] resolution must be positive and min_edge non-negative")

    sw = section("sweep")
    grids = {}
    for name, getter in (
        ("amplitude", sw.freq),
        ("edge_time", sw.time),
        ("t_plateau", sw.time),
        ("phi_f", sw.phase),
        ("theta", sw.phase),
    ):
        g = getter(name, grid=True)
        if g is not None:
            grids[name] = np.asarray(g, dtype=float)
    edge = sw.text("edge", "rise")
    if edge not in ("rise", "fall"):
        raise ConfigError("[sweep] edge must be rise or fall")
    out = cp.get("output", "path", fallback=None)
    return RunConfig(drive, pulse, t1, target, constraints, grids, edge, out)


def fmt(x) -> str:
    """Fixed 12-significant-digit formatting; NaN becomes an empty field."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    x = float(x)
    return "" if math.isnan(x) else f"{x:.12g}"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _require_grid(rc: RunConfig, name: str) -> np.ndarray:
    g = rc.grids.get(name)
    if g is None or g.size == 0:
        raise ConfigError(f"[sweep] {name} grid is missing or empty")
    return g


def _noise(rc: RunConfig) -> NoiseModel:
    return NoiseModel() if rc.t1 is None else NoiseModel.amplitude_damping(rc.t1)


def cmd_spectrum(rc: RunConfig, args) -> str:
    cfg = rc.drive
    om = cfg.omega
    grid = _require_grid(rc, "amplitude")
    if np.any(grid < 0):
        raise ConfigError("[sweep] amplitudes must be non-negative")
    br = get_branches(cfg, float(grid.max()))
    rows = []
    for a in grid:
        try:
            exact = solve_floquet(cfg, a)
            an = sorted(fold_quasienergy(e, om)[0] for e in quasienergies_analytic(cfg, a))
            fid = mode_fidelity(floquet_modes_analytic(cfg, a), br.solution(a))
            rows.append((a / om, exact.quasienergies[0] / om, exact.quasienergies[1] / om, an[0] / om, an[1] / om, fid, "ok"))
        except (FiestaError, ArithmeticError) as exc:
            rows.append((a / om, None, None, None, None, None, f"{type(exc).__name__}: {exc}"))
    header = ["A_over_omega", "eps0_exact_over_omega", "eps1_exact_over_omega", "eps0_analytic_over_omega", "eps1_analytic_over_omega", "mode_fidelity", "status"]
    return _csv(header, rows)


def cmd_transitions(rc: RunConfig, args) -> str:
    cfg = rc.drive
    amps = _require_grid(rc, "amplitude")
    times = _require_grid(rc, "edge_time")
    phis = rc.grids.get("phi_f", np.array([cfg.phi]))
    if phis.size == 0:
        raise ConfigError("[sweep] phi_f grid is empty")
    res = sweep_edge_transitions(cfg, amps, times, rc.edge, list(phis), method=args.method, workers=args.threads)
    apt = res.columns.get("apt")
    ex = res.columns.get("exact")
    rows = []
    shape = (amps.size, times.size, phis.size)
    for i, j, k in np.ndindex(*shape):
        idx = (i, j, k) if phis.size > 1 else (i, j)
        rows.append(
            (
                amps[i] / cfg.delta,
                times[j] * cfg.omega,
                phis[k],
                None if apt is None else apt[idx],
                None if ex is None else ex[idx],
                res.status[idx],
            )
        )
    return _csv(["A_m_over_delta", "omega_t_edge", "phi_edge_rad", "N_apt", "N_exact", "status"], rows)


def cmd_optimize(rc: RunConfig, args) -> str:
    cfg = rc.drive
    om = cfg.omega
    cons = rc.constraints if args.constrained else None
    g = optimize_gate(cfg, rc.target, _noise(rc), cons)
    p = g.pulse
    summary = (
        f"target: axis phase {rc.target.axis_phase:.6g} rad, angle {rc.target.angle:.6g} rad\n"
        f"t_rise    = {p.t_rise * om:.4f}/omega = {p.t_rise * 1e3:.2f} ps\n"
        f"t_plateau = {p.t_plateau * om:.4f}/omega = {p.t_plateau * 1e3:.2f} ps\n"
        f"t_fall    = {p.t_fall * om:.4f}/omega = {p.t_fall * 1e3:.2f} ps\n"
        f"A_m       = {p.a_max / om:.4f} omega = 2pi x {p.a_max / TWO_PI:.4f} GHz\n"
        f"theta     = {g.predicted_theta:.8f} rad\n"
        f"F_g       = {g.gate_fidelity:.6f}\n"
    )
    sys.stderr.write(summary)
    header = ["axis_phase_rad", "target_angle_rad", "omega_t_rise", "omega_t_plateau", "omega_t_fall", "A_m_over_omega", "t_rise_ps", "t_plateau_ps", "t_fall_ps", "A_m_ghz", "theta_rad", "gate_fidelity", "constrained", "status"]
    row = (
        rc.target.axis_phase, rc.target.angle,
        p.t_rise * om, p.t_plateau * om, p.t_fall * om, p.a_max / om,
        p.t_rise * 1e3, p.t_plateau * 1e3, p.t_fall * 1e3, p.a_max / TWO_PI,
        g.predicted_theta, g.gate_fidelity, "yes" if cons else "no", "ok",
    )
    return _csv(header, [row])


def cmd_fidelity_sweep(rc: RunConfig, args) -> str:
    cfg = rc.drive
    om = cfg.omega
    if rc.pulse is None:
        raise ConfigError("[pulse] section is required for fidelity-sweep")
    thetas = rc.grids.get("theta")
    if thetas is not None:
        if thetas.size == 0:
            raise ConfigError("[sweep] theta grid is empty")
        res = sweep_gate_fidelity(cfg, rc.pulse, _noise(rc), thetas=thetas, workers=args.threads)
        rows = [(rc.pulse.t_plateau * om, rc.pulse.t_fall * om, None, th, res.values[i], res.status[i]) for i, th in enumerate(thetas)]
    else:
        tps = _require_grid(rc, "t_plateau")
        amps = rc.grids.get("amplitude", np.array([rc.pulse.a_max]))
        if amps.size == 0:
            raise ConfigError("[sweep] amplitude grid is empty")
        res = sweep_gate_fidelity(cfg, rc.pulse, _noise(rc), t_plateau=tps, amplitudes=amps, workers=args.threads)
        rows = [
            (tps[i] * om, rc.pulse.t_fall * om, amps[j] / om, None, res.values[i, j], res.status[i, j])
            for i, j in np.ndindex(tps.size, amps.size)
        ]
    return _csv(["omega_t_plateau", "omega_t_fall", "A_m_over_omega", "theta_rad", "gate_fidelity", "status"], rows)


COMMANDS = {
    "spectrum": cmd_spectrum,
    "transitions": cmd_transitions,
    "optimize": cmd_optimize,
    "fidelity-sweep": cmd_fidelity_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fiesta", description="Floquet analysis and pulse optimization for a driven qubit")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="INI configuration file")
    ap.add_argument("--out", help="output CSV path (overrides [output] path; default stdout)")
    ap.add_argument("--method", choices=["apt", "exact", "both"], default="both")
    ap.add_argument("--constrained", action="store_true", help="apply the time-resolution constraints")
    ap.add_argument("--threads", type=int, default=None, help="worker processes for sweeps")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        rc = load_config(args.config)
        text = COMMANDS[args.command](rc, args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except (FiestaError, ArithmeticError) as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    out = args.out or rc.output
    try:
        if out:
            Path(out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
