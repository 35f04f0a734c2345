"""Pulse optimization by coherent suppression of nonadiabatic transitions."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np
from scipy import optimize
from scipy.interpolate import CubicSpline

from .dynamics import apt_transition_amplitude, dynamical_phase, rotation
from .errors import BracketError, FiestaError, WindowError
from .branches import get_branches
from .floquet import DriveConfig
from .propagation import Edge, NoiseModel, exact_transition_amplitude, frame_rotation, propagator
from .pulse import PulseEnvelope, quantize
from .tomography import RotationTarget, pulse_gate_fidelity

Method = Literal["apt", "exact", "both"]


@dataclass
class SweepResult:
    """Values on a rectangular grid.

    Attributes:
        axes: Ordered mapping of axis name to grid values.
        values: Primary value per grid point, shape given by the axes.
        columns: All computed value arrays by name (e.g. ``apt`` and ``exact``).
        status: ``"ok"`` or an error message per grid point.
        metadata: Configuration, method and timing information.
    """

    axes: dict[str, np.ndarray]
    values: np.ndarray
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    status: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(v) for v in self.axes.values())

    def rows(self):
        """Yield ``(axis values, column values, status)`` per grid point in C order."""
        names = list(self.axes)
        for idx in np.ndindex(*self.shape):
            point = {n: float(self.axes[n][i]) for n, i in zip(names, idx)}
            cols = {k: float(v[idx]) for k, v in self.columns.items()}
            yield point, cols, str(self.status[idx])


@dataclass(frozen=True)
class OptimizedGate:
    """Result of :func:`optimize_gate`."""

    pulse: PulseEnvelope
    phi: float
    predicted_theta: float
    gate_fidelity: float
    constraint_set: tuple[float, float] | None = None


def _map(fn: Callable, items: Sequence, workers: int | None):
    if workers and workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
    return [fn(it) for it in items]


def _safe(fn, *args):
    try:
        return fn(*args), "ok"
    except (FiestaError, ArithmeticError, ValueError) as exc:
        return math.nan, f"{type(exc).__name__}: {exc}"


def _edge_pulse(a_m: float, t_edge: float, edge: Edge) -> PulseEnvelope:
    if edge == "rise":
        return PulseEnvelope(a_m, t_edge, 0.0, 0.0)
    return PulseEnvelope(a_m, 0.0, 0.0, t_edge)


def edge_amplitude(cfg: DriveConfig, a_m: float, t_edge: float, edge: Edge, phi_eff: float, method: str = "exact") -> float:
    """``|N|`` for a single edge whose carrier phase at the edge start is ``phi_eff``."""
    c = cfg.with_phase(phi_eff)
    p = _edge_pulse(a_m, t_edge, edge)
    if method == "apt":
        return abs(apt_transition_amplitude(c, p, edge))
    if method == "exact":
        return abs(exact_transition_amplitude(c, p, edge))
    raise ValueError(f"unknown method {method!r}")


def _edge_task(args):
    cfg, a_m, t_edge, edge, phi_eff, method = args
    return _safe(edge_amplitude, cfg, a_m, t_edge, edge, phi_eff, method)


def sweep_edge_transitions(
    cfg: DriveConfig,
    amplitudes: Sequence[float],
    edge_times: Sequence[float],
    edge: Edge,
    phi_eff: float | Sequence[float] | None = None,
    method: Method = "exact",
    workers: int | None = None,
) -> SweepResult:
    """Transition amplitude over ``A_m x t_edge`` (and optionally ``phi_eff``).

    ``phi_eff`` is the carrier phase at the start of the edge; it defaults to
    ``cfg.phi``.  A sequence of phases adds a third axis.  Points that fail are
    recorded as NaN with a status message.
    """
    a = np.atleast_1d(np.asarray(amplitudes, dtype=float))
    t = np.atleast_1d(np.asarray(edge_times, dtype=float))
    phis = np.atleast_1d(np.asarray(cfg.phi if phi_eff is None else phi_eff, dtype=float))
    if a.size == 0 or t.size == 0 or phis.size == 0:
        raise ValueError("sweep grid must be non-empty")
    methods = ["apt", "exact"] if method == "both" else [method]
    start = time.time()
    shape = (a.size, t.size, phis.size)
    columns, status = {}, np.full(shape, "ok", dtype=object)
    for m in methods:
        tasks = [(cfg, ai, ti, edge, pi, m) for ai in a for ti in t for pi in phis]
        res = _map(_edge_task, tasks, workers)
        columns[m] = np.array([r[0] for r in res]).reshape(shape)
        for idx, r in zip(np.ndindex(*shape), res):
            if r[1] != "ok":
                status[idx] = r[1]
    axes = {"A_m": a, "t_edge": t, "phi_eff": phis}
    if phis.size == 1:
        columns = {k: v[..., 0] for k, v in columns.items()}
        status = status[..., 0]
        del axes["phi_eff"]
    primary = columns["exact" if "exact" in columns else "apt"]
    meta = {"cfg": cfg, "edge": edge, "method": method, "started": start, "elapsed": time.time() - start}
    return SweepResult(axes=axes, values=primary, columns=columns, status=status, metadata=meta)


def find_optimal_edge_time(
    cfg: DriveConfig,
    a_m: float,
    edge: Edge,
    phi_eff: float | None = None,
    search_window: tuple[float, float] | None = None,
    method: str = "exact",
    n_coarse: int = 41,
) -> float:
    """First local minimum of ``|N(t_edge)|`` inside ``search_window``.

    A coarse scan locates the first interior minimum, which is then refined by
    golden-section search.  The default window is ``[0.2, 5] / omega``.

    Raises:
        WindowError: if the scan has no interior minimum.
    """
    phi_eff = cfg.phi if phi_eff is None else phi_eff
    lo, hi = search_window or (0.2 / cfg.omega, 5.0 / cfg.omega)
    if not 0 < lo < hi:
        raise WindowError("search window must satisfy 0 < lo < hi")

    def f(t):
        return edge_amplitude(cfg, a_m, float(t), edge, phi_eff, method)

    ts = np.linspace(lo, hi, n_coarse)
    vals = np.array([f(t) for t in ts])
    for i in range(1, n_coarse - 1):
        if vals[i] < vals[i - 1] and vals[i] <= vals[i + 1]:
            res = optimize.minimize_scalar(
                f, bracket=(ts[i - 1], ts[i], ts[i + 1]), method="golden", tol=1e-4
            )
            return float(res.x) if res.fun <= vals[i] else float(ts[i])
    raise WindowError(f"no interior minimum of |N| in [{lo:.4g}, {hi:.4g}]")


def calibrate_amplitude(
    cfg: DriveConfig,
    t_rise: float,
    t_plateau: float,
    t_fall: float,
    phi: float,
    target_theta: float,
    bracket: tuple[float, float] | None = None,
    tol: float = 1e-6,
) -> float:
    """Peak amplitude whose dynamical phase equals ``target_theta``.

    The root is found with Brent's method (bisection with secant and inverse
    quadratic steps).  If the bracket ends do not straddle the target, the
    bracket is scanned and the first crossing is used.

    Raises:
        BracketError: if no amplitude in the bracket reaches the target.
    """
    if target_theta == 0:
        return 0.0
    c = cfg.with_phase(phi)
    lo, hi = bracket or (0.0, 1.5 * cfg.delta)

    def g(a):
        return dynamical_phase(c, PulseEnvelope(a, t_rise, t_plateau, t_fall)) - target_theta

    a_grid = np.linspace(lo, hi, 17)
    g_lo = g(a_grid[0])
    root_bracket = None
    for a0, a1 in zip(a_grid[:-1], a_grid[1:]):
        g1 = g(a1)
        if g_lo == 0:
            return float(a0)
        if g_lo * g1 < 0 or g1 == 0:
            root_bracket = (a0, a1)
            break
        g_lo = g1
    if root_bracket is None:
        raise BracketError(f"target angle {target_theta:.6g} not reached for amplitudes in [{lo:.4g}, {hi:.4g}]")
    a = optimize.brentq(g, *root_bracket, xtol=1e-14 * max(1.0, hi), rtol=1e-13)
    if abs(g(a)) > tol:
        raise BracketError(f"calibration residual {abs(g(a)):.2e} exceeds {tol:.1e}")
    return float(a)


def coherent_error(cfg: DriveConfig, p: PulseEnvelope, theta: float) -> float:
    """Noiseless process infidelity of ``p`` against the rotation by ``theta``."""
    U = frame_rotation(cfg.omega, p.t_total) @ propagator(cfg, p, 0.0, p.t_total)
    V = rotation(theta, cfg.phi)
    return float(1.0 - abs(np.trace(V.conj().T @ U) / 2) ** 2)


def _fall_map(cfg: DriveConfig, a_m: float, t_fall: np.ndarray, n_phi: int, method: str):
    phis = np.linspace(-math.pi, math.pi, n_phi, endpoint=False)
    vals = np.array([[edge_amplitude(cfg, a_m, tf, "fall", ph, method) for ph in phis] for tf in t_fall])
    # periodic spline in the fall phase for each fall time
    ext = np.concatenate([phis, [math.pi]])
    splines = [CubicSpline(ext, np.concatenate([row, row[:1]]), bc_type="periodic") for row in vals]
    return phis, vals, splines


def _wrap(phi):
    return (np.asarray(phi) + math.pi) % (2 * math.pi) - math.pi


def choose_plateau_and_fall(
    cfg: DriveConfig,
    a_rough: float,
    t_rise: float,
    target_theta: float,
    t_fall_range: tuple[float, float] | None = None,
    n_fall: int = 26,
    n_phi: int = 48,
    tp_step: float | None = None,
    band: float = 0.5,
    n_max: float = 0.02,
    n_short: int = 40,
    tie_tol: float = 2e-5,
    method: str = "exact",
) -> tuple[float, float, float]:
    """Pick ``(t_plateau, t_fall)`` where the fall edge suppresses transitions.

    Plateau times are restricted to rough rotation angles within ``band`` of
    the target.  A map of the fall-edge ``|N|`` over fall time and carrier
    phase shortlists up to ``n_short`` distinct valleys with ``|N| < n_max``.
    These are ranked by the coherent error of the whole pulse (exact,
    noiseless), since a small ``|N|`` alone does not fix the relative phase of
    the two Floquet modes.  Within ``tie_tol`` the shortest pulse wins, and the
    winner is polished by Nelder-Mead.

    Returns:
        ``(t_plateau, t_fall, coherent error)``.
    """
    om = cfg.omega
    lo, hi = t_fall_range or (0.5 / om, 3.0 / om)
    t_fall = np.linspace(lo, hi, n_fall)
    tp_step = tp_step or 0.02 / om
    theta_edges = np.array([dynamical_phase(cfg, PulseEnvelope(a_rough, t_rise, 0.0, tf)) for tf in t_fall])
    gap = get_branches(cfg, a_rough).gap(a_rough)
    if gap <= 0:
        raise WindowError("rough amplitude gives no rotation")
    _, _, splines = _fall_map(cfg, a_rough, t_fall, n_phi, method)

    cands = []
    for k, tf in enumerate(t_fall):
        tp_lo = max(0.0, (target_theta - band - theta_edges[k]) / gap)
        tp_hi = (target_theta + band - theta_edges[k]) / gap
        if tp_hi < 0:
            continue
        tps = np.arange(tp_lo, tp_hi + 0.5 * tp_step, tp_step)
        phi_f = _wrap(cfg.phi + om * (t_rise + tps))
        nvals = np.abs(splines[k](phi_f))
        for tp, nv in zip(tps, nvals):
            cands.append((float(nv), float(tp), float(tf), float(theta_edges[k] + gap * tp)))
    if not cands:
        raise WindowError("no plateau time reaches the target angle band")

    # distinct low-|N| valleys, best first
    cands.sort(key=lambda c: c[0])
    sep = 0.25 / om
    short = []
    for c in cands:
        if c[0] > max(n_max, cands[0][0]) or len(short) >= n_short:
            break
        if all(abs(c[1] - s[1]) > sep or abs(c[2] - s[2]) > sep for s in short):
            short.append(c)

    def a_est(tp, tf):
        th = float(np.interp(tf, t_fall, theta_edges)) + gap * tp
        return a_rough * target_theta / th if th > 0 else a_rough

    def objective(x):
        tp, tf = x
        if tp < 0 or not lo <= tf <= hi:
            return 1.0
        return coherent_error(cfg, PulseEnvelope(a_est(tp, tf), t_rise, tp, tf), target_theta)

    scored = [(objective((c[1], c[2])), t_rise + c[1] + c[2], c[1], c[2]) for c in short]
    e_min = min(s[0] for s in scored)
    pool = [s for s in scored if s[0] <= e_min + tie_tol]
    _, _, tp0, tf0 = min(pool, key=lambda s: s[1])

    step = (hi - lo) / (n_fall - 1)
    res = optimize.minimize(
        objective,
        np.array([tp0, tf0]),
        method="Nelder-Mead",
        options={
            "initial_simplex": np.array([[tp0, tf0], [tp0 + 2 * tp_step, tf0], [tp0, tf0 + 0.5 * step]]),
            "xatol": 1e-4 / om,
            "fatol": 1e-8,
            "maxiter": 200,
        },
    )
    tp, tf = float(res.x[0]), float(res.x[1])
    if res.fun > objective((tp0, tf0)) or abs(tp - tp0) > 0.5 / om or abs(tf - tf0) > 2 * step:
        tp, tf = tp0, tf0  # stay in the chosen valley
    return tp, tf, float(objective((tp, tf)))


def _quantized_best(cfg: DriveConfig, p: PulseEnvelope, target: RotationTarget, constraints) -> PulseEnvelope:
    """Best recalibrated pulse among the floor/ceil lattice neighbours of ``p``."""
    resolution, min_edge = constraints
    q = quantize(p, resolution, min_edge)

    def options(t, t_q, lo):
        lo_q = math.ceil(lo / resolution - 1e-9) * resolution
        vals = {t_q, math.floor(t / resolution + 1e-9) * resolution, math.ceil(t / resolution - 1e-9) * resolution}
        return sorted({round(max(v, lo_q), 12) for v in vals})

    best = None
    for tr in options(p.t_rise, q.t_rise, min_edge):
        for tp in options(p.t_plateau, q.t_plateau, 0.0):
            for tf in options(p.t_fall, q.t_fall, min_edge):
                try:
                    a = calibrate_amplitude(cfg, tr, tp, tf, cfg.phi, target.angle)
                except BracketError:
                    continue
                cand = PulseEnvelope(a, tr, tp, tf)
                key = (round(coherent_error(cfg, cand, target.angle), 7), cand.t_total)
                if best is None or key < best[0]:
                    best = (key, cand)
    if best is None:
        raise BracketError("no quantized pulse reaches the target angle")
    return best[1]


def optimize_gate(
    cfg: DriveConfig,
    target: RotationTarget,
    noise: NoiseModel | None = None,
    constraints: tuple[float, float] | None = None,
    rough_amplitude: float | None = None,
    method: str = "exact",
) -> OptimizedGate:
    """Optimize a flat-top pulse for an equatorial rotation.

    The rise time is the first transition-suppression minimum for the target
    axis; plateau and fall time are chosen jointly from a map of the fall-edge
    amplitude; the peak amplitude is then calibrated to the target angle.  With
    ``constraints = (resolution, min_edge)`` the times are quantized and the
    amplitude recalibrated; among the rounding choices for each time the one
    with the smallest coherent error is kept.
    """
    phi = target.axis_phase
    c = cfg.with_phase(phi)
    if target.angle == 0:
        p = PulseEnvelope(0.0, 0.0, 0.0, 0.0)
        return OptimizedGate(p, phi, 0.0, pulse_gate_fidelity(c, p, target, noise), constraints)
    a_rough = rough_amplitude or 0.25 * cfg.delta
    t_r = find_optimal_edge_time(c, a_rough, "rise", phi, method=method)
    t_p, t_f, _ = choose_plateau_and_fall(c, a_rough, t_r, target.angle, method=method)
    a_m = calibrate_amplitude(cfg, t_r, t_p, t_f, phi, target.angle)
    p = PulseEnvelope(a_m, t_r, t_p, t_f)
    if constraints is not None:
        p = _quantized_best(c, p, target, constraints)
    theta = dynamical_phase(c, p)
    fid = pulse_gate_fidelity(c, p, target, noise)
    return OptimizedGate(p, phi, theta, fid, constraints)


def _fid_task(args):
    cfg, p, noise = args

    def run():
        theta = dynamical_phase(cfg, p) % (2 * math.pi)
        return pulse_gate_fidelity(cfg, p, RotationTarget(cfg.phi, theta), noise)

    return _safe(run)


def sweep_gate_fidelity(
    cfg: DriveConfig,
    base: PulseEnvelope,
    noise: NoiseModel | None = None,
    t_plateau: Sequence[float] | None = None,
    amplitudes: Sequence[float] | None = None,
    thetas: Sequence[float] | None = None,
    workers: int | None = None,
) -> SweepResult:
    """Gate fidelity of ``base`` with the plateau time and/or peak amplitude varied.

    Each point is compared with the rotation by its own dynamical phase about
    the axis set by ``cfg.phi``.  Passing ``thetas`` instead calibrates the
    peak amplitude of ``base`` to every angle.
    """
    start = time.time()
    if thetas is not None:
        th = np.asarray(thetas, dtype=float)
        if th.size == 0:
            raise ValueError("sweep grid must be non-empty")
        pulses, stat0 = [], []
        for t in th:
            a, s = _safe(calibrate_amplitude, cfg, base.t_rise, base.t_plateau, base.t_fall, cfg.phi, float(t))
            pulses.append(None if s != "ok" else PulseEnvelope(a, base.t_rise, base.t_plateau, base.t_fall))
            stat0.append(s)
        axes = {"theta": th}
        res = _map(_fid_task, [(cfg, p, noise) for p in pulses if p is not None], workers)
        it = iter(res)
        out = [next(it) if p is not None else (math.nan, s) for p, s in zip(pulses, stat0)]
    else:
        tp = np.asarray([base.t_plateau] if t_plateau is None else t_plateau, dtype=float)
        am = np.asarray([base.a_max] if amplitudes is None else amplitudes, dtype=float)
        if tp.size == 0 or am.size == 0:
            raise ValueError("sweep grid must be non-empty")
        axes = {"t_p": tp, "A_m": am}
        tasks = [(cfg, PulseEnvelope(a, base.t_rise, t, base.t_fall), noise) for t in tp for a in am]
        out = _map(_fid_task, tasks, workers)
    shape = tuple(len(v) for v in axes.values())
    vals = np.array([o[0] for o in out]).reshape(shape)
    status = np.array([o[1] for o in out], dtype=object).reshape(shape)
    meta = {"cfg": cfg, "base": base, "started": start, "elapsed": time.time() - start}
    return SweepResult(axes=axes, values=vals, columns={"F_g": vals}, status=status, metadata=meta)
