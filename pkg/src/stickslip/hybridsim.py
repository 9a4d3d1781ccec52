"""Event-driven hybrid engine for the relay-perturbed third-order loop.

A trajectory alternates between

* slip phases, where x3 keeps one sign, the relay output is frozen at
  +/-gamma, and the motion follows the explicit solution of
  :mod:`stickslip.closedform`; and
* stick phases on the switching surface x3 = 0, inside the stiction region
  |b*x2 + c*x1| < gamma, where the state ramps as (x1 + x2*t, x2, 0) until
  it reaches the region boundary.

Phase changes are located exactly: slip ends at the first zero of x3 (scan
plus bisection on the closed form), stick ends at an analytically known
boundary-hit time.  The engine is a pure function of its inputs and uses no
randomness, so repeated runs are bit-identical.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .closedform import SlipSolution, build_slip_solution
from .stability import gas_check
from .sysmodel import (
    ComplexRoots,
    RealRoots,
    RootConfig,
    State,
    SystemParams,
    roots_from_params,
    state_space,
)

__all__ = [
    "NotGloballyStableError",
    "SimulationAbort",
    "SegmentKind",
    "ExitEvent",
    "EngineTolerances",
    "StictionRegion",
    "PhaseSegment",
    "CycleMetrics",
    "Trajectory",
    "ConvergenceReport",
    "in_stiction_region",
    "stiction_exit",
    "equivalent_dynamics_step",
    "sliding_projector",
    "equivalent_control",
    "detect_slip_events",
    "simulate",
    "classify_convergence",
]


class NotGloballyStableError(ValueError):
    """Simulation refused: parameters fail the a*b > c stability test."""


class SimulationAbort(RuntimeError):
    """Engine gave up; ``diagnostic`` holds the state where it happened."""

    def __init__(self, message: str, diagnostic: dict):
        super().__init__(message)
        self.diagnostic = diagnostic


class SegmentKind(str, Enum):
    SLIP = "slip"
    STICK = "stick"


class ExitEvent(str, Enum):
    RELAY_SWITCH = "relay_switch"
    STICTION_ENTRY = "stiction_entry"
    STICTION_EXIT = "stiction_exit"
    CONVERGED = "converged"
    HORIZON_REACHED = "horizon_reached"


# convergence classes (CycleMetrics.convergence_class)
EXPONENTIAL_AFTER_K_CYCLES = "exponential_after_k_cycles"
PERSISTENT_STICK_SLIP = "persistent_stick_slip"
NO_STICKING = "no_sticking"

# terminal attractor tags
ATTRACTOR_POSITIVE = "+gamma/c"
ATTRACTOR_NEGATIVE = "-gamma/c"
ATTRACTOR_INTERIOR_REST = "interior-rest"
ATTRACTOR_NONE = "none"


@dataclass(frozen=True)
class EngineTolerances:
    """Tolerance bundle for :func:`simulate`.

    ``stick_entry_margin`` (times gamma) separates genuine stiction entries
    from boundary grazes; ``rest_velocity`` (absolute; default
    1e-9*max(1, gamma/b)) declares a stick entry permanent rest;
    ``convergence_factor`` (times the last stiction-exit ball radius) stops
    the run once a slip has effectively reached its attractor;
    ``scan_step`` overrides the event-scan step derived from the roots.
    """

    stick_entry_margin: float = 1e-10
    rest_velocity: float | None = None
    convergence_factor: float = 1e-8
    scan_step: float | None = None
    max_relay_switches: int = 10_000
    switch_window_scans: float = 10.0


@dataclass(frozen=True)
class StictionRegion:
    """The sticking subset of the switching surface: x3 = 0 and
    |b*x2 + c*x1| < gamma, an open band crossing the x2 axis at
    +/-gamma/b and the x1 axis at +/-gamma/c."""

    params: SystemParams

    @property
    def x2_intercept(self) -> float:
        return self.params.gamma / self.params.b

    @property
    def x1_intercept(self) -> float:
        return self.params.gamma / self.params.c

    def contains(self, x: State, x3_tol: float = 0.0) -> bool:
        p = self.params
        return abs(x.x3) <= x3_tol and abs(p.b * x.x2 + p.c * x.x1) < p.gamma


def in_stiction_region(params: SystemParams, x: State, tol: float = 0.0) -> bool:
    """True iff ``x`` sits on the switching surface (|x3| <= tol) strictly
    inside the stiction band |b*x2 + c*x1| < gamma."""
    return StictionRegion(params).contains(x, x3_tol=tol)


def stiction_exit(
    params: SystemParams, entry: State, rest_velocity: float = 0.0
) -> tuple[float, State]:
    """Dwell time and exit state for a stick phase entered at ``entry``.

    During sticking x2 and x3 are frozen and x1 ramps at slope x2, so the
    state leaves the region where |b*x2 + c*x1| first equals gamma:
    x1_exit = (gamma/|x2| - b)/c * x2.  An entry with |x2| <= rest_velocity
    never leaves (the dwell is infinite); the entry state is returned.
    """
    p = params
    if abs(entry.x3) > 1e-9 * max(1.0, p.gamma):
        raise ValueError(f"stick entry must lie on the surface x3=0, got x3={entry.x3!r}")
    drive = p.b * entry.x2 + p.c * entry.x1
    if abs(drive) > p.gamma * (1.0 + 1e-12):
        raise ValueError(
            f"stick entry outside the stiction region: |b*x2+c*x1|={abs(drive)!r} "
            f"> gamma={p.gamma!r}"
        )
    frozen = State(t=entry.t, x1=entry.x1, x2=entry.x2, x3=0.0)
    if abs(entry.x2) <= rest_velocity:
        return math.inf, frozen
    x1_exit = (p.gamma / abs(entry.x2) - p.b) / p.c * entry.x2
    offset = (x1_exit - entry.x1) / entry.x2
    if offset < 0.0:
        raise ValueError(
            "negative dwell time: stick entry bookkeeping is inconsistent "
            f"(entry={entry!r}, x1_exit={x1_exit!r})"
        )
    return offset, State(t=entry.t + offset, x1=x1_exit, x2=entry.x2, x3=0.0)


def equivalent_dynamics_step(entry: State, dt: float) -> State:
    """Advance a sticking state by ``dt``: x1 ramps at slope x2, x2 and x3
    are frozen (the exact flow of the projected sliding dynamics)."""
    return State(t=entry.t + dt, x1=entry.x1 + entry.x2 * dt, x2=entry.x2, x3=0.0)


def sliding_projector(params: SystemParams) -> np.ndarray:
    """Projection Omega = I - B (C B)^-1 C annihilating the relay channel;
    satisfies C @ Omega = 0 and Omega @ B = 0."""
    ss = state_space(params)
    cb = float(ss.C @ ss.B)
    return np.eye(3) - np.outer(ss.B, ss.C) / cb


def equivalent_control(params: SystemParams, x: State) -> float:
    """Control value u_e = -(C B)^-1 C A x holding the state on the
    switching surface during ideal sliding."""
    ss = state_space(params)
    cb = float(ss.C @ ss.B)
    return float(-(ss.C @ ss.A @ x.vector()) / cb)


def _default_scan_step(roots: RootConfig) -> float:
    """Scan step resolving the fastest decay and, for complex pairs, at
    least 50 points per oscillation period."""
    if isinstance(roots, RealRoots):
        return 0.05 / max(roots.rates())
    fastest = max(roots.lambda1, roots.delta * roots.omega0)
    return min(0.05 / fastest, 2.0 * math.pi / (50.0 * roots.omega0))


@dataclass(frozen=True)
class SlipEvent:
    """Outcome of scanning one slip phase."""

    kind: str  # "crossing" | "converged" | "horizon"
    t: float


def _bisect_crossing(sol: SlipSolution, lo: float, hi: float, sign: float) -> float:
    """First zero of x3 inside (lo, hi], given x3*sign >= 0 at lo and
    x3*sign <= 0 at hi.  Width shrinks below 1e-12*max(1, t)."""
    for _ in range(200):
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if float(sol.eval_many(np.asarray(mid))[2]) * sign > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _scan_slip(
    sol: SlipSolution,
    t_max: float,
    scan_step: float,
    attractor_x1: float | None,
    conv_radius: float,
) -> SlipEvent:
    """Walk the slip solution on a uniform grid looking for the first x3
    sign change (refined by bisection) or, if enabled, the first sample
    within ``conv_radius`` of the attractor."""
    sign = math.copysign(1.0, sol.forcing)
    armed = sol.initial.x3 != 0.0
    n_max = int(math.floor(t_max / scan_step)) + 1
    chunk = 16384
    prev_t = 0.0
    k0 = 1
    while k0 <= n_max:
        ks = np.arange(k0, min(k0 + chunk, n_max + 1))
        ts = np.minimum(ks * scan_step, t_max)
        X = sol.eval_many(ts)
        vals = X[:, 2] * sign
        if attractor_x1 is not None:
            dist2 = (X[:, 0] - attractor_x1) ** 2 + X[:, 1] ** 2 + X[:, 2] ** 2
            conv_hits = np.flatnonzero(dist2 < conv_radius * conv_radius)
            i_conv = int(conv_hits[0]) if conv_hits.size else None
        else:
            i_conv = None
        pos = vals > 0.0
        neg = vals < 0.0
        # a zero sample only counts once the solution has moved off the surface
        armed_after = np.logical_or.accumulate(pos) | armed
        crossed = neg | ((vals == 0.0) & armed_after)
        cross_hits = np.flatnonzero(crossed)
        i_cross = int(cross_hits[0]) if cross_hits.size else None

        if i_conv is not None and (i_cross is None or i_conv < i_cross):
            return SlipEvent("converged", float(ts[i_conv]))
        if i_cross is not None:
            lo = prev_t if i_cross == 0 else float(ts[i_cross - 1])
            return SlipEvent("crossing", _bisect_crossing(sol, lo, float(ts[i_cross]), sign))
        armed = bool(armed_after[-1])
        prev_t = float(ts[-1])
        if ts[-1] >= t_max:
            break
        k0 += chunk
    return SlipEvent("horizon", t_max)


def detect_slip_events(
    sol: SlipSolution, t_max: float, scan_step: float | None = None
) -> SlipEvent:
    """First zero crossing of x3 along ``sol`` within (0, t_max], or a
    horizon event if there is none.

    The crossing is located by sign-change scanning at ``scan_step``
    (derived from the roots when omitted) followed by bisection; the result
    is deterministic.  Raises if the solution starts on the surface with a
    vector field that does not move it off (such starts belong to the
    stiction handler, not to a slip phase).
    """
    if t_max <= 0.0:
        raise ValueError(f"t_max must be positive, got {t_max!r}")
    x0 = sol.initial
    if x0.x3 == 0.0:
        p = sol.params
        drive = p.b * x0.x2 + p.c * x0.x1
        slope = -(drive + sol.forcing)
        curvature = -p.c * x0.x2
        if slope * sol.forcing < 0.0 or (slope == 0.0 and curvature * sol.forcing < 0.0):
            raise ValueError(
                "slip solution starts on the surface but the field pushes against "
                "its relay branch; route this state to the stiction handler"
            )
        if slope == 0.0 and curvature == 0.0:
            raise ValueError(
                "slip solution starts at an equilibrium on the surface; "
                "route this state to the stiction handler"
            )
    step = scan_step if scan_step is not None else _default_scan_step(sol.roots)
    return _scan_slip(sol, t_max, step, None, 0.0)


@dataclass(frozen=True)
class PhaseSegment:
    """One slip or stick interval.  ``forcing`` is the frozen relay output
    during slip and 0 during stick; entry/exit states carry global time."""

    kind: SegmentKind
    forcing: float
    t_start: float
    t_end: float
    entry_state: State
    exit_state: State
    exit_event: ExitEvent

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


@dataclass(frozen=True)
class CycleMetrics:
    """Aggregate stick-slip bookkeeping for one trajectory.

    A stick-slip cycle is counted per stiction dwell.  ``stiction_durations``,
    ``exit_ball_radii`` (distance from the exit state to the upcoming
    attractor, the shrinking-sphere radius) and ``attractor_sides`` cover
    completed dwells only; ``entry_speeds`` lists |x2| at every dwell entry.
    """

    stick_slip_cycle_count: int
    stiction_durations: tuple[float, ...]
    exit_ball_radii: tuple[float, ...]
    entry_speeds: tuple[float, ...]
    attractor_sides: tuple[int, ...]
    terminal_attractor: str
    terminal_x1: float | None
    convergence_class: str


@dataclass(frozen=True)
class Trajectory:
    """Simulation result: contiguous phase segments plus fixed-grid samples.

    ``times`` is the uniform output grid; ``states`` the (N, 3) state
    samples; ``stick_mask`` flags samples inside stick phases and
    ``gamma_active`` holds the frozen relay output (0 while sticking).
    """

    params: SystemParams
    initial: State
    horizon: float
    output_step: float
    segments: tuple[PhaseSegment, ...]
    times: np.ndarray
    states: np.ndarray
    stick_mask: np.ndarray
    gamma_active: np.ndarray
    metrics: CycleMetrics


@dataclass(frozen=True)
class ConvergenceReport:
    """Classification of how a trajectory wound down.

    ``entry_regions`` labels every stiction entry: "same_side" when x2 kept
    its sign since the reference point (the previous stiction exit, or the
    run start), "overshoot" when it flipped, "initial" for a dwell starting
    at t=0.  ``terminal_region`` labels a converged run that never re-entered
    the stiction region after its last exit: "converged_same_side" or
    "converged_overshoot" (a relay switch after the last exit means the
    attractor flipped, i.e. the trajectory overshot to the other side).
    """

    convergence_class: str
    entry_regions: tuple[str, ...]
    terminal_region: str | None


class _SampleWriter:
    """Fills the fixed output grid segment by segment."""

    def __init__(self, horizon: float, output_step: float):
        n = int(math.floor(horizon / output_step + 1e-9)) + 1
        self.times = output_step * np.arange(n)
        self.states = np.empty((n, 3))
        self.stick_mask = np.zeros(n, dtype=bool)
        self.gamma_active = np.zeros(n)
        self.cursor = 0

    def _take(self, t_end: float, inclusive: bool) -> np.ndarray:
        hi = self.cursor
        n = len(self.times)
        eps = 1e-9 * max(1.0, abs(t_end))
        while hi < n and (self.times[hi] < t_end - eps or (inclusive and self.times[hi] <= t_end + eps)):
            hi += 1
        idx = np.arange(self.cursor, hi)
        self.cursor = hi
        return idx

    def emit_slip(self, t_start: float, t_end: float, sol: SlipSolution,
                  forcing: float, inclusive: bool) -> None:
        idx = self._take(t_end, inclusive)
        if idx.size:
            self.states[idx] = sol.eval_many(self.times[idx] - t_start)
            self.gamma_active[idx] = forcing
    def emit_stick(self, t_start: float, t_end: float, entry: State, inclusive: bool) -> None:
        idx = self._take(t_end, inclusive)
        if idx.size:
            dt = self.times[idx] - t_start
            self.states[idx, 0] = entry.x1 + entry.x2 * dt
            self.states[idx, 1] = entry.x2
            self.states[idx, 2] = 0.0
            self.stick_mask[idx] = True

    def trim(self) -> None:
        n = self.cursor
        self.times = self.times[:n]
        self.states = self.states[:n]
        self.stick_mask = self.stick_mask[:n]
        self.gamma_active = self.gamma_active[:n]


def simulate(
    params: SystemParams,
    initial: State,
    horizon: float,
    output_step: float = 1e-3,
    tolerances: EngineTolerances | None = None,
    allow_non_gas: bool = False,
) -> Trajectory:
    """Run the hybrid engine from ``initial`` (its t is taken as 0) until
    convergence or ``horizon``.

    At every zero of x3 the successor phase follows the sliding-mode test:
    strictly inside the stiction band the state sticks; on or beyond the
    boundary a slip starts with relay output -sign(b*x2 + c*x1)*gamma, the
    branch whose field actually carries x3 off the surface.  Boundary hits
    within the entry margin are snapped onto the exact boundary line first.
    Runs terminate early once a slip comes within
    ``convergence_factor * (last exit-ball radius)`` of its attractor
    (reported as a converged segment), or when a stick entry arrives with
    |x2| below the rest threshold (permanent rest: the whole segment
    x2 = x3 = 0, |c*x1| <= gamma is invariant, so interior rest points are
    reported as such rather than forced onto +/-gamma/c).

    Refuses parameter sets failing the a*b > c test unless
    ``allow_non_gas`` is set (non-stable runs may then hit the chattering
    guard or the horizon without converging).
    """
    if horizon <= 0.0:
        raise ValueError(f"horizon must be positive, got {horizon!r}")
    if output_step <= 0.0:
        raise ValueError(f"output_step must be positive, got {output_step!r}")
    if not gas_check(params) and not allow_non_gas:
        raise NotGloballyStableError(
            f"a*b = {params.a * params.b!r} does not exceed c = {params.c!r}; "
            "pass allow_non_gas=True to simulate anyway"
        )

    tol = tolerances or EngineTolerances()
    p = params
    roots = roots_from_params(p)
    h_scan = tol.scan_step if tol.scan_step is not None else _default_scan_step(roots)
    eps_entry = tol.stick_entry_margin * p.gamma
    rest_v = (
        tol.rest_velocity
        if tol.rest_velocity is not None
        else 1e-9 * max(1.0, p.gamma / p.b)
    )

    writer = _SampleWriter(horizon, output_step)
    segments: list[PhaseSegment] = []
    durations: list[float] = []
    radii: list[float] = []
    speeds: list[float] = []
    sides: list[int] = []
    switch_times: deque[float] = deque(maxlen=tol.max_relay_switches)

    t = 0.0
    x = State(t=0.0, x1=initial.x1, x2=initial.x2, x3=initial.x3)
    phi_ref: float | None = None
    terminal = ATTRACTOR_NONE
    terminal_x1: float | None = None

    while t < horizon:
        remaining = horizon - t
        if x.x3 == 0.0:
            drive = p.b * x.x2 + p.c * x.x1
            margin = p.gamma - abs(drive)
            inward = x.x2 * drive < 0.0
            if margin > eps_entry or (margin > -eps_entry and inward):
                # stiction dwell
                speeds.append(abs(x.x2))
                if abs(x.x2) <= rest_v:
                    end = State(t=horizon, x1=x.x1, x2=x.x2, x3=0.0)
                    writer.emit_stick(t, horizon, x, inclusive=True)
                    segments.append(PhaseSegment(
                        SegmentKind.STICK, 0.0, t, horizon, x, end, ExitEvent.CONVERGED))
                    terminal = ATTRACTOR_INTERIOR_REST
                    terminal_x1 = x.x1
                    break
                dwell, exit_state = stiction_exit(p, x, rest_velocity=0.0)
                if dwell >= remaining:
                    end = equivalent_dynamics_step(x, remaining)
                    writer.emit_stick(t, horizon, x, inclusive=True)
                    segments.append(PhaseSegment(
                        SegmentKind.STICK, 0.0, t, horizon, x, end,
                        ExitEvent.HORIZON_REACHED))
                    break
                writer.emit_stick(t, t + dwell, x, inclusive=False)
                segments.append(PhaseSegment(
                    SegmentKind.STICK, 0.0, t, t + dwell, x, exit_state,
                    ExitEvent.STICTION_EXIT))
                durations.append(dwell)
                side = 1 if exit_state.x2 > 0 else -1
                sides.append(side)
                phi_ref = math.hypot(exit_state.x1 - side * p.gamma / p.c, exit_state.x2)
                radii.append(phi_ref)
                t += dwell
                x = exit_state
                continue
            # boundary graze or genuinely outside: slip off the surface
            boundary_sign = math.copysign(1.0, drive)
            if abs(margin) <= eps_entry:
                x = State(t=x.t, x1=(boundary_sign * p.gamma - p.b * x.x2) / p.c,
                          x2=x.x2, x3=0.0)
            forcing = -boundary_sign * p.gamma
        else:
            forcing = math.copysign(p.gamma, x.x3)

        sol = build_slip_solution(p, roots, forcing, State(t=0.0, x1=x.x1, x2=x.x2, x3=x.x3))
        attractor = -forcing / p.c
        if phi_ref is None:
            phi_ref = math.sqrt((x.x1 - attractor) ** 2 + x.x2**2 + x.x3**2)
        event = _scan_slip(sol, remaining, h_scan, attractor,
                           tol.convergence_factor * phi_ref)

        if event.kind == "horizon":
            end_s = sol.eval(remaining)
            end = State(t=horizon, x1=end_s.x1, x2=end_s.x2, x3=end_s.x3)
            writer.emit_slip(t, horizon, sol, forcing, inclusive=True)
            segments.append(PhaseSegment(
                SegmentKind.SLIP, forcing, t, horizon, x, end,
                ExitEvent.HORIZON_REACHED))
            break
        if event.kind == "converged":
            s_end = sol.eval(event.t)
            end = State(t=t + event.t, x1=s_end.x1, x2=s_end.x2, x3=s_end.x3)
            writer.emit_slip(t, t + event.t, sol, forcing, inclusive=True)
            segments.append(PhaseSegment(
                SegmentKind.SLIP, forcing, t, t + event.t, x, end, ExitEvent.CONVERGED))
            terminal = ATTRACTOR_POSITIVE if attractor > 0 else ATTRACTOR_NEGATIVE
            terminal_x1 = attractor
            break

        # x3 zero crossing: stick or switch
        hit = sol.eval(event.t)
        landed = State(t=t + event.t, x1=hit.x1, x2=hit.x2, x3=0.0)
        drive = p.b * landed.x2 + p.c * landed.x1
        next_is_stick = (p.gamma - abs(drive) > eps_entry) or (
            p.gamma - abs(drive) > -eps_entry and landed.x2 * drive < 0.0
        )
        exit_event = ExitEvent.STICTION_ENTRY if next_is_stick else ExitEvent.RELAY_SWITCH
        writer.emit_slip(t, t + event.t, sol, forcing, inclusive=False)
        segments.append(PhaseSegment(
            SegmentKind.SLIP, forcing, t, t + event.t, x, landed, exit_event))
        if exit_event is ExitEvent.RELAY_SWITCH:
            switch_times.append(t + event.t)
            if (
                len(switch_times) == tol.max_relay_switches
                and switch_times[-1] - switch_times[0]
                < tol.switch_window_scans * h_scan
            ):
                raise SimulationAbort(
                    f"chattering guard: {tol.max_relay_switches} relay switches "
                    f"within {tol.switch_window_scans * h_scan:.3e} s; "
                    "check tolerance configuration",
                    diagnostic={"t": t + event.t, "state": landed,
                                "params": p, "n_switches": len(switch_times)},
                )
        t += event.t
        x = landed

    writer.trim()
    n_sticks = sum(1 for s in segments if s.kind is SegmentKind.STICK)
    if n_sticks == 0:
        conv_class = NO_STICKING
    elif terminal is ATTRACTOR_NONE:
        conv_class = PERSISTENT_STICK_SLIP
    else:
        conv_class = EXPONENTIAL_AFTER_K_CYCLES
    metrics = CycleMetrics(
        stick_slip_cycle_count=n_sticks,
        stiction_durations=tuple(durations),
        exit_ball_radii=tuple(radii),
        entry_speeds=tuple(speeds),
        attractor_sides=tuple(sides),
        terminal_attractor=terminal,
        terminal_x1=terminal_x1,
        convergence_class=conv_class,
    )
    return Trajectory(
        params=p,
        initial=x if not segments else segments[0].entry_state,
        horizon=horizon,
        output_step=output_step,
        segments=tuple(segments),
        times=writer.times,
        states=writer.states,
        stick_mask=writer.stick_mask,
        gamma_active=writer.gamma_active,
        metrics=metrics,
    )


def classify_convergence(traj: Trajectory, params: SystemParams) -> ConvergenceReport:
    """Label every stiction entry and the terminal behavior of ``traj``.

    The reference for the same-side/overshoot distinction is x2 at the
    previous stiction exit (or at the run start before any exit).
    """
    entry_labels: list[str] = []
    ref_x2 = traj.segments[0].entry_state.x2 if traj.segments else 0.0
    last_exit_idx = -1
    for i, seg in enumerate(traj.segments):
        if seg.kind is SegmentKind.STICK:
            if seg.t_start == 0.0:
                entry_labels.append("initial")
            else:
                flipped = seg.entry_state.x2 * ref_x2 < 0.0
                entry_labels.append("overshoot" if flipped else "same_side")
            if seg.exit_event is ExitEvent.STICTION_EXIT:
                ref_x2 = seg.exit_state.x2
                last_exit_idx = i

    terminal_region = None
    if traj.segments and traj.segments[-1].exit_event is ExitEvent.CONVERGED \
            and traj.segments[-1].kind is SegmentKind.SLIP:
        switched_after = any(
            seg.exit_event is ExitEvent.RELAY_SWITCH
            for seg in traj.segments[last_exit_idx + 1:]
        )
        terminal_region = "converged_overshoot" if switched_after else "converged_same_side"

    return ConvergenceReport(
        convergence_class=traj.metrics.convergence_class,
        entry_regions=tuple(entry_labels),
        terminal_region=terminal_region,
    )
