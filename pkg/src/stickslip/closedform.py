"""Exact trajectories of one slip phase, plus a fixed-step reference integrator.

During a slip phase the relay output is frozen at a constant ``forcing``
value (+gamma or -gamma), so the motion obeys the linear nonhomogeneous ODE

    x3'(t) + a*x3(t) + b*x2(t) + c*x1(t) = -forcing,

whose explicit solution is a constant offset plus three exponential modes.
:class:`SlipSolution` stores the modes in a single complex representation
covering both eigenstructures; the conjugate-complex branch is assembled in
complex arithmetic with principal square roots and certified real before use.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .sysmodel import (
    ComplexRoots,
    RealRoots,
    RootConfig,
    State,
    SystemParams,
    params_from_complex_roots,
    params_from_real_roots,
    state_space,
)

__all__ = ["SlipSolution", "build_slip_solution", "reference_integrate"]

# relative agreement required between the supplied roots and parameters
_ROOTS_MATCH_RTOL = 1e-8

# evaluation times beyond this many reciprocal decay rates saturate
_TIME_CLAMP_FACTOR = 1e6

# |imaginary residue| allowed when certifying the assembled solution real
_REALNESS_TOL = 1e-9


@dataclass(frozen=True)
class SlipSolution:
    """Explicit solution x1(t) = offset + sum_m coeff[m]*exp(-decay[m]*t).

    ``decay`` entries have positive real part for stable parameters; the
    derivatives x2 = x1' and x3 = x1'' follow analytically from the same
    modes.  ``t`` is local time since the segment start; evaluation clamps
    at :attr:`saturation_time`.  ``delta_adjustment`` records the damping
    nudge applied when the complex pair was (near-)confluent.
    """

    params: SystemParams
    roots: RootConfig
    forcing: float
    initial: State
    offset: float
    decay: np.ndarray
    coeff: np.ndarray
    delta_adjustment: float = 0.0

    @property
    def saturation_time(self) -> float:
        return _TIME_CLAMP_FACTOR / float(np.min(self.decay.real))

    def eval_many(self, ts: np.ndarray) -> np.ndarray:
        """States at local times ``ts`` (any shape); returns (..., 3)."""
        ts = np.minimum(np.asarray(ts, dtype=float), self.saturation_time)
        modes = np.exp(-np.multiply.outer(ts, self.decay))
        d = self.decay
        k = self.coeff
        x1 = self.offset + (modes @ k).real
        x2 = (modes @ (-d * k)).real
        x3 = (modes @ (d * d * k)).real
        return np.stack([x1, x2, x3], axis=-1)

    def eval(self, t: float) -> State:
        """State at local time ``t >= 0``."""
        if t < 0.0:
            raise ValueError(f"local time must be nonnegative, got {t!r}")
        x1, x2, x3 = self.eval_many(np.asarray(t))
        return State(t=t, x1=float(x1), x2=float(x2), x3=float(x3))

    def jerk(self, t: float) -> float:
        """Analytic x3'(t) (third derivative of x1)."""
        t = min(t, self.saturation_time)
        d = self.decay
        return float((-(d**3) * self.coeff * np.exp(-d * t)).sum().real)

    def ode_residual(self, t: float) -> float:
        """x3' + a*x3 + b*x2 + c*x1 + forcing at local time t (should be ~0)."""
        p = self.params
        s = self.eval(max(t, 0.0))
        return self.jerk(t) + p.a * s.x3 + p.b * s.x2 + p.c * s.x1 + self.forcing


def _check_roots_match(params: SystemParams, roots: RootConfig) -> None:
    if isinstance(roots, RealRoots):
        rebuilt = params_from_real_roots(roots, params.gamma)
    else:
        rebuilt = params_from_complex_roots(roots, params.gamma)
    for name in ("a", "b", "c"):
        have, want = getattr(rebuilt, name), getattr(params, name)
        if abs(have - want) > _ROOTS_MATCH_RTOL * max(1.0, abs(want)):
            raise ValueError(
                f"roots do not reproduce params: {name}={have!r} vs {want!r}"
            )


def _real_branch(roots: RealRoots, forcing: float, C1: float, C2: float, C3: float):
    l1, l2, l3 = roots.rates()
    prod = l1 * l2 * l3
    k1 = (forcing + C3 * l1 + C2 * l1 * (l2 + l3) + C1 * prod) / (
        l1 * (l1 - l2) * (l1 - l3)
    )
    k2 = (forcing + C3 * l2 + C2 * l2 * (l1 + l3) + C1 * prod) / (
        l2 * (l1 - l2) * (l2 - l3)
    )
    k3 = (forcing + C3 * l3 + C2 * l3 * (l1 + l2) + C1 * prod) / (
        l3 * (l1 - l3) * (l2 - l3)
    )
    offset = -forcing / prod
    decay = np.array([l1, l2, l3], dtype=complex)
    coeff = np.array([k1, -k2, k3], dtype=complex)
    return offset, decay, coeff


def _complex_branch(roots: ComplexRoots, forcing: float, C1: float, C2: float, C3: float):
    l1, w0, d = roots.lambda1, roots.omega0, roots.delta
    # principal branches: sqrt(d^2-1) and sqrt(1-d)*sqrt(-d-1) agree for
    # d in (0, 1]; both equal 1j*sqrt(1-d^2)
    s = cmath.sqrt(complex(d * d - 1.0, 0.0))
    sa = cmath.sqrt(complex(1.0 - d, 0.0)) * cmath.sqrt(complex(-d - 1.0, 0.0))

    offset = -forcing / (l1 * w0 * w0)
    r1 = (C1 * l1 * w0 * w0 + 2.0 * C2 * d * l1 * w0 + forcing + C3 * l1) / (
        l1 * (l1 * l1 - 2.0 * d * l1 * w0 + w0 * w0)
    )
    k4 = (
        C3 * w0
        + d * forcing
        + forcing * s
        + C2 * l1 * w0
        + C2 * d * w0 * w0
        + C2 * w0 * w0 * s
        + C1 * l1 * w0 * w0 * (d + s)
    )
    k5 = (
        C3 * w0
        + d * forcing
        - forcing * s
        + C2 * l1 * w0
        + C2 * d * w0 * w0
        - C2 * w0 * w0 * s
        + C1 * l1 * w0 * w0 * (d - s)
    )
    t4 = k4 / (2.0 * w0 * w0 * sa * (l1 - d * w0 + w0 * s))
    t5 = k5 / (2.0 * w0 * w0 * sa * (d * w0 - l1 + w0 * s))
    decay = np.array([complex(l1), w0 * (d - s), w0 * (d + sa)], dtype=complex)
    coeff = np.array([complex(r1), t4, t5], dtype=complex)
    return offset, decay, coeff


def build_slip_solution(
    params: SystemParams,
    roots: RootConfig,
    forcing: float,
    initial: State,
) -> SlipSolution:
    """Assemble the explicit slip solution for constant relay output
    ``forcing`` (must be +/-gamma) from the state ``initial`` at local t=0.

    Real-root configurations must be pairwise distinct (the coefficients
    divide by the root gaps); a confluent complex pair (delta at or near 1)
    is evaluated with the damping ratio nudged down so the pair separates by
    about 1e-6*max(1, omega0), recorded in ``delta_adjustment``.
    """
    roots.validate()
    if abs(abs(forcing) - params.gamma) > 1e-12 * params.gamma:
        raise ValueError(
            f"forcing must be +/-gamma = +/-{params.gamma!r}, got {forcing!r}"
        )
    _check_roots_match(params, roots)

    C1, C2, C3 = initial.x1, initial.x2, initial.x3
    adjustment = 0.0
    if isinstance(roots, RealRoots):
        offset, decay, coeff = _real_branch(roots, forcing, C1, C2, C3)
    else:
        sep = 1e-6 * max(1.0, roots.omega0)
        if roots.omega0 * math.sqrt(max(0.0, 1.0 - roots.delta**2)) < sep:
            new_delta = math.sqrt(1.0 - (sep / roots.omega0) ** 2)
            adjustment = new_delta - roots.delta
            roots = ComplexRoots(roots.lambda1, roots.omega0, new_delta)
        offset, decay, coeff = _complex_branch(roots, forcing, C1, C2, C3)
        _certify_real(offset, decay, coeff, (C1, C2, C3))

    sol = SlipSolution(
        params=params,
        roots=roots,
        forcing=forcing,
        initial=State(t=0.0, x1=C1, x2=C2, x3=C3),
        offset=offset,
        decay=decay,
        coeff=coeff,
        delta_adjustment=adjustment,
    )
    return sol


def _certify_real(offset, decay, coeff, init) -> None:
    """Guard against branch-cut mistakes: the assembled x1(t) must be real."""
    horizon = 5.0 / float(np.min(decay.real))
    ts = np.linspace(0.0, horizon, 10)
    values = offset + np.exp(-np.multiply.outer(ts, decay)) @ coeff
    scale = max(1.0, abs(offset), *(abs(v) for v in init))
    worst = float(np.max(np.abs(values.imag)))
    if worst > _REALNESS_TOL * scale:
        raise ArithmeticError(
            f"complex-branch solution failed realness check: |Im| up to {worst:.3e}"
        )


def reference_integrate(
    params: SystemParams,
    forcing: float,
    initial: State,
    t_end: float,
    step: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Classical 4th-order fixed-step integration of the constant-forcing
    slip dynamics; the independent cross-check for :class:`SlipSolution`.

    For the linear system x' = A x + u with constant u the four RK4 stages
    collapse to one affine map per step,

        x+ = (I + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24) x
             + h*(I + hA/2 + (hA)^2/6 + (hA)^3/24) u,

    which is precomputed once and iterated; truncation error is the usual
    O(h^4).  Returns the time grid (n+1,) and states (n+1, 3), with
    ``t_end`` rounded to a whole number of steps.
    """
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step!r}")
    n = max(1, int(round(t_end / step)))
    A = state_space(params).A
    hA = step * A
    hA2 = hA @ hA
    hA3 = hA2 @ hA
    M = np.eye(3) + hA + hA2 / 2.0 + hA3 / 6.0 + hA2 @ hA2 / 24.0
    S = step * (np.eye(3) + hA / 2.0 + hA2 / 6.0 + hA3 / 24.0)
    v = S @ np.array([0.0, 0.0, -forcing])

    out = np.empty((n + 1, 3))
    x1, x2, x3 = initial.x1, initial.x2, initial.x3
    out[0] = (x1, x2, x3)
    (m11, m12, m13), (m21, m22, m23), (m31, m32, m33) = M
    v1, v2, v3 = v
    for k in range(1, n + 1):
        y1 = m11 * x1 + m12 * x2 + m13 * x3 + v1
        y2 = m21 * x1 + m22 * x2 + m23 * x3 + v2
        y3 = m31 * x1 + m32 * x2 + m33 * x3 + v3
        x1, x2, x3 = y1, y2, y3
        out[k] = (y1, y2, y3)
    return step * np.arange(n + 1), out
