"""Global-stability certification and limit-cycle non-existence checks.

Three independent certificates are produced for a parameter set:

* the Routh-Hurwitz inequality ``a*b > c`` (:func:`gas_check`),
* an explicit solution of the Lyapunov equation P A + A' P = -I
  (:func:`solve_lyapunov_closed_form`), positive definite exactly when the
  loop is globally asymptotically stable,
* the first-harmonic balance of the relay loop (:func:`harmonic_balance`),
  whose candidate amplitude is negative (hence no periodic solution) exactly
  when ``a*b > c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sysmodel import SystemParams, solve_monic_cubic, state_space

__all__ = [
    "GasBoundaryError",
    "LyapunovCertificate",
    "HarmonicBalanceReport",
    "gas_check",
    "solve_lyapunov_closed_form",
    "steady_state_after_switch",
    "harmonic_balance",
]

# positive-definiteness threshold on the leading principal minors
_MINOR_THRESHOLD = 1e-12


class GasBoundaryError(ValueError):
    """Raised where the closed-form Lyapunov solution is singular (a*b = c)."""


def gas_check(params: SystemParams) -> bool:
    """Routh-Hurwitz test for the closed loop: stable iff a*b > c (strict)."""
    return params.a * params.b > params.c


@dataclass(frozen=True)
class LyapunovCertificate:
    """Explicit Lyapunov matrix together with its quality measures.

    ``residual_norm`` is the Frobenius norm of P A + A' P + I and should sit
    at rounding level; ``min_eigenvalue`` is computed from the characteristic
    cubic of the symmetric P (deterministic, no iterative eigensolver).
    """

    P: np.ndarray
    residual_norm: float
    min_eigenvalue: float

    @property
    def is_positive_definite(self) -> bool:
        """Leading-principal-minor test with a fixed 1e-12 threshold."""
        p = self.P
        m1 = p[0, 0]
        m2 = p[0, 0] * p[1, 1] - p[0, 1] ** 2
        m3 = float(np.linalg.det(p))
        return min(m1, m2, m3) > _MINOR_THRESHOLD


def _symmetric_min_eigenvalue(p: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric 3x3 matrix via its characteristic
    cubic (all roots real)."""
    tr = p[0, 0] + p[1, 1] + p[2, 2]
    m2 = (
        p[0, 0] * p[1, 1]
        - p[0, 1] ** 2
        + p[0, 0] * p[2, 2]
        - p[0, 2] ** 2
        + p[1, 1] * p[2, 2]
        - p[1, 2] ** 2
    )
    det = float(np.linalg.det(p))
    # mu^3 - tr*mu^2 + m2*mu - det = 0
    roots = solve_monic_cubic(-tr, m2, -det)
    return min(r.real for r in roots)


def solve_lyapunov_closed_form(params: SystemParams) -> LyapunovCertificate:
    """Unique symmetric solution of P A + A' P = -I for the companion A.

    The six entries are rational functions of (a, b, c); every
    cross-coupling entry carries the factor 1/(2c(c - ab)), so the solution
    is singular exactly on the stability boundary a*b = c.

    Raises
    ------
    GasBoundaryError
        If ``a*b == c`` (no unique solution; the loop sits on the stability
        boundary).  ``c == 0`` is excluded already by ``SystemParams``.
    """
    a, b, c = params.a, params.b, params.c
    den = 2.0 * c * (c - a * b)
    if den == 0.0:
        raise GasBoundaryError(
            f"Lyapunov solution is singular at a*b == c (a*b={a * b!r}, c={c!r})"
        )
    p11 = -(c * (a * a + a * c - b + c * c) + a * b * b) / den
    p12 = -(a * a * b + c * c * (b + 1.0)) / den
    p13 = 1.0 / (2.0 * c)
    p22 = -(a * (a * a + a * c + c * c) + c * (b * b + b + 1.0)) / den
    p23 = -(a * (a + c) + c * c) / den
    p33 = -(a + c * (b + 1.0)) / den
    P = np.array([[p11, p12, p13], [p12, p22, p23], [p13, p23, p33]])

    A = state_space(params).A
    residual = P @ A + A.T @ P + np.eye(3)
    return LyapunovCertificate(
        P=P,
        residual_norm=float(np.linalg.norm(residual, "fro")),
        min_eigenvalue=_symmetric_min_eigenvalue(P),
    )


def steady_state_after_switch(params: SystemParams, switch_sign: int) -> tuple[float, float]:
    """Final values of (x1, x2) after a relay switch of the given sign.

    At a switch the forcing seen by the linear subsystem steps by
    ``2*gamma*switch_sign``; the final-value theorem then gives
    x1 -> switch_sign * 2*gamma/c and x2 -> 0.  Meaningful for globally
    asymptotically stable parameters (a*b > c).
    """
    if switch_sign not in (1, -1):
        raise ValueError(f"switch_sign must be +1 or -1, got {switch_sign!r}")
    return (switch_sign * 2.0 * params.gamma / params.c, 0.0)


@dataclass(frozen=True)
class HarmonicBalanceReport:
    """Outcome of the first-harmonic balance of the relay loop.

    ``candidate_omega`` and ``candidate_amplitude`` solve the balance
    equation formally; a periodic solution is only predicted when the
    amplitude comes out positive.
    """

    candidate_omega: float
    candidate_amplitude: float
    limit_cycle_predicted: bool


def harmonic_balance(params: SystemParams) -> HarmonicBalanceReport:
    """Solve the relay harmonic balance analytically.

    With the relay's first-harmonic gain 4*gamma/(pi*A), balance against the
    loop frequency response requires the imaginary part to vanish, forcing
    omega^2 = b, and the real part then yields

        A = 4*gamma*b / (pi*(c - a*b)).

    A is positive (a genuine amplitude, periodic solution predicted) exactly
    when c > a*b; for stable parameter sets it is negative and no limit
    cycle exists.
    """
    a, b, c = params.a, params.b, params.c
    omega = math.sqrt(b)
    den = math.pi * (c - a * b)
    amplitude = math.inf if den == 0.0 else 4.0 * params.gamma * b / den
    return HarmonicBalanceReport(
        candidate_omega=omega,
        candidate_amplitude=amplitude,
        limit_cycle_predicted=amplitude > 0.0,
    )
