"""System definition, eigenstructure conversions, and shared state types.

The plant under study is the third-order integral-feedback loop

    y''' + a*y'' + b*y' + c*y = -gamma * sign(y''),      a, b, c, gamma > 0,

written in state coordinates x = (x1, x2, x3) = (y, y', y'').  Everything in
this package standardizes on *positive decay rates*: a stable characteristic
root at s = -lam is stored as the decay rate lam > 0, so solution modes read
exp(-lam*t).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DISTINCTNESS_RTOL",
    "SystemParams",
    "RealRoots",
    "ComplexRoots",
    "RootConfig",
    "State",
    "StateSpace",
    "params_from_real_roots",
    "params_from_complex_roots",
    "roots_from_params",
    "state_space",
    "solve_monic_cubic",
]

# Two real decay rates closer than this (relative) gap are treated as a
# confluent pair: the explicit-solution coefficients divide by their
# difference, and the damping-ratio-one branch is numerically safer below it.
DISTINCTNESS_RTOL = 1e-7


def _require_positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0.0):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class SystemParams:
    """Coefficients of the closed loop plus the relay gain.

    ``a``, ``b``, ``c`` are the characteristic-polynomial coefficients
    (units 1/s, 1/s^2, 1/s^3); ``gamma`` is the magnitude of the relay
    forcing acting on the x3 equation.
    """

    a: float
    b: float
    c: float
    gamma: float

    def __post_init__(self) -> None:
        for name in ("a", "b", "c", "gamma"):
            _require_positive(name, getattr(self, name))


@dataclass(frozen=True)
class RealRoots:
    """Three real decay rates; the characteristic roots are -lambda_i.

    Valid configurations have pairwise-distinct positive rates, enforced by
    :func:`params_from_real_roots` and by the slip-solution builder (the
    explicit solution divides by the pairwise differences).  The dataclass
    itself stays permissive so :func:`roots_from_params` can report the
    eigenstructure of non-Hurwitz polynomials too.
    """

    lambda1: float
    lambda2: float
    lambda3: float

    def rates(self) -> tuple[float, float, float]:
        return (self.lambda1, self.lambda2, self.lambda3)

    def validate(self) -> None:
        lams = self.rates()
        for i, lam in enumerate(lams, start=1):
            _require_positive(f"lambda{i}", lam)
        for i in range(3):
            for j in range(i + 1, 3):
                gap = abs(lams[i] - lams[j])
                scale = max(1.0, abs(lams[i]), abs(lams[j]))
                if gap <= DISTINCTNESS_RTOL * scale:
                    raise ValueError(
                        f"decay rates lambda{i + 1}={lams[i]!r} and "
                        f"lambda{j + 1}={lams[j]!r} are not distinct "
                        f"(gap {gap:.3e} <= {DISTINCTNESS_RTOL:.0e}*{scale:g})"
                    )


@dataclass(frozen=True)
class ComplexRoots:
    """One real decay rate plus a conjugate-complex pair.

    The pair sits at -delta*omega0 +/- 1j*omega0*sqrt(1 - delta**2); delta = 1
    covers the repeated-real-root limit.  Like :class:`RealRoots`, strict
    validation happens at the conversion functions.
    """

    lambda1: float
    omega0: float
    delta: float

    def validate(self) -> None:
        _require_positive("lambda1", self.lambda1)
        _require_positive("omega0", self.omega0)
        if not (math.isfinite(self.delta) and 0.0 < self.delta <= 1.0):
            raise ValueError(f"delta must lie in (0, 1], got {self.delta!r}")


RootConfig = RealRoots | ComplexRoots


@dataclass(frozen=True)
class State:
    """One point of a trajectory: time plus (x1, x2, x3)."""

    t: float
    x1: float
    x2: float
    x3: float

    def __post_init__(self) -> None:
        for name in ("t", "x1", "x2", "x3"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"State.{name} must be finite, got {getattr(self, name)!r}")

    def vector(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3], dtype=float)


@dataclass(frozen=True)
class StateSpace:
    """Companion-form realization: A is 3x3, B and C are 3-vectors.

    A = [[0, 1, 0], [0, 0, 1], [-c, -b, -a]], B = (0, 0, gamma),
    C = (0, 0, 1), so C @ B = gamma > 0.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray


def state_space(params: SystemParams) -> StateSpace:
    """Build the companion-form (A, B, C) triple for ``params``."""
    A = np.array(
        [
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [-params.c, -params.b, -params.a],
        ]
    )
    B = np.array([0.0, 0.0, params.gamma])
    C = np.array([0.0, 0.0, 1.0])
    return StateSpace(A=A, B=B, C=C)


def params_from_real_roots(roots: RealRoots, gamma: float) -> SystemParams:
    """Coefficients from three distinct real decay rates.

    a, b, c are the elementary symmetric polynomials of the rates, i.e. the
    expansion of (s + lam1)(s + lam2)(s + lam3).
    """
    roots.validate()
    _require_positive("gamma", gamma)
    l1, l2, l3 = roots.rates()
    return SystemParams(
        a=l1 + l2 + l3,
        b=l2 * l3 + l1 * l2 + l1 * l3,
        c=l1 * l2 * l3,
        gamma=gamma,
    )


def params_from_complex_roots(roots: ComplexRoots, gamma: float) -> SystemParams:
    """Coefficients from a real decay rate plus a conjugate-complex pair."""
    roots.validate()
    _require_positive("gamma", gamma)
    l1, w0, d = roots.lambda1, roots.omega0, roots.delta
    return SystemParams(
        a=2.0 * d * w0 + l1,
        b=2.0 * d * w0 * l1 + w0 * w0,
        c=l1 * w0 * w0,
        gamma=gamma,
    )


def solve_monic_cubic(a: float, b: float, c: float) -> tuple[complex, complex, complex]:
    """Roots of s^3 + a*s^2 + b*s + c via the trigonometric/Cardano closed
    form, each polished with one Newton step.

    Deterministic and dependency-free; conjugate pairs are returned exactly
    conjugate.  Root order: the lone real root (or the three reals sorted
    ascending) first, then the pair with positive imaginary part second.
    """
    # depressed cubic t^3 + p*t + q, s = t - a/3
    shift = a / 3.0
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c

    def _polish_real(s: float) -> float:
        f = ((s + a) * s + b) * s + c
        df = (3.0 * s + 2.0 * a) * s + b
        if df != 0.0 and math.isfinite(f / df):
            s2 = s - f / df
            f2 = ((s2 + a) * s2 + b) * s2 + c
            if abs(f2) <= abs(f):
                return s2
        return s

    def _polish_complex(s: complex) -> complex:
        f = ((s + a) * s + b) * s + c
        df = (3.0 * s + 2.0 * a) * s + b
        if df != 0 and cmath.isfinite(f / df):
            s2 = s - f / df
            f2 = ((s2 + a) * s2 + b) * s2 + c
            if abs(f2) <= abs(f):
                return s2
        return s

    disc = -4.0 * p**3 - 27.0 * q * q
    if disc > 0.0:
        # three distinct real roots (p < 0 is implied)
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)  # = 3q/(2p) * sqrt(-3/p)
        arg = min(1.0, max(-1.0, arg))
        theta = math.acos(arg)
        ts = [m * math.cos((theta - 2.0 * math.pi * k) / 3.0) for k in range(3)]
        roots = sorted(_polish_real(t - shift) for t in ts)
        return (complex(roots[0]), complex(roots[1]), complex(roots[2]))

    # one real root; Cardano with cancellation-safe branch
    half_q = q / 2.0
    inner = math.sqrt(max(half_q * half_q + p**3 / 27.0, 0.0))
    u3 = -half_q - inner if half_q > 0 else -half_q + inner
    if u3 == 0.0:
        t1 = 0.0 if q == 0.0 else -math.copysign(abs(q) ** (1.0 / 3.0), q)
    else:
        u = math.copysign(abs(u3) ** (1.0 / 3.0), u3)
        t1 = u - p / (3.0 * u)
    s1 = _polish_real(t1 - shift)
    # deflate: s^3 + a s^2 + b s + c = (s - s1)(s^2 + beta*s + g2)
    beta = a + s1
    g2 = b + beta * s1
    disc2 = beta * beta - 4.0 * g2
    if disc2 >= 0.0:
        r = math.sqrt(disc2)
        s2 = _polish_real((-beta - r) / 2.0)
        s3 = _polish_real((-beta + r) / 2.0)
        lo, hi = sorted((s2, s3))
        ordered = sorted((s1, lo, hi))
        return (complex(ordered[0]), complex(ordered[1]), complex(ordered[2]))
    pair = _polish_complex(complex(-beta / 2.0, math.sqrt(-disc2) / 2.0))
    return (complex(s1), pair, pair.conjugate())


def roots_from_params(params: SystemParams) -> RootConfig:
    """Classify the eigenstructure of s^3 + a s^2 + b s + c.

    Returns decay rates (negated roots).  Near-repeated real pairs are
    reported through the complex branch with delta clamped to 1, since the
    real-branch solution formulas are singular there.  Non-Hurwitz
    polynomials are still classified (negative rates / delta out of range);
    rejecting them is the caller's business.
    """
    r1, r2, r3 = solve_monic_cubic(params.a, params.b, params.c)
    if r2.imag != 0.0:
        lam1 = -r1.real
        w0 = abs(r2)
        delta = -r2.real / w0 if w0 > 0 else 1.0
        return ComplexRoots(lambda1=lam1, omega0=w0, delta=min(delta, 1.0))

    lams = sorted((-r1.real, -r2.real, -r3.real))
    gaps = [
        (abs(lams[0] - lams[1]), (0, 1)),
        (abs(lams[0] - lams[2]), (0, 2)),
        (abs(lams[1] - lams[2]), (1, 2)),
    ]
    min_gap, (i, j) = min(gaps, key=lambda g: g[0])
    scale = max(1.0, abs(lams[i]), abs(lams[j]))
    if min_gap <= DISTINCTNESS_RTOL * scale:
        # confluent pair: hand it to the damping-ratio branch
        k = ({0, 1, 2} - {i, j}).pop()
        pair = (lams[i], lams[j])
        w0 = math.sqrt(abs(pair[0] * pair[1]))
        if w0 == 0.0:
            w0 = max(abs(pair[0]), abs(pair[1]), np.finfo(float).tiny)
        delta = (pair[0] + pair[1]) / (2.0 * w0)
        return ComplexRoots(lambda1=lams[k], omega0=w0, delta=min(delta, 1.0))
    return RealRoots(lambda1=lams[0], lambda2=lams[1], lambda3=lams[2])
