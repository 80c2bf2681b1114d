"""Weierstrass elliptic functions on the lattice Z + Z*tau.

Evaluation goes through the first Jacobi theta function and its derivatives:
with q = exp(i*pi*tau) and u = pi*z,

    zeta(z) = eta1*z + pi * theta1'(u)/theta1(u),
    wp(z)   = -eta1 - pi^2 * d/du [theta1'/theta1](u),
    wp'(z)  = -pi^3 * d^2/du^2 [theta1'/theta1](u),

where eta1 = -(pi^2/3) * theta1'''(0)/theta1'(0).  The q-series converges
geometrically once the argument is reduced to the centered fundamental cell,
so a cutoff N with |q|^(N^2) below tolerance suffices.  Slowly converging
direct lattice sums are kept out of this module on purpose; they live in the
test suite as an independent oracle.

Conventions: periods (1, tau); half periods w_k/2 with w0=0, w1=1, w2=tau,
w3=1+tau; e_k = wp(w_k/2) for k=1,2,3; quasi-periods eta_k = 2*zeta(w_k/2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, InvalidTauError, PoleProximityError

__all__ = [
    "EllipticContext",
    "TorusPoint",
    "make_context",
    "wp",
    "wzeta",
    "invert_wp",
    "lattice_reduce",
    "canonical_representative",
    "half_periods",
    "torus_distance",
    "is_half_period",
]

_DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class TorusPoint:
    """A point z together with its real lattice coordinates, z = r + s*tau mod lattice."""

    z: complex
    r: float
    s: float

    def is_half_period(self, tol: float = 1e-9) -> bool:
        return (
            abs(2 * self.r - round(2 * self.r)) < tol
            and abs(2 * self.s - round(2 * self.s)) < tol
        )


@dataclass(frozen=True)
class EllipticContext:
    """Precomputed lattice data for one tau.

    Immutable after construction; every evaluator below is a pure function of
    (context, inputs), so contexts can be shared freely across threads.
    """

    tau: complex
    nome_q: complex
    eta1: complex
    eta2: complex
    e1: complex
    e2: complex
    e3: complex
    g2: complex
    g3: complex
    series_cutoff: int
    tol: float
    pole_clearance: float
    # theta-series coefficients: theta1(u) = sum coef[n] * sin(k[n]*u)
    _coef: np.ndarray = field(repr=False)
    _k: np.ndarray = field(repr=False)


def _theta1_block(u, coef, k):
    """theta1 and its first three u-derivatives, vectorized over u."""
    u = np.asarray(u)
    ku = np.multiply.outer(u, k)
    s, c = np.sin(ku), np.cos(ku)
    th0 = s @ coef
    th1 = c @ (coef * k)
    th2 = -(s @ (coef * k**2))
    th3 = -(c @ (coef * k**3))
    return th0, th1, th2, th3


def _centered(tau: complex, z):
    """Write z = z0 + m + n*tau with centered z0 (coords in [-1/2, 1/2))."""
    z = np.asarray(z, dtype=complex)
    s = np.imag(z) / tau.imag
    r = np.real(z) - s * tau.real
    m = np.floor(r + 0.5)
    n = np.floor(s + 0.5)
    return z - m - n * tau, m, n


def make_context(tau: complex, tol: float = _DEFAULT_TOL) -> EllipticContext:
    """Build an :class:`EllipticContext` for the lattice Z + Z*tau.

    Raises :class:`InvalidTauError` unless Im(tau) > 0.  The series cutoff is
    the smallest N with |q|^(N^2) < tol/10.
    """
    tau = complex(tau)
    if not tau.imag > 0:
        raise InvalidTauError(f"Im(tau) must be positive, got tau={tau}")
    if not tol > 0:
        raise ValueError("tol must be positive")

    q = np.exp(1j * np.pi * tau)
    qa = abs(q)
    cutoff = 4
    while qa ** (cutoff * cutoff) > tol / 10:
        cutoff += 1
        if cutoff > 400:
            raise InvalidTauError(
                f"theta series would need more than 400 terms (Im tau = {tau.imag})"
            )

    n = np.arange(cutoff + 1)
    coef = 2.0 * (-1.0) ** n * q ** ((n + 0.5) ** 2)
    k = (2 * n + 1).astype(float)

    _, th1_0, _, th3_0 = _theta1_block(np.array([0.0]), coef, k)
    eta1 = complex(-(np.pi**2 / 3) * th3_0[0] / th1_0[0])

    def raw_wp(z):
        z0, _, _ = _centered(tau, z)
        t0, t1, t2, _ = _theta1_block(np.pi * z0, coef, k)
        L = t1 / t0
        return -eta1 - np.pi**2 * (t2 / t0 - L * L)

    def raw_zeta(z):
        z0, m, nn = _centered(tau, z)
        t0, t1, _, _ = _theta1_block(np.pi * z0, coef, k)
        return eta1 * z0 + np.pi * t1 / t0 + m * eta1, nn

    e1 = complex(raw_wp(np.array([0.5]))[0])
    e2 = complex(raw_wp(np.array([tau / 2]))[0])
    e3 = complex(raw_wp(np.array([(1 + tau) / 2]))[0])

    # invariants from the weight-4 and weight-6 Eisenstein q-series; these
    # run in q^2, so they need their own tail-bound cutoff
    qt = q * q
    qta = abs(qt)
    ecut = 8
    while ecut**5 * qta**ecut > tol / 100 and ecut < 600:
        ecut += 1
    nn = np.arange(1, ecut + 1)
    qn = qt**nn
    g2 = complex((4 * np.pi**4 / 3) * (1 + 240 * np.sum(nn**3 * qn / (1 - qn))))
    g3 = complex((8 * np.pi**6 / 27) * (1 - 504 * np.sum(nn**5 * qn / (1 - qn))))

    # eta2 = 2*zeta(tau/2); the centered reduction already folds in eta1 shifts,
    # leaving the single eta2 quasi-period to solve for.
    val, n_shift = raw_zeta(np.array([tau / 2]))
    shift = float(n_shift[0])
    if abs(shift) > 0.5:
        eta2 = complex(val[0] / (0.5 - shift))
    else:
        eta2 = complex(2 * val[0])

    check_tol = max(100 * tol, 1e-11)
    scale = max(1.0, abs(e1), abs(e2), abs(e3))
    if abs(e1 + e2 + e3) > check_tol * scale:
        raise InvalidTauError(f"branch values do not sum to zero at tau={tau}")
    if abs(eta1 * tau - eta2 - 2j * np.pi) > check_tol * max(1.0, abs(eta1 * tau)):
        raise InvalidTauError(f"Legendre relation violated at tau={tau}")
    if abs(g2 + 4 * (e1 * e2 + e2 * e3 + e3 * e1)) > check_tol * max(1.0, abs(g2)):
        raise InvalidTauError(f"g2 inconsistent with branch values at tau={tau}")
    if abs(g3 - 4 * e1 * e2 * e3) > check_tol * max(1.0, abs(g3)):
        raise InvalidTauError(f"g3 inconsistent with branch values at tau={tau}")

    return EllipticContext(
        tau=tau,
        nome_q=complex(q),
        eta1=eta1,
        eta2=eta2,
        e1=e1,
        e2=e2,
        e3=e3,
        g2=g2,
        g3=g3,
        series_cutoff=cutoff,
        tol=tol,
        pole_clearance=1e-6 * min(1.0, tau.imag),
        _coef=coef,
        _k=k,
    )


def half_periods(ctx: EllipticContext) -> tuple[complex, complex, complex, complex]:
    """The four half periods w_k/2, k = 0..3."""
    return (0.0 + 0.0j, 0.5 + 0.0j, ctx.tau / 2, (1 + ctx.tau) / 2)


def _check_pole(ctx: EllipticContext, z0, clearance=None):
    clearance = ctx.pole_clearance if clearance is None else clearance
    d = np.abs(z0)
    if np.any(d < clearance):
        raise PoleProximityError(
            f"evaluation within {clearance:g} of a lattice point (min dist {d.min():g})"
        )


def wp(ctx: EllipticContext, z):
    """Weierstrass wp and wp' at z.  Accepts scalars or arrays.

    Scalar input returns a pair of complex numbers; array input a pair of
    arrays.  Raises :class:`PoleProximityError` within the pole clearance of
    a lattice point.
    """
    scalar = np.isscalar(z) or np.asarray(z).ndim == 0
    z0, _, _ = _centered(ctx.tau, np.atleast_1d(np.asarray(z, dtype=complex)))
    _check_pole(ctx, z0)
    t0, t1, t2, t3 = _theta1_block(np.pi * z0, ctx._coef, ctx._k)
    L = t1 / t0
    d1 = t2 / t0 - L * L
    d2 = t3 / t0 - 3 * t1 * t2 / (t0 * t0) + 2 * L**3
    w = -ctx.eta1 - np.pi**2 * d1
    wprime = -(np.pi**3) * d2
    if scalar:
        return complex(w[0]), complex(wprime[0])
    return w, wprime


def wzeta(ctx: EllipticContext, z):
    """Weierstrass zeta at z (the genuine meromorphic function on C, not a
    torus reduction: quasi-period shifts are restored after reduction)."""
    scalar = np.isscalar(z) or np.asarray(z).ndim == 0
    z0, m, n = _centered(ctx.tau, np.atleast_1d(np.asarray(z, dtype=complex)))
    _check_pole(ctx, z0)
    t0, t1, _, _ = _theta1_block(np.pi * z0, ctx._coef, ctx._k)
    val = ctx.eta1 * z0 + np.pi * t1 / t0 + m * ctx.eta1 + n * ctx.eta2
    if scalar:
        return complex(val[0])
    return val


def lattice_reduce(ctx: EllipticContext, z: complex) -> TorusPoint:
    """Reduce z modulo the lattice; returns the point with r, s in [0, 1)."""
    z = complex(z)
    s = z.imag / ctx.tau.imag
    r = z.real - s * ctx.tau.real
    r %= 1.0
    s %= 1.0
    # float modulo of a tiny negative can round to 1.0 exactly
    if r >= 1.0:
        r = 0.0
    if s >= 1.0:
        s = 0.0
    return TorusPoint(z=z, r=r, s=s)


def torus_distance(ctx: EllipticContext, a: complex, b: complex) -> float:
    """Distance between a and b as points of the torus (min over lattice shifts)."""
    d, _, _ = _centered(ctx.tau, np.atleast_1d(complex(a) - complex(b)))
    return float(abs(d[0]))


def is_half_period(ctx: EllipticContext, z: complex, tol: float = 1e-9) -> bool:
    return lattice_reduce(ctx, z).is_half_period(tol)


def canonical_representative(ctx: EllipticContext, z: complex) -> TorusPoint:
    """Deterministic representative of the pair {z, -z} modulo the lattice.

    Of the two reduced coordinate pairs, keep the one with s < 1/2; ties go to
    r < 1/2, then to the representative of smaller modulus.  Ties are decided
    with a small snap tolerance so half periods come out exactly.
    """
    p1 = lattice_reduce(ctx, z)
    p2 = lattice_reduce(ctx, -z)
    eps = 1e-9
    z1 = p1.r + p1.s * ctx.tau
    z2 = p2.r + p2.s * ctx.tau
    if abs(p1.s - p2.s) > eps:
        win = p1 if p1.s < p2.s else p2
    elif abs(p1.r - p2.r) > eps:
        win = p1 if p1.r < p2.r else p2
    else:
        win = p1 if abs(z1) <= abs(z2) else p2
    return TorusPoint(z=win.r + win.s * ctx.tau, r=win.r, s=win.s)


_INVERT_SEEDS = [
    (0.25, 0.25), (0.30, 0.60), (0.60, 0.30), (0.70, 0.70), (0.15, 0.40),
    (0.45, 0.12), (0.80, 0.45), (0.37, 0.29), (0.50, 0.25), (0.25, 0.50),
    (0.10, 0.10), (0.42, 0.83), (0.88, 0.17), (0.63, 0.52), (0.05, 0.72),
]


def invert_wp(ctx: EllipticContext, c: complex, max_iter: int = 80) -> TorusPoint:
    """Solve wp(z) = c; returns the canonical representative of the pair +-z.

    Newton iteration from a fixed seed list, polished to machine precision
    (callers difference the result across tau stencils, so stopping at the
    context tolerance would leave amplifiable noise).  Near branch values the
    root is double and convergence degrades to linear, which the generous
    iteration cap absorbs.  Raises :class:`ConvergenceError` if every seed
    fails to reach the context tolerance.
    """
    c = complex(c)
    scale = max(1.0, abs(c))
    polish = 1e-14 * scale
    accept = ctx.tol * scale
    for r0, s0 in _INVERT_SEEDS:
        z = r0 + s0 * ctx.tau
        best_z, best_f = None, np.inf
        for _ in range(max_iter):
            try:
                w, wprime = wp(ctx, z)
            except PoleProximityError:
                z += 0.0173 + 0.0129j
                continue
            f = abs(w - c)
            if f < best_f:
                best_z, best_f = z, f
            if f < polish or wprime == 0:
                break
            step = (w - c) / wprime
            if abs(step) > 0.4:
                step *= 0.4 / abs(step)
            z = z - step
        if best_f < accept:
            return canonical_representative(ctx, best_z)
    raise ConvergenceError(f"wp inversion failed for c={c}")
