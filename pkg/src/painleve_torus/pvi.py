"""Hitchin's closed-form solution of the elliptic Painleve VI equation, its
(1,0,0,0) Okamoto lift, the equivalent Hamiltonian flow, and the residual
check that ties them to the elliptic form

    p''(tau) = (-1/(4 pi^2)) * sum_k alpha_k wp'(p + w_k/2; tau),
    alpha_k = (n_k + 1/2)^2 / 2.

The closed forms land in the wp-plane,

    wp(p)  = wp(a) + wp'(a) / (2 Z),                      n = (0,0,0,0)
    wp(p)  = wp + (3 wp' Z^2 + (12 wp^2 - g2) Z + 3 wp wp') /
                  (2 (Z^3 - 3 wp Z - wp')),               n = (1,0,0,0)

with a = r + s*tau and Z = zeta(a) - r*eta1 - s*eta2; the point p itself is
recovered by wp-inversion, so it is only defined up to sign and lattice
shifts.  Branch tracking across tau-stencils picks the representative nearest
the previous one.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .elliptic import (
    EllipticContext,
    TorusPoint,
    half_periods,
    invert_wp,
    make_context,
    torus_distance,
    wp,
    wzeta,
)
from .errors import (
    BranchJumpError,
    DegenerateParameterError,
    HalfPeriodCollisionError,
    HalfPeriodError,
    InvalidTauError,
    UnsupportedIndexError,
)
from .odeint import integrate

__all__ = [
    "PVIIndex",
    "INDEX_ZERO",
    "INDEX_1000",
    "HamiltonianState",
    "z_rs",
    "hitchin_p",
    "okamoto_p_1000",
    "p_solution",
    "nearest_representative",
    "epvi_residual",
    "a_from_hitchin",
    "hitchin_state",
    "hamiltonian_flow",
]


@dataclass(frozen=True)
class PVIIndex:
    """Non-negative integer quadruple n = (n0, n1, n2, n3)."""

    n0: int
    n1: int
    n2: int
    n3: int

    def __post_init__(self):
        for v in self.nk:
            if not (isinstance(v, int) and v >= 0):
                raise ValueError(f"index entries must be non-negative integers, got {self}")

    @property
    def nk(self) -> tuple[int, int, int, int]:
        return (self.n0, self.n1, self.n2, self.n3)

    @property
    def alphas(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        """alpha_k = (n_k + 1/2)^2 / 2, exact rationals."""
        return tuple(Fraction((2 * n + 1) ** 2, 8) for n in self.nk)

    @property
    def is_zero(self) -> bool:
        return self.nk == (0, 0, 0, 0)

    @classmethod
    def parse(cls, text: str) -> "PVIIndex":
        """Accepts '0', '1000', or comma forms like '1,0,0,0'."""
        text = text.strip()
        if "," in text:
            parts = [int(t) for t in text.split(",")]
        elif text == "0":
            parts = [0, 0, 0, 0]
        elif len(text) == 4 and text.isdigit():
            parts = [int(ch) for ch in text]
        else:
            raise ValueError(f"cannot parse index from {text!r}")
        if len(parts) != 4:
            raise ValueError(f"index needs 4 entries, got {parts}")
        return cls(*parts)


INDEX_ZERO = PVIIndex(0, 0, 0, 0)
INDEX_1000 = PVIIndex(1, 0, 0, 0)


@dataclass(frozen=True)
class HamiltonianState:
    """A point of the isomonodromic (p, A) flow; B is the derived apparent-
    singularity constant, recomputed from (p, A, tau) whenever stored."""

    tau: complex
    p: complex
    A: complex
    B: complex


def _check_half_lattice(r: complex, s: complex, tol: float = 1e-9):
    def on_half_grid(x):
        return abs(x.imag) < tol and abs(2 * x.real - round(2 * x.real)) < tol

    if on_half_grid(complex(r)) and on_half_grid(complex(s)):
        raise HalfPeriodError(f"(r, s)=({r}, {s}) lies on the half-integer grid")


def z_rs(ctx: EllipticContext, r: complex, s: complex) -> complex:
    """Z_{r,s} = zeta(r + s*tau) - r*eta1 - s*eta2 (r, s may be complex)."""
    _check_half_lattice(r, s)
    return complex(wzeta(ctx, r + s * ctx.tau) - r * ctx.eta1 - s * ctx.eta2)


def hitchin_p(
    ctx: EllipticContext, r: complex, s: complex, degenerate_tol: float = 1e-8
) -> tuple[TorusPoint, complex]:
    """The n = 0 solution: returns (p, wp(p)) with p canonical up to sign.

    Raises :class:`DegenerateParameterError` when Z_{r,s} is numerically zero
    (for real (r, s) that is exactly the critical-point locus of the Green
    function gradient).
    """
    Z = z_rs(ctx, r, s)
    if abs(Z) < degenerate_tol:
        raise DegenerateParameterError(f"Z_{{r,s}} = {Z:.3e} is degenerate at (r,s)=({r},{s})")
    a = r + s * ctx.tau
    wa, wpa = wp(ctx, a)
    val = wa + wpa / (2 * Z)
    return invert_wp(ctx, val), complex(val)


def okamoto_p_1000(
    ctx: EllipticContext, r: complex, s: complex, degenerate_tol: float = 1e-10
) -> tuple[TorusPoint, complex]:
    """The n = (1,0,0,0) lift of the Hitchin solution, by its explicit
    rational closed form in (Z, wp(a), wp'(a), g2)."""
    Z = z_rs(ctx, r, s)
    a = r + s * ctx.tau
    wa, wpa = wp(ctx, a)
    den = 2 * (Z**3 - 3 * wa * Z - wpa)
    if abs(den) < degenerate_tol:
        raise DegenerateParameterError(
            f"lift denominator {den:.3e} is degenerate at (r,s)=({r},{s})"
        )
    val = wa + (3 * wpa * Z**2 + (12 * wa**2 - ctx.g2) * Z + 3 * wa * wpa) / den
    return invert_wp(ctx, val), complex(val)


def p_solution(ctx: EllipticContext, index: PVIIndex, r: complex, s: complex):
    """Dispatch to the closed form available for this index."""
    if index.is_zero:
        return hitchin_p(ctx, r, s)
    if index.nk == (1, 0, 0, 0):
        return okamoto_p_1000(ctx, r, s)
    raise UnsupportedIndexError(f"no closed-form solution implemented for n={index.nk}")


def nearest_representative(
    ctx: EllipticContext, reference: complex, z: complex, branch_limit: float = 0.3
) -> complex:
    """Representative of {+-z + lattice} nearest to ``reference``.

    Raises :class:`BranchJumpError` when even the nearest one is farther than
    ``branch_limit`` lattice diameters, which signals a lost branch in
    tau-stencil tracking.
    """
    best = None
    for sgn in (1.0, -1.0):
        for m in range(-2, 3):
            for n in range(-2, 3):
                cand = sgn * z + m + n * ctx.tau
                if best is None or abs(cand - reference) < abs(best - reference):
                    best = cand
    diam = max(1.0, abs(ctx.tau), abs(1 + ctx.tau))
    if abs(best - reference) > branch_limit * diam:
        raise BranchJumpError(
            f"nearest representative is {abs(best - reference):.3g} away (limit {branch_limit * diam:.3g})"
        )
    return best


def epvi_residual(
    index: PVIIndex,
    r: complex,
    s: complex,
    tau: complex,
    h: float,
    ctx_factory=make_context,
) -> float:
    """|d^2 p/d tau^2 (central FD, step h) - elliptic-PVI right-hand side|.

    The stencil values p(tau +- h) are branch-tracked against p(tau).
    """
    ctx0 = ctx_factory(tau)
    ctxp = ctx_factory(tau + h)
    ctxm = ctx_factory(tau - h)
    p0 = _as_z(ctx0, p_solution(ctx0, index, r, s)[0])
    # stencil values must be reconstructed on their own lattice before tracking
    pp = nearest_representative(ctxp, p0, _as_z(ctxp, p_solution(ctxp, index, r, s)[0]))
    pm = nearest_representative(ctxm, p0, _as_z(ctxm, p_solution(ctxm, index, r, s)[0]))
    d2 = (pp - 2 * p0 + pm) / h**2
    rhs = 0j
    for alpha, w in zip(index.alphas, half_periods(ctx0)):
        rhs += float(alpha) * wp(ctx0, p0 + w)[1]
    rhs *= -1 / (4 * np.pi**2)
    return float(abs(d2 - rhs))


def _as_z(ctx, pt: TorusPoint) -> complex:
    return pt.r + pt.s * ctx.tau


def a_from_hitchin(
    r: float,
    s: float,
    tau: complex,
    h: float = 1e-4,
    ctx_factory=make_context,
    index: PVIIndex = INDEX_ZERO,
) -> complex:
    """Accessory parameter A paired with the canonical closed-form p(r, s) at
    tau, obtained by inverting the first Hamiltonian equation:

        A = (4 pi i p'(tau) + zeta(2p) - 2 p eta1) / 2,

    with p'(tau) by branch-tracked central differences.  The first equation
    has the same shape for every index, so the Okamoto lift is covered by
    passing its index."""
    ctx0 = ctx_factory(tau)
    ctxp = ctx_factory(tau + h)
    ctxm = ctx_factory(tau - h)
    p0 = _as_z(ctx0, p_solution(ctx0, index, r, s)[0])
    pp = nearest_representative(ctxp, p0, _as_z(ctxp, p_solution(ctxp, index, r, s)[0]))
    pm = nearest_representative(ctxm, p0, _as_z(ctxm, p_solution(ctxm, index, r, s)[0]))
    dp = (pp - pm) / (2 * h)
    return complex(0.5 * (4j * np.pi * dp + wzeta(ctx0, 2 * p0) - 2 * p0 * ctx0.eta1))


def hitchin_state(
    r: float, s: float, tau: complex, h: float = 1e-4, index: PVIIndex = INDEX_ZERO
) -> HamiltonianState:
    """Bundle (tau, p, A, B) for the closed-form solution seeded by real (r, s)."""
    from .lame import apparent_B  # deferred: lame depends on this module

    ctx = make_context(tau)
    p = _as_z(ctx, p_solution(ctx, index, r, s)[0])
    A = a_from_hitchin(r, s, tau, h, index=index)
    return HamiltonianState(tau=tau, p=p, A=A, B=apparent_B(ctx, index, p, A))


def _torsion_distance(ctx, p):
    return min(torus_distance(ctx, p, w) for w in half_periods(ctx))


def hamiltonian_flow(
    index: PVIIndex,
    state0: HamiltonianState,
    tau1: complex,
    steps: int = 8,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    collision_clearance: float = 0.02,
) -> list[HamiltonianState]:
    """Integrate the (p, A) Hamiltonian system along the straight tau segment.

        dp/dA pair:
        p' = (-i/4pi) (2A - zeta(2p) + 2 p eta1)
        A' = (i/4pi) [(2 wp(2p) + 2 eta1) A - (3/2) wp'(2p)
                      - sum_k n_k(n_k+1) wp'(p - w_k/2)]

    Returns ``steps + 1`` states at equally spaced tau samples, each with B
    recomputed.  Raises :class:`HalfPeriodCollisionError` if p(tau) comes
    within ``collision_clearance`` of E_tau[2] along the way.
    """
    from .lame import apparent_B  # deferred: lame depends on this module

    tau0 = complex(state0.tau)
    tau1 = complex(tau1)
    if min(tau0.imag, tau1.imag) <= 0:
        raise InvalidTauError("flow endpoints must stay in the upper half plane")
    dtau = tau1 - tau0
    nk = index.nk

    def rhs(t, y):
        taut = tau0 + t * dtau
        c = make_context(taut, tol=1e-12)
        p, A = y[0], y[1]
        if _torsion_distance(c, p) < collision_clearance:
            raise HalfPeriodCollisionError(
                f"p(tau) within {collision_clearance} of E_tau[2] at tau={taut}"
            )
        w2p, wp2p = wp(c, 2 * p)
        dp = (-1j / (4 * np.pi)) * (2 * A - wzeta(c, 2 * p) + 2 * p * c.eta1)
        dA = (2 * w2p + 2 * c.eta1) * A - 1.5 * wp2p
        for n_k, w in zip(nk, half_periods(c)):
            if n_k:
                dA -= n_k * (n_k + 1) * wp(c, p - w)[1]
        dA *= 1j / (4 * np.pi)
        return np.array([dp * dtau, dA * dtau])

    if steps < 1:
        raise ValueError("steps must be >= 1")
    ts = np.linspace(0.0, 1.0, steps + 1)
    y = np.array([state0.p, state0.A], dtype=complex)
    ctx0 = make_context(tau0)
    out = [
        HamiltonianState(
            tau=tau0, p=state0.p, A=state0.A, B=apparent_B(ctx0, index, state0.p, state0.A)
        )
    ]
    for ta, tb in zip(ts[:-1], ts[1:]):
        y = integrate(rhs, y, float(ta), float(tb), rtol=rtol, atol=atol)
        taut = tau0 + tb * dtau
        c = make_context(taut)
        out.append(HamiltonianState(tau=taut, p=complex(y[0]), A=complex(y[1]),
                                    B=apparent_B(c, index, complex(y[0]), complex(y[1]))))
    return out
