"""Gradients and critical points of the torus Green function G and of
G_p(z) = (G(z-p) + G(z+p))/2.

Only the gradient is ever computed; the complex combination

    -4*pi * dG/dz = zeta(z) - r*eta1 - s*eta2,   z = r + s*tau, r,s real,

is representative-independent, and the critical-point equation for G_p reads

    zeta(a+p) + zeta(a-p) - 2*(r*eta1 + s*eta2) = 0,  a = r + s*tau.

Half periods are always critical (trivial) points; nontrivial ones are found
by a damped Newton search on the real coordinates (r, s), all seeds advanced
in lockstep as numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elliptic import (
    EllipticContext,
    TorusPoint,
    canonical_representative,
    half_periods,
    lattice_reduce,
    torus_distance,
    wp,
    wzeta,
)
from .errors import HalfPeriodError, StencilError

__all__ = [
    "CriticalPoint",
    "green_grad",
    "gp_grad",
    "find_critical_points",
    "classify_hessian",
    "require_off_half_periods",
]


@dataclass(frozen=True)
class CriticalPoint:
    location: TorusPoint
    kind: str  # "trivial" | "nontrivial"
    residual: float
    hessian_det: float


def require_off_half_periods(ctx: EllipticContext, p: complex, tol: float = 1e-6) -> TorusPoint:
    """Validate that p avoids the two-torsion set E_tau[2]; returns it reduced."""
    pt = lattice_reduce(ctx, p)
    if pt.is_half_period(tol):
        raise HalfPeriodError(f"p={p} is (numerically) a half period")
    return pt


def green_grad(ctx: EllipticContext, z):
    """-4*pi dG/dz at z; scalar or array input."""
    scalar = np.isscalar(z) or np.asarray(z).ndim == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    s = np.imag(z) / ctx.tau.imag
    r = np.real(z) - s * ctx.tau.real
    val = wzeta(ctx, z) - r * ctx.eta1 - s * ctx.eta2
    return complex(val[0]) if scalar else val


def gp_grad(ctx: EllipticContext, p: complex, z):
    """-4*pi dG_p/dz at z for the source pair +-p."""
    scalar = np.isscalar(z) or np.asarray(z).ndim == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    val = 0.5 * (green_grad(ctx, z - p) + green_grad(ctx, z + p))
    return complex(val[0]) if scalar else val


def _grad_for(ctx, p, z):
    return green_grad(ctx, z) if p is None else gp_grad(ctx, p, z)


def _newton_system(ctx: EllipticContext, p, r, s):
    """Value F and real 2x2 Jacobian of the critical-point equation at a = r + s*tau.

    For G_p:  F = zeta(a+p) + zeta(a-p) - 2*(r*eta1 + s*eta2)  (= 2*gp_grad)
    For G:    F = zeta(a) - r*eta1 - s*eta2.
    dF/da involves -wp at the shifted points; a = r + s*tau converts to (r, s).
    """
    a = r + s * ctx.tau
    if p is None:
        F = wzeta(ctx, a) - r * ctx.eta1 - s * ctx.eta2
        dFda = -wp(ctx, a)[0]
        dFdr = dFda - ctx.eta1
        dFds = dFda * ctx.tau - ctx.eta2
    else:
        F = wzeta(ctx, a + p) + wzeta(ctx, a - p) - 2 * (r * ctx.eta1 + s * ctx.eta2)
        dFda = -(wp(ctx, a + p)[0] + wp(ctx, a - p)[0])
        dFdr = dFda - 2 * ctx.eta1
        dFds = dFda * ctx.tau - 2 * ctx.eta2
    return F, dFdr, dFds


def find_critical_points(
    ctx: EllipticContext,
    p: complex | None = None,
    seeds_per_axis: int = 12,
    tol: float = 1e-12,
    max_iter: int = 50,
) -> list[CriticalPoint]:
    """All critical points of G (p=None) or G_p, deduplicated mod lattice and mod +-.

    Half periods are included as trivial critical points (all four for G_p;
    the origin is the singularity of G itself and is skipped).  An empty
    nontrivial set is a perfectly valid outcome.
    """
    if seeds_per_axis < 8:
        raise ValueError("seeds_per_axis must be >= 8")
    if p is not None:
        pt = require_off_half_periods(ctx, p)
        p = complex(pt.r + pt.s * ctx.tau)

    # singular points of the gradient equation, in reduced coordinates
    if p is None:
        sing = [0.0 + 0.0j]
    else:
        sing = [p, -p]

    grid = (np.arange(seeds_per_axis) + 0.5) / seeds_per_axis
    rr, ss = np.meshgrid(grid, grid)
    r = rr.ravel().copy()
    s = ss.ravel().copy()
    keep = np.ones(r.size, dtype=bool)
    for c in sing:
        for m in (-1, 0, 1):
            for n in (-1, 0, 1):
                d = np.abs(r + s * ctx.tau - (c + m + n * ctx.tau))
                keep &= d > 0.03
    r, s = r[keep], s[keep]
    active = np.ones(r.size, dtype=bool)

    for _ in range(max_iter):
        if not active.any():
            break
        F, dFdr, dFds = _newton_system(ctx, p, r[active], s[active])
        # solve the real 2x2 systems J * delta = -F
        J = np.empty((F.size, 2, 2))
        J[:, 0, 0], J[:, 0, 1] = dFdr.real, dFds.real
        J[:, 1, 0], J[:, 1, 1] = dFdr.imag, dFds.imag
        rhs = np.stack([-F.real, -F.imag], axis=-1)
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        ok = np.abs(det) > 1e-14
        delta = np.zeros_like(rhs)
        delta[ok, 0] = (J[ok, 1, 1] * rhs[ok, 0] - J[ok, 0, 1] * rhs[ok, 1]) / det[ok]
        delta[ok, 1] = (-J[ok, 1, 0] * rhs[ok, 0] + J[ok, 0, 0] * rhs[ok, 1]) / det[ok]
        step = np.hypot(delta[:, 0], delta[:, 1])
        clip = step > 0.15
        delta[clip] *= (0.15 / step[clip])[:, None]
        idx = np.flatnonzero(active)
        r[idx] += delta[:, 0]
        s[idx] += delta[:, 1]
        r[idx] %= 1.0
        s[idx] %= 1.0
        # drop seeds that wandered into a pole of the equation or stalled
        bad = ~ok
        a = r[idx] + s[idx] * ctx.tau
        for c in sing:
            for m in (-1, 0, 1):
                for n in (-1, 0, 1):
                    bad |= np.abs(a - (c + m + n * ctx.tau)) < 0.5 * 0.03
        conv = (np.abs(F) < tol) & ~bad
        active[idx[conv | bad]] = False
        if conv.any():
            pass
    # final residual filter
    F, _, _ = _newton_system(ctx, p, r, s)
    good = np.abs(F) < 10 * tol

    found: list[tuple[TorusPoint, float]] = []
    for ri, si, Fi in zip(r[good], s[good], F[good]):
        pt = canonical_representative(ctx, ri + si * ctx.tau)
        if pt.is_half_period(1e-7):
            continue
        res = abs(Fi) / (1.0 if p is None else 2.0)
        merged = False
        for j, (other, other_res) in enumerate(found):
            if torus_distance(ctx, pt.z, other.z) < 1e-6:
                if res < other_res:
                    found[j] = (pt, res)
                merged = True
                break
        if not merged:
            found.append((pt, res))
    found.sort(key=lambda t: (t[0].r, t[0].s))

    out: list[CriticalPoint] = []
    for k, h in enumerate(half_periods(ctx)):
        if p is None and k == 0:
            continue  # origin is the singularity of G, not a critical point
        hp = lattice_reduce(ctx, h)
        res = abs(_grad_for(ctx, p, hp.r + hp.s * ctx.tau + 0j))
        out.append(
            CriticalPoint(
                location=TorusPoint(z=hp.r + hp.s * ctx.tau, r=hp.r, s=hp.s),
                kind="trivial",
                residual=res,
                hessian_det=classify_hessian(ctx, hp.z, p=p),
            )
        )
    for pt, res in found:
        out.append(
            CriticalPoint(
                location=pt,
                kind="nontrivial",
                residual=res,
                hessian_det=classify_hessian(ctx, pt.z, p=p),
            )
        )
    return out


def classify_hessian(
    ctx: EllipticContext,
    a: complex,
    p: complex | None = None,
    step: float | None = None,
) -> float:
    """Signed determinant of the real 2x2 Hessian of G (or G_p) at a.

    Central differences of the (exact) real gradient with step
    h = 1e-4 * min(1, Im tau) unless overridden; only the non-degeneracy
    decision needs to be trusted, not high precision.
    """
    h = 1e-4 * min(1.0, ctx.tau.imag) if step is None else step
    a = complex(a)
    sing = [0.0 + 0.0j] if p is None else [complex(p), -complex(p)]
    for c in sing:
        if torus_distance(ctx, a, c) < 4 * h:
            raise StencilError("finite-difference stencil touches a singularity")

    def real_grad(z):
        g = _grad_for(ctx, p, z)
        # g = -4*pi dG/dz and dG/dz = (G_x - i G_y)/2
        gx = -g.real / (2 * np.pi)
        gy = g.imag / (2 * np.pi)
        return np.array([gx, gy])

    gpx = real_grad(a + h)
    gmx = real_grad(a - h)
    gpy = real_grad(a + 1j * h)
    gmy = real_grad(a - 1j * h)
    gxx = (gpx[0] - gmx[0]) / (2 * h)
    gyx = (gpx[1] - gmx[1]) / (2 * h)
    gxy = (gpy[0] - gmy[0]) / (2 * h)
    gyy = (gpy[1] - gmy[1]) / (2 * h)
    return float(gxx * gyy - (0.5 * (gxy + gyx)) ** 2)
