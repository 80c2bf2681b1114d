"""Generalized Lame equation on the torus: potential, apparent-singularity
constant, continuation paths, transfer matrices, and the monodromy
representation with its classification.

The equation is y'' = I(z) y with

    I(z) = sum_k n_k(n_k+1) wp(z - w_k/2) + (3/4)(wp(z+p) + wp(z-p))
           + A (zeta(z+p) - zeta(z-p)) + B,

an elliptic potential with regular singular points at the half periods (only
when n_k > 0) and at +-p, where the local exponents are {-1/2, 3/2}.  With B
given by the apparent-singularity constant the local monodromy at +-p is
exactly -I.

Matrix convention: all 2x2 matrices here are *transfer matrices* acting on
initial-data columns (y(q0), y'(q0)).  They are similar to the textbook
analytic-continuation representation (same eigenvalues, determinants,
commutators, eigenvector pairing); the sign canonicalization in
:func:`classify` makes the extracted (r, s) convention-independent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .elliptic import (
    EllipticContext,
    half_periods,
    lattice_reduce,
    wp,
    wzeta,
)
from .errors import (
    HalfPeriodError,
    IllConditionedError,
    PathConstructionError,
)
from .odeint import integrate
from .pvi import PVIIndex

__all__ = [
    "GLEParams",
    "gle_params",
    "apparent_B",
    "potential",
    "PathSpec",
    "build_cycles",
    "transfer_matrix",
    "MonodromyRep",
    "monodromy",
    "CompletelyReducible",
    "NotCompletelyReducible",
    "MonodromyClass",
    "classify",
    "is_unitary",
]


def apparent_B(ctx: EllipticContext, index: PVIIndex, p: complex, A: complex) -> complex:
    """The constant making +-p apparent singularities:

    B = A^2 - zeta(2p) A - (3/4) wp(2p) - sum_k n_k(n_k+1) wp(p - w_k/2).
    """
    if lattice_reduce(ctx, p).is_half_period(1e-9):
        raise HalfPeriodError(f"p={p} must avoid half periods")
    B = A * A - wzeta(ctx, 2 * p) * A - 0.75 * wp(ctx, 2 * p)[0]
    for n_k, w in zip(index.nk, half_periods(ctx)):
        if n_k:
            B -= n_k * (n_k + 1) * wp(ctx, p - w)[0]
    return complex(B)


@dataclass(frozen=True)
class GLEParams:
    """Parameters of one generalized Lame equation.

    Build through :func:`gle_params`, which derives B; direct construction is
    for deliberate experiments with a detuned B (the apparentness-sensitivity
    tests do exactly that).
    """

    index: PVIIndex
    p: complex
    A: complex
    B: complex
    tau: complex


def gle_params(ctx: EllipticContext, index: PVIIndex, p: complex, A: complex) -> GLEParams:
    return GLEParams(index=index, p=complex(p), A=complex(A),
                     B=apparent_B(ctx, index, p, A), tau=ctx.tau)


def potential(ctx: EllipticContext, params: GLEParams, z):
    """The potential I(z); scalar or array argument."""
    scalar = np.isscalar(z) or np.asarray(z).ndim == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    p = params.p
    shifted = np.concatenate([z + p, z - p])
    wps = wp(ctx, shifted)[0]
    zetas = wzeta(ctx, shifted)
    m = z.size
    val = 0.75 * (wps[:m] + wps[m:]) + params.A * (zetas[:m] - zetas[m:]) + params.B
    for n_k, w in zip(params.index.nk, half_periods(ctx)):
        if n_k:
            val = val + n_k * (n_k + 1) * wp(ctx, z - w)[0]
    return complex(val[0]) if scalar else val


# ---------------------------------------------------------------------------
# continuation paths


@dataclass(frozen=True)
class PathSpec:
    """Polyline with a guaranteed clearance from the singular set."""

    vertices: tuple[complex, ...]
    clearance: float


def _singular_points(ctx: EllipticContext, params: GLEParams, span: int = 3):
    """Translates (center, companion-or-None) of the singular set near the
    fundamental cell.  companion marks the other end of the branch-cut segment
    L for the +-p pair (used to pick detour sides)."""
    pt = lattice_reduce(ctx, params.p)
    r = pt.r - round(pt.r)  # centered representative, |r|,|s| <= 1/2
    s = pt.s - round(pt.s)
    pc = r + s * ctx.tau
    pts = []
    for m in range(-span, span + 1):
        for n in range(-span, span + 1):
            lam = m + n * ctx.tau
            pts.append((pc + lam, -pc + lam))
            pts.append((-pc + lam, pc + lam))
            # half periods stay obstacles even when n_k = 0 (potential regular
            # there, but the clearance contract covers all of E_tau[2])
            for w in half_periods(ctx):
                pts.append((w + lam, None))
    return pts, pc


def _walls(ctx: EllipticContext, pc: complex, span: int = 3):
    """Translates of the segment L joining -pc to +pc."""
    out = []
    for m in range(-span, span + 1):
        for n in range(-span, span + 1):
            lam = m + n * ctx.tau
            out.append((pc + lam, -pc + lam))
    return out


def _seg_point_dist(a: complex, b: complex, c: complex) -> float:
    dz = b - a
    L2 = abs(dz) ** 2
    if L2 == 0:
        return abs(a - c)
    t = np.clip(np.real((c - a) * np.conj(dz)) / L2, 0.0, 1.0)
    return abs(a + t * dz - c)


def _seg_seg_cross(a, b, c, d):
    """Parameter t on [a,b] of a proper crossing with [c,d], or None."""
    r = b - a
    s = d - c
    denom = (r * np.conj(s)).imag
    if abs(denom) < 1e-15 * abs(r) * abs(s):
        return None
    t = ((c - a) * np.conj(s)).imag / denom
    u = ((c - a) * np.conj(r)).imag / denom
    if 1e-9 < t < 1 - 1e-9 and 1e-9 < u < 1 - 1e-9:
        return t
    return None


def _arc(center, z1, z2, prefer_dir):
    """Vertices of the circular arc around center from z1 to z2 whose midpoint
    lies toward prefer_dir (a unit complex)."""
    R = abs(z1 - center)
    ph1, ph2 = np.angle(z1 - center), np.angle(z2 - center)
    dphi = (ph2 - ph1 + np.pi) % (2 * np.pi) - np.pi
    mid = ph1 + dphi / 2
    want = np.angle(prefer_dir)
    if abs((mid - want + np.pi) % (2 * np.pi) - np.pi) > np.pi / 2:
        dphi -= 2 * np.pi * np.sign(dphi or 1.0)
    narc = max(4, int(np.ceil(abs(dphi) / 0.3)))
    return [center + R * np.exp(1j * (ph1 + dphi * k / narc)) for k in range(1, narc)]


def _proximity_arc(a, b, c, comp, R, clearance):
    """Arc vertices replacing the part of [a, b] inside the circle |z-c| = R,
    or None when the circle misses the segment interior.  The radius shrinks
    when an endpoint sits inside the circle (but outside the clearance)."""
    dz = b - a
    for _ in range(3):
        al = abs(dz) ** 2
        be = 2 * np.real((a - c) * np.conj(dz))
        ga = abs(a - c) ** 2 - R**2
        disc = be * be - 4 * al * ga
        if disc <= 0:
            return None
        t1 = (-be - np.sqrt(disc)) / (2 * al)
        t2 = (-be + np.sqrt(disc)) / (2 * al)
        if t2 < 0.0 or t1 > 1.0:
            return None
        if t1 >= 0.0 and t2 <= 1.0:
            z1, z2 = a + t1 * dz, a + t2 * dz
            prefer = (c - comp) / abs(c - comp) if comp is not None else 1j * dz / abs(dz)
            return [z1] + _arc(c, z1, z2, prefer) + [z2]
        # an endpoint sits inside the detour circle; shrink toward it
        dmin = min(abs(a - c), abs(b - c))
        if dmin < clearance:
            raise PathConstructionError(
                f"path endpoint within clearance of singularity at {c}"
            )
        R = 0.999 * dmin
    return None


def _route(a, b, obstacles, walls, clearance, depth=0):
    """Polyline from a to b avoiding obstacle disks and wall crossings.

    The first offending singularity gets a circular detour arc; a crossing of
    a branch-cut wall away from its endpoints gets a corner detour around the
    nearer endpoint.  Remaining straight pieces are routed recursively.
    """
    if depth > 10:
        raise PathConstructionError("detour recursion exceeded; geometry too tight")
    trigger = 1.4 * clearance
    dz = b - a
    if abs(dz) < 1e-15:
        return [a, b]

    events = []  # (t_anchor, kind, payload)
    for c, comp in obstacles:
        t = np.real((c - a) * np.conj(dz)) / abs(dz) ** 2
        if t < -0.05 or t > 1.05:
            continue
        d = _seg_point_dist(a, b, c)
        if d < trigger * 0.999:
            events.append((max(t, 0.0), "arc", (c, comp)))
    for c1, c2 in walls:
        t = _seg_seg_cross(a, b, c1, c2)
        if t is None:
            continue
        x = a + t * dz
        e, other = (c1, c2) if abs(x - c1) <= abs(x - c2) else (c2, c1)
        if _seg_point_dist(a, b, e) < trigger * 0.999:
            continue  # the proximity arc around e also rounds the wall end
        events.append((t, "wall", (e, other)))
    if not events:
        return [a, b]
    events.sort(key=lambda ev: ev[0])
    t_ev, kind, payload = events[0]

    if kind == "arc":
        c, comp = payload
        arc = _proximity_arc(a, b, c, comp, trigger, clearance)
        if arc is None:
            return [a, b]
        left = _route(a, arc[0], obstacles, walls, clearance, depth + 1)
        right = _route(arc[-1], b, obstacles, walls, clearance, depth + 1)
        return left[:-1] + arc + right[1:]

    # corner detour around the nearer wall endpoint e
    e, other = payload
    rho = 1.5 * clearance
    x = a + t_ev * dz
    wall_dir = (other - e) / abs(other - e)
    nhat = 1j * wall_dir

    def wall_dist(z):
        return _seg_point_dist(e, other, z)

    step = max(0.3 * clearance / abs(dz), 1e-3)
    t1 = t_ev
    while t1 > 0.0 and wall_dist(a + t1 * dz) < 1.3 * clearance:
        t1 = max(0.0, t1 - step)
    t3 = t_ev
    while t3 < 1.0 and wall_dist(a + t3 * dz) < 1.3 * clearance:
        t3 = min(1.0, t3 + step)
    z1, z3 = a + t1 * dz, a + t3 * dz
    side = np.sign(np.real((z1 - e) * np.conj(nhat))) or 1.0
    c1 = e - rho * wall_dir + rho * side * nhat
    c2 = e - rho * wall_dir - rho * side * nhat
    pieces = [(a, z1), (z1, c1), (c1, c2), (c2, z3), (z3, b)]
    out = [a]
    for pa, pb in pieces:
        if abs(pb - pa) < 1e-15:
            continue
        out += _route(pa, pb, obstacles, walls, clearance, depth + 1)[1:]
    return out


def _polyline_min_dist(vertices, points):
    best = np.inf
    for a, b in zip(vertices[:-1], vertices[1:]):
        for c, _ in points:
            best = min(best, _seg_point_dist(a, b, c))
    return best


def _loop(ctx, params, center, q0, obstacles, walls, clearance):
    """Simple loop around ``center``: tail, full circle, tail reversed."""
    others = [(c, comp) for c, comp in obstacles if abs(c - center) > 1e-12]
    own_walls = [w for w in walls
                 if abs(w[0] - center) > 1e-12 and abs(w[1] - center) > 1e-12]
    R = 1.1 * clearance
    dmin = min(abs(c - center) for c, _ in others)
    if dmin < 2 * R:
        R = 0.45 * dmin
        if R < 0.25 * clearance:
            raise PathConstructionError(
                f"singularities within {dmin:.3g} of {center}; no room for a loop"
            )
    zb = center + R * (q0 - center) / abs(q0 - center)
    tail = _route(q0, zb, others, own_walls, clearance)
    ph0 = np.angle(zb - center)
    nv = 28
    circle = [center + R * np.exp(1j * (ph0 + 2 * np.pi * k / nv)) for k in range(1, nv + 1)]
    return tail + circle + tail[-2::-1]


def _nudge_basepoint(ctx, q0, obstacles, walls, clearance):
    def clear(q):
        if min(abs(q - c) for c, _ in obstacles) < 1.5 * clearance:
            return False
        return all(_seg_point_dist(c1, c2, q) > 1.2 * clearance for c1, c2 in walls)

    if clear(q0):
        return q0
    for dr in (0.02, -0.02, 0.035, -0.035, 0.05, -0.05):
        for ds in (0.0, 0.02, -0.02, 0.035, -0.035, 0.05, -0.05):
            q = q0 + dr + ds * ctx.tau
            if clear(q):
                return q
    raise PathConstructionError("no valid basepoint within the nudge budget")


def build_cycles(
    ctx: EllipticContext,
    params: GLEParams,
    q0: Optional[complex] = None,
    clearance: Optional[float] = None,
):
    """Fundamental cycles and local loops: (ell1, ell2, gamma_plus, gamma_minus).

    ell_j runs from q0 to q0 + w_j (w_1 = 1, w_2 = tau) without crossing any
    translate of the segment L joining -p to p; gamma_+- encircle +-p once
    counterclockwise.  All four keep the stated clearance from the singular
    set; violations raise :class:`PathConstructionError`.
    """
    clearance = 0.05 * min(1.0, ctx.tau.imag) if clearance is None else clearance
    obstacles, pc = _singular_points(ctx, params)
    walls = _walls(ctx, pc)
    q0 = 0.37 + 0.29 * ctx.tau if q0 is None else complex(q0)
    q0 = _nudge_basepoint(ctx, q0, obstacles, walls, clearance)

    ell1 = _route(q0, q0 + 1, obstacles, walls, clearance)
    ell2 = _route(q0, q0 + ctx.tau, obstacles, walls, clearance)
    gplus = _loop(ctx, params, pc, q0, obstacles, walls, clearance)
    gminus = _loop(ctx, params, -pc, q0, obstacles, walls, clearance)

    paths = []
    for name, verts in (("ell1", ell1), ("ell2", ell2), ("gamma+", gplus), ("gamma-", gminus)):
        dmin = _polyline_min_dist(verts, obstacles)
        if name.startswith("gamma"):
            ok = dmin > 0.4 * clearance  # its own circle sits at the loop radius
        else:
            ok = dmin > 0.999 * clearance
        if not ok:
            raise PathConstructionError(f"path {name} violates clearance ({dmin:.3g})")
        paths.append(PathSpec(vertices=tuple(verts), clearance=clearance))
    return tuple(paths)


def continuation_path(
    ctx: EllipticContext,
    params: GLEParams,
    z_from: complex,
    z_to: complex,
    clearance: Optional[float] = None,
    exclude: tuple[complex, ...] = (),
) -> PathSpec:
    """Polyline from z_from to z_to with the standard detour rule.

    ``exclude`` removes singular centers from the obstacle set (used when the
    destination deliberately approaches one of them, e.g. for asymptotic
    slope fits)."""
    clearance = 0.05 * min(1.0, ctx.tau.imag) if clearance is None else clearance
    obstacles, pc = _singular_points(ctx, params)
    if exclude:
        obstacles = [
            (c, comp)
            for c, comp in obstacles
            if all(abs(c - e) > 1e-12 for e in exclude)
        ]
    walls = _walls(ctx, pc)
    verts = _route(complex(z_from), complex(z_to), obstacles, walls, clearance)
    return PathSpec(vertices=tuple(verts), clearance=clearance)


def transfer_matrix(
    ctx: EllipticContext,
    params: GLEParams,
    path: PathSpec,
    rtol: float = 1e-11,
    atol: float = 1e-13,
) -> np.ndarray:
    """Transfer matrix of (y, y')' = (y', I(z) y) along the polyline.

    Columns are the two solutions with data (1,0) and (0,1) at the start; the
    Wronskian is constant, so the determinant is 1 up to integration error.
    """
    Y = np.eye(2, dtype=complex)
    for a, b in zip(path.vertices[:-1], path.vertices[1:]):
        dz = b - a
        if abs(dz) < 1e-15:
            continue

        def rhs(t, y, a=a, dz=dz):
            iv = potential(ctx, params, a + t * dz)
            out = np.empty_like(y)
            out[0] = y[1] * dz
            out[1] = iv * y[0] * dz
            return out

        Y = integrate(rhs, Y, 0.0, 1.0, rtol=rtol, atol=atol)
    return Y


@dataclass(frozen=True)
class MonodromyRep:
    """Monodromy data of one GLE: matrices along the two fundamental cycles
    and around the two apparent singularities (transfer convention)."""

    N1: np.ndarray
    N2: np.ndarray
    gamma_plus: np.ndarray
    gamma_minus: np.ndarray
    basepoint: complex


def monodromy(
    ctx: EllipticContext,
    params: GLEParams,
    q0: Optional[complex] = None,
    rtol: float = 1e-11,
    atol: float = 1e-13,
    clearance: Optional[float] = None,
) -> MonodromyRep:
    ell1, ell2, gp, gm = build_cycles(ctx, params, q0=q0, clearance=clearance)
    return MonodromyRep(
        N1=transfer_matrix(ctx, params, ell1, rtol, atol),
        N2=transfer_matrix(ctx, params, ell2, rtol, atol),
        gamma_plus=transfer_matrix(ctx, params, gp, rtol, atol),
        gamma_minus=transfer_matrix(ctx, params, gm, rtol, atol),
        basepoint=ell1.vertices[0],
    )


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class CompletelyReducible:
    """Simultaneously diagonalizable pair; (r, s) canonicalized so that the
    eigenvalue pairing e^{-2 pi i s} (N1) with e^{+2 pi i r} (N2) holds on a
    common eigenvector, Re r, Re s lie in [0, 1), and the joint sign is fixed
    by Re s <= 1/2, ties by Re r <= 1/2."""

    r: complex
    s: complex


@dataclass(frozen=True)
class NotCompletelyReducible:
    eps1: int
    eps2: int
    c: complex  # may be inf

    @property
    def c_is_infinite(self) -> bool:
        return np.isinf(np.real(self.c)) or np.isinf(np.imag(self.c))


MonodromyClass = Union[CompletelyReducible, NotCompletelyReducible]


def _canon_rs(r: complex, s: complex, eps: float = 1e-9):
    def red(x):
        return complex(x.real % 1.0, x.imag)

    r, s = red(r), red(s)
    rn, sn = red(-r), red(-s)
    if abs(s.real - sn.real) > eps:
        return (r, s) if s.real < sn.real else (rn, sn)
    if abs(r.real - rn.real) > eps:
        return (r, s) if r.real < rn.real else (rn, sn)
    return (r, s)


def classify(rep: MonodromyRep, tol: float = 1e-6) -> MonodromyClass:
    """Decide completely-reducible vs not, per the common-eigenbasis test.

    Diagonalization uses whichever of N1, N2, N1 N2 has the widest eigenvalue
    gap (robust when one matrix is close to +-I).  Near-parabolic reps whose
    eigenvectors cannot be trusted raise :class:`IllConditionedError`.
    """
    N1, N2 = rep.N1, rep.N2
    eye = np.eye(2)

    def near_scalar(M):
        e = 1.0 if np.trace(M).real >= 0 else -1.0
        return np.linalg.norm(M - e * eye) < tol, int(e)

    s1, e1 = near_scalar(N1)
    s2, e2 = near_scalar(N2)
    if s1 and s2:
        # +-I pair: diagonal with half-integer data
        return CompletelyReducible(r=0.0 if e2 > 0 else 0.5, s=0.0 if e1 > 0 else 0.5)

    cands = [N1, N2, N1 @ N2]
    gaps = []
    for M in cands:
        ev = np.linalg.eigvals(M)
        gaps.append(abs(ev[0] - ev[1]))
    M = cands[int(np.argmax(gaps))]
    ev, P = np.linalg.eig(M)
    condP = np.linalg.cond(P)
    if max(gaps) > 1e-8 and condP < 1e8:
        Pi = np.linalg.inv(P)
        D1 = Pi @ N1 @ P
        D2 = Pi @ N2 @ P
        off = max(abs(D1[0, 1]), abs(D1[1, 0]), abs(D2[0, 1]), abs(D2[1, 0]))
        if off < tol * max(1.0, np.linalg.norm(N1), np.linalg.norm(N2)):
            s = np.log(D1[0, 0]) / (-2j * np.pi)
            r = np.log(D2[0, 0]) / (2j * np.pi)
            r, s = _canon_rs(complex(r), complex(s))
            return CompletelyReducible(r=r, s=s)

    # not completely reducible: N_j = eps_j (I + c_j K) with a common nilpotent K
    tr1, tr2 = np.trace(N1), np.trace(N2)
    eps1 = 1 if tr1.real >= 0 else -1
    eps2 = 1 if tr2.real >= 0 else -1
    if abs(tr1 - 2 * eps1) > 0.1 or abs(tr2 - 2 * eps2) > 0.1:
        raise IllConditionedError(
            "matrices neither simultaneously diagonalizable nor unipotent up to sign"
        )
    K1 = N1 / eps1 - eye
    K2 = N2 / eps2 - eye
    n1 = np.abs(K1).max()
    n2 = np.abs(K2).max()
    if n1 < tol:
        return NotCompletelyReducible(eps1=eps1, eps2=eps2, c=complex(np.inf, 0.0))
    idx = np.unravel_index(np.argmax(np.abs(K1)), K1.shape)
    c = K2[idx] / K1[idx]
    if np.linalg.norm(K2 - c * K1) > 100 * tol * max(1.0, abs(c)) * np.linalg.norm(K1):
        raise IllConditionedError("nilpotent parts are not proportional")
    return NotCompletelyReducible(eps1=eps1, eps2=eps2, c=complex(c))


def is_unitary(rep: MonodromyRep, tol: float = 1e-6) -> Optional[tuple[float, float]]:
    """Real (r, s) when the rep is conjugate into SU(2), else None.

    That happens exactly when the rep is completely reducible with real
    (r, s) off the half-integer grid (unimodular eigenvalues on a common
    eigenbasis)."""
    cls = classify(rep, tol=tol)
    if not isinstance(cls, CompletelyReducible):
        return None
    r, s = cls.r, cls.s
    if abs(r.imag) > tol or abs(s.imag) > tol:
        return None
    rr, ss = r.real, s.real
    if (abs(2 * rr - round(2 * rr)) < tol) and (abs(2 * ss - round(2 * ss)) < tol):
        return None
    return (rr, ss)
