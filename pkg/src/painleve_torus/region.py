"""Membership and sampling of the solvability region Omega_tau^n, the set of
singularity locations p = +-p^n_{r,s}(tau) swept by real (r, s) off the
half-integer grid.

Membership of a probe p is decided in the wp-plane: p belongs to the region
iff wp(p) is attained by the closed-form value wp(p^n_{r,s}) at some real
(r, s).  For n = 0 that is equivalent to G_p having a nontrivial critical
point, and the per-probe test runs the critical-point search directly.  The
region scan instead precomputes the forward value table once and certifies
each cell with a local Newton refinement in (r, s), which is what makes
resolution-128 scans affordable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .elliptic import EllipticContext, half_periods, make_context, wp, wzeta
from .errors import UnsupportedIndexError
from .green import find_critical_points, require_off_half_periods
from .pvi import PVIIndex

__all__ = ["Witness", "RegionSample", "omega_membership", "omega_scan"]


@dataclass(frozen=True)
class Witness:
    """Real monodromy data (r, s) whose closed-form solution lands on the
    probe, with the wp-plane matching residual."""

    r: float
    s: float
    residual: float


def _forward_values(ctx: EllipticContext, index: PVIIndex, r, s):
    """wp(p^n_{r,s}) for arrays r, s; NaN where the formula degenerates."""
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    a = r + s * ctx.tau
    with np.errstate(all="ignore"):
        w, wprime = wp(ctx, a)
        Z = wzeta(ctx, a) - r * ctx.eta1 - s * ctx.eta2
        if index.is_zero:
            den = 2 * Z
            val = w + wprime / den
        elif index.nk == (1, 0, 0, 0):
            den = 2 * (Z**3 - 3 * w * Z - wprime)
            val = w + (3 * wprime * Z**2 + (12 * w**2 - ctx.g2) * Z + 3 * w * wprime) / den
        else:
            raise UnsupportedIndexError(f"no closed form for n={index.nk}")
    bad = ~np.isfinite(val) | (np.abs(den) < 1e-10)
    val = np.where(bad, np.nan + 1j * np.nan, val)
    return val


def _off_half_grid(r, s, margin):
    def far(x):
        return np.abs(2 * x - np.round(2 * x)) > 2 * margin

    return far(r) | far(s)


def _chordal(a, b):
    return np.abs(a - b) / np.sqrt((1 + np.abs(a) ** 2) * (1 + np.abs(b) ** 2))


def _refine_batch(ctx, index, r, s, targets, iters=18, fd=1e-7):
    """Vectorized Newton on (r, s) driving wp(p^n_{r,s}) to the targets."""
    r = r.copy()
    s = s.copy()
    for _ in range(iters):
        v0 = _forward_values(ctx, index, r, s)
        F = v0 - targets
        vr = (_forward_values(ctx, index, r + fd, s) - _forward_values(ctx, index, r - fd, s)) / (2 * fd)
        vs = (_forward_values(ctx, index, r, s + fd) - _forward_values(ctx, index, r, s - fd)) / (2 * fd)
        det = vr.real * vs.imag - vr.imag * vs.real
        ok = np.isfinite(det) & (np.abs(det) > 1e-12) & np.isfinite(F)
        dr = np.where(ok, (-F.real * vs.imag + F.imag * vs.real) / det, 0.0)
        ds = np.where(ok, (-vr.real * F.imag + vr.imag * F.real) / det, 0.0)
        step = np.hypot(dr, ds)
        fac = np.where(step > 0.08, 0.08 / np.maximum(step, 1e-300), 1.0)
        dr = dr * fac
        ds = ds * fac
        r = (r + dr) % 1.0
        s = (s + ds) % 1.0
    v = _forward_values(ctx, index, r, s)
    res = np.abs(v - targets)
    res = np.where(np.isfinite(res), res, np.inf)
    return r, s, res


def _check_index(index: PVIIndex):
    if index.nk not in ((0, 0, 0, 0), (1, 0, 0, 0)):
        raise UnsupportedIndexError(
            f"membership supported for n = 0 and n = (1,0,0,0), got {index.nk}"
        )


def omega_membership(
    ctx: EllipticContext,
    p: complex,
    index: PVIIndex,
    seeds_per_axis: int = 12,
    match_tol: float = 1e-3,
) -> Witness | None:
    """Witness (r, s) certifying p in Omega_tau^n, or None.

    n = 0 runs the G_p critical-point search (a nontrivial critical point
    a = r + s*tau is a witness); n = (1,0,0,0) forward-scans a coarse (r, s)
    grid for near-matches in the wp-plane and polishes them by Newton.
    """
    _check_index(index)
    pt = require_off_half_periods(ctx, p)
    pz = pt.r + pt.s * ctx.tau
    target = complex(wp(ctx, pz)[0])

    if index.is_zero:
        for cp in find_critical_points(ctx, pz, seeds_per_axis=seeds_per_axis):
            if cp.kind != "nontrivial":
                continue
            r, s = cp.location.r, cp.location.s
            v = _forward_values(ctx, index, np.array([r]), np.array([s]))[0]
            if not np.isfinite(v):
                continue  # witness candidate sits on the degenerate locus
            res = abs(v - target)
            if res <= match_tol * (1 + abs(target)):
                return Witness(r=float(r), s=float(s), residual=float(res))
        return None

    # forward scan with Newton polish
    m = 96
    g = (np.arange(m) + 0.5) / m
    rr, ss = np.meshgrid(g, g, indexing="ij")
    rr, ss = rr.ravel(), ss.ravel()
    keep = _off_half_grid(rr, ss, 1.5 / m)
    rr, ss = rr[keep], ss[keep]
    vals = _forward_values(ctx, index, rr, ss)
    dist = _chordal(vals, target)
    dist = np.where(np.isfinite(dist), dist, np.inf)
    order = np.argsort(dist)[:6]
    r0 = rr[order]
    s0 = ss[order]
    r1, s1, res = _refine_batch(ctx, index, r0, s0, np.full(r0.shape, target))
    good = (res <= match_tol * (1 + abs(target))) & _off_half_grid(r1, s1, 1e-4)
    if not good.any():
        return None
    k = int(np.argmin(np.where(good, res, np.inf)))
    return Witness(r=float(r1[k]), s=float(s1[k]), residual=float(res[k]))


@dataclass
class RegionSample:
    """Membership map of Omega_tau^n over cell centers of the fundamental cell."""

    tau: complex
    index: PVIIndex
    resolution: int
    r_cells: np.ndarray
    s_cells: np.ndarray
    member: np.ndarray
    excluded: np.ndarray
    witness_r: np.ndarray
    witness_s: np.ndarray
    residual: np.ndarray
    match_tol: float = field(default=1e-3)

    def to_csv(self) -> str:
        lines = ["r_cell,s_cell,member,witness_r,witness_s,residual"]
        n = self.resolution
        for i in range(n):
            for j in range(n):
                wr = self.witness_r[i, j]
                ws = self.witness_s[i, j]
                rv = self.residual[i, j]
                lines.append(
                    "%s,%s,%d,%s,%s,%s"
                    % (
                        format(self.r_cells[i], ".17g"),
                        format(self.s_cells[j], ".17g"),
                        int(self.member[i, j]),
                        "" if not np.isfinite(wr) else format(wr, ".17g"),
                        "" if not np.isfinite(ws) else format(ws, ".17g"),
                        "nan" if not np.isfinite(rv) else format(rv, ".17g"),
                    )
                )
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        def grid(a):
            return [[None if not np.isfinite(v) else v for v in row] for row in a]

        doc = {
            "tau": [self.tau.real, self.tau.imag],
            "index": list(self.index.nk),
            "resolution": self.resolution,
            "match_tol": self.match_tol,
            "r_cells": list(self.r_cells),
            "s_cells": list(self.s_cells),
            "member": [[bool(v) for v in row] for row in self.member],
            "excluded": [[bool(v) for v in row] for row in self.excluded],
            "witness_r": grid(self.witness_r),
            "witness_s": grid(self.witness_s),
            "residual": grid(self.residual),
        }
        return json.dumps(doc)


def omega_scan(
    tau: complex,
    index: PVIIndex,
    resolution: int,
    match_tol: float = 1e-3,
    table_size: int | None = None,
    ctx: EllipticContext | None = None,
) -> RegionSample:
    """Sample membership at the (i+1/2)/res cell centers.

    Cells within 2/resolution of E_tau[2] (equivalently of the lattice
    corners) are marked excluded and never tested.  Membership of the rest is
    certified per cell: nearest candidates from a precomputed forward table
    are polished by Newton in (r, s) and accepted when the wp-plane residual
    drops below match_tol * (1 + |wp(p)|).  The +- symmetry of the region is
    exact by construction (mirror cells share the same wp target).
    """
    _check_index(index)
    if resolution < 16:
        raise ValueError("resolution must be >= 16")
    ctx = make_context(tau) if ctx is None else ctx
    n = resolution
    centers = (np.arange(n) + 0.5) / n

    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    zc = centers[ii] + centers[jj] * ctx.tau
    excluded = np.zeros((n, n), dtype=bool)
    for w in half_periods(ctx):
        d = zc - w
        ss_ = np.imag(d) / ctx.tau.imag
        rr_ = np.real(d) - ss_ * ctx.tau.real
        d0 = (rr_ - np.round(rr_)) + (ss_ - np.round(ss_)) * ctx.tau
        excluded |= np.abs(d0) < 2.0 / n

    # forward table (candidate search only; Newton re-evaluates the formula)
    m = max(128, n) if table_size is None else table_size
    g = (np.arange(m) + 0.5) / m
    tr, ts = np.meshgrid(g, g, indexing="ij")
    tr, ts = tr.ravel(), ts.ravel()
    tkeep = _off_half_grid(tr, ts, 1.5 / m)
    tr, ts = tr[tkeep], ts[tkeep]
    tvals = _forward_values(ctx, index, tr, ts)
    tok = np.isfinite(tvals)
    tr, ts, tvals = tr[tok], ts[tok], tvals[tok]

    member = np.zeros((n, n), dtype=bool)
    wit_r = np.full((n, n), np.nan)
    wit_s = np.full((n, n), np.nan)
    residual = np.full((n, n), np.nan)

    # work on the half domain; mirror cell (i,j) <-> (n-1-i, n-1-j) has the
    # same wp target because wp is even
    half = [(i, j) for i in range(n) for j in range(n)
            if (j < (n - 1 - j)) or (j == n - 1 - j and i <= n - 1 - i)]
    cells = [(i, j) for (i, j) in half if not excluded[i, j]]
    if cells:
        iarr = np.array([c[0] for c in cells])
        jarr = np.array([c[1] for c in cells])
        targets = wp(ctx, centers[iarr] + centers[jarr] * ctx.tau)[0]
        scale = 1 + np.abs(targets)
        best_res = np.full(targets.shape, np.inf)
        best_r = np.full(targets.shape, np.nan)
        best_s = np.full(targets.shape, np.nan)
        # three rounds of candidates, nearest in the chordal metric; the
        # distance matrix is built in blocks to bound memory
        tnorm = np.sqrt(1 + np.abs(tvals) ** 2)
        nc = 3
        cand_order = np.empty((targets.size, nc), dtype=np.int64)
        block = 1024
        for lo in range(0, targets.size, block):
            hi = min(lo + block, targets.size)
            tgt = targets[lo:hi, None]
            d = np.abs(tvals[None, :] - tgt) / (tnorm[None, :] * np.sqrt(1 + np.abs(tgt) ** 2))
            part = np.argpartition(d, nc, axis=1)[:, :nc]
            rows = np.arange(hi - lo)[:, None]
            order = np.argsort(d[rows, part], axis=1)
            cand_order[lo:hi] = part[rows, order]
        for round_k in range(nc):
            pend = best_res > match_tol * scale
            if not pend.any():
                break
            idx = cand_order[pend, round_k]
            r1, s1, res1 = _refine_batch(ctx, index, tr[idx], ts[idx], targets[pend])
            ok = (res1 < best_res[pend]) & _off_half_grid(r1, s1, 1e-4)
            upd = np.flatnonzero(pend)[ok]
            best_res[upd] = res1[ok]
            best_r[upd] = r1[ok]
            best_s[upd] = s1[ok]
        is_mem = best_res <= match_tol * scale
        for k, (i, j) in enumerate(cells):
            mi, mj = n - 1 - i, n - 1 - j
            member[i, j] = member[mi, mj] = bool(is_mem[k])
            residual[i, j] = residual[mi, mj] = best_res[k] if np.isfinite(best_res[k]) else np.nan
            if is_mem[k]:
                wit_r[i, j] = wit_r[mi, mj] = best_r[k]
                wit_s[i, j] = wit_s[mi, mj] = best_s[k]

    return RegionSample(
        tau=complex(tau),
        index=index,
        resolution=n,
        r_cells=centers,
        s_cells=centers,
        member=member,
        excluded=excluded,
        witness_r=wit_r,
        witness_s=wit_s,
        residual=residual,
        match_tol=match_tol,
    )
