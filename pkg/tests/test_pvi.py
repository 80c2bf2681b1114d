from fractions import Fraction

import numpy as np
import pytest

from painleve_torus import (
    INDEX_1000,
    INDEX_ZERO,
    PVIIndex,
    a_from_hitchin,
    apparent_B,
    epvi_residual,
    find_critical_points,
    green_grad,
    half_periods,
    hamiltonian_flow,
    hitchin_p,
    hitchin_state,
    make_context,
    okamoto_p_1000,
    wp,
    wzeta,
    z_rs,
)
from painleve_torus.errors import (
    BranchJumpError,
    DegenerateParameterError,
    HalfPeriodCollisionError,
    HalfPeriodError,
    UnsupportedIndexError,
)
from painleve_torus.pvi import nearest_representative, p_solution

TAU = 0.2 + 1.1j

# frozen from the moment-corrected lattice-sum oracle (see oracles.py)
Z_LATTICE_03_02 = 1.018602359436425 - 0.9359239892846439j


def test_alphas_exact():
    assert INDEX_ZERO.alphas == (Fraction(1, 8),) * 4
    assert INDEX_1000.alphas == (Fraction(9, 8), Fraction(1, 8), Fraction(1, 8), Fraction(1, 8))


def test_index_parse():
    assert PVIIndex.parse("0") == INDEX_ZERO
    assert PVIIndex.parse("1000") == INDEX_1000
    assert PVIIndex.parse("1,0,0,0") == INDEX_1000
    with pytest.raises(ValueError):
        PVIIndex.parse("-1,0,0,0")


def test_z_rs_against_lattice_oracle(ctx_oblique):
    assert abs(z_rs(ctx_oblique, 0.3, 0.2) - Z_LATTICE_03_02) < 1e-9


def test_z_rs_odd(ctx_oblique):
    a = z_rs(ctx_oblique, 0.3, 0.2)
    b = z_rs(ctx_oblique, -0.3, -0.2)
    assert abs(a + b) < 1e-10


def test_z_rs_complex_arguments(ctx_oblique):
    val = z_rs(ctx_oblique, 0.3 + 0.1j, 0.2 - 0.05j)
    r, s = 0.3 + 0.1j, 0.2 - 0.05j
    direct = wzeta(ctx_oblique, r + s * ctx_oblique.tau) - r * ctx_oblique.eta1 - s * ctx_oblique.eta2
    assert abs(val - direct) < 1e-12


def test_z_rs_half_lattice_rejected(ctx_oblique):
    with pytest.raises(HalfPeriodError):
        z_rs(ctx_oblique, 0.5, 0.0)


def test_hitchin_wp_value_and_sign_symmetry(ctx_oblique):
    pt, val = hitchin_p(ctx_oblique, 0.3, 0.2)
    a = 0.3 + 0.2 * ctx_oblique.tau
    wa, wpa = wp(ctx_oblique, a)
    assert abs(val - (wa + wpa / (2 * z_rs(ctx_oblique, 0.3, 0.2)))) < 1e-10
    _, val2 = hitchin_p(ctx_oblique, -0.3, -0.2)
    assert abs(val - val2) < 1e-9
    assert abs(wp(ctx_oblique, pt.z)[0] - val) < 1e-9 * max(1, abs(val))


def test_hitchin_satisfies_addition_form(ctx_oblique):
    # the defining value makes a = r + s*tau a critical point of G_p
    pt, val = hitchin_p(ctx_oblique, 0.3, 0.2)
    a = 0.3 + 0.2 * ctx_oblique.tau
    wa, wpa = wp(ctx_oblique, a)
    lhs = wzeta(ctx_oblique, a + pt.z) + wzeta(ctx_oblique, a - pt.z) - 2 * wzeta(ctx_oblique, a)
    rhs = wpa / (wa - val)
    assert abs(lhs - rhs) < 1e-8 * max(1, abs(rhs))


def test_hitchin_degenerate_locus_raises():
    # tau with an interior critical point of G: the Hitchin denominator
    # Z_{r,s} vanishes exactly on the critical set of the Green gradient
    c = make_context(0.5 + 0.866j)
    nt = [p for p in find_critical_points(c, None, seeds_per_axis=14)
          if p.kind == "nontrivial"]
    assert nt, "expected an interior critical point at this tau"
    r, s = nt[0].location.r, nt[0].location.s
    assert abs(green_grad(c, r + s * c.tau)) < 1e-10
    with pytest.raises(DegenerateParameterError):
        hitchin_p(c, r, s)


def test_okamoto_sign_symmetry_and_guard(ctx_oblique):
    _, val = okamoto_p_1000(ctx_oblique, 0.3, 0.2)
    _, val2 = okamoto_p_1000(ctx_oblique, -0.3, -0.2)
    assert abs(val - val2) < 1e-9
    with pytest.raises(DegenerateParameterError):
        okamoto_p_1000(ctx_oblique, 0.3, 0.2, degenerate_tol=1e6)


def test_p_solution_unsupported_index(ctx_oblique):
    with pytest.raises(UnsupportedIndexError):
        p_solution(ctx_oblique, PVIIndex(0, 1, 0, 0), 0.3, 0.2)


@pytest.mark.parametrize("index,cap", [(INDEX_ZERO, 1e-5), (INDEX_1000, 1e-4)])
def test_epvi_residual_small_and_second_order(index, cap):
    res_h = epvi_residual(index, 0.3, 0.2, TAU, 1e-3)
    assert res_h < cap
    # convergence order measured at larger steps, clear of the FD noise floor
    r1 = epvi_residual(index, 0.3, 0.2, TAU, 4e-3)
    r2 = epvi_residual(index, 0.3, 0.2, TAU, 2e-3)
    order = np.log2(r1 / r2)
    assert 1.6 < order < 2.4, f"observed order {order}"


def test_epvi_residual_detects_perturbation(ctx_oblique):
    """A wrong p (wp-value shifted by 0.1) must fail the equation by far
    more than the true solution does."""
    from painleve_torus import invert_wp

    h = 1e-3
    tau = TAU
    ctxs = {d: make_context(tau + d * h) for d in (-1, 0, 1)}
    ps = {}
    for d, c in ctxs.items():
        _, val = hitchin_p(c, 0.3, 0.2)
        pt = invert_wp(c, val + 0.1)
        ps[d] = pt.r + pt.s * c.tau
    p0 = ps[0]
    pp = nearest_representative(ctxs[1], p0, ps[1])
    pm = nearest_representative(ctxs[-1], p0, ps[-1])
    d2 = (pp - 2 * p0 + pm) / h**2
    rhs = 0j
    for alpha, w in zip(INDEX_ZERO.alphas, half_periods(ctxs[0])):
        rhs += float(alpha) * wp(ctxs[0], p0 + w)[1]
    rhs *= -1 / (4 * np.pi**2)
    perturbed = abs(d2 - rhs)
    true = epvi_residual(INDEX_ZERO, 0.3, 0.2, tau, h)
    assert perturbed > 10 * true


def test_a_from_hitchin_richardson():
    a1 = a_from_hitchin(0.3, 0.2, TAU, h=2e-4)
    a2 = a_from_hitchin(0.3, 0.2, TAU, h=1e-4)
    a3 = a_from_hitchin(0.3, 0.2, TAU, h=5e-5)
    e1, e2 = abs(a1 - a3), abs(a2 - a3)
    assert e2 < 0.5 * e1  # consistent with O(h^2)


def test_gle_symmetry_under_negation(ctx_oblique):
    # GLE(n, p, A) = GLE(n, -p, -A): the apparent constant is invariant
    st = hitchin_state(0.3, 0.2, TAU)
    b1 = apparent_B(ctx_oblique, INDEX_ZERO, st.p, st.A)
    b2 = apparent_B(ctx_oblique, INDEX_ZERO, -st.p, -st.A)
    assert abs(b1 - b2) < 1e-10 * max(1, abs(b1))


def test_flow_matches_closed_form_at_endpoint():
    st = hitchin_state(0.3, 0.2, TAU)
    states = hamiltonian_flow(INDEX_ZERO, st, TAU + 0.2j, steps=4)
    c1 = make_context(TAU + 0.2j)
    pt, _ = hitchin_p(c1, 0.3, 0.2)
    target = pt.r + pt.s * c1.tau
    d = abs(nearest_representative(c1, states[-1].p, target) - states[-1].p)
    assert d < 1e-6


def test_flow_reversible():
    st = hitchin_state(0.3, 0.2, TAU)
    fwd = hamiltonian_flow(INDEX_ZERO, st, TAU + 0.15j, steps=3)
    back = hamiltonian_flow(INDEX_ZERO, fwd[-1], TAU, steps=3)
    assert abs(back[-1].p - st.p) < 1e-7
    assert abs(back[-1].A - st.A) < 1e-7


def test_flow_reduced_rhs_for_zero_index():
    """For n = 0 the A-equation drops its half-period sum; a plain RK4 with
    the reduced right-hand side must shadow the package flow."""
    st = hitchin_state(0.3, 0.2, TAU)
    dtau = 0.02j
    n_steps = 40
    y = np.array([st.p, st.A])
    h = 1.0 / n_steps

    def rhs(t, y):
        taut = TAU + t * dtau
        c = make_context(taut)
        p, A = y
        w2p, wp2p = wp(c, 2 * p)
        dp = (-1j / (4 * np.pi)) * (2 * A - wzeta(c, 2 * p) + 2 * p * c.eta1)
        dA = (1j / (4 * np.pi)) * ((2 * w2p + 2 * c.eta1) * A - 1.5 * wp2p)
        return np.array([dp, dA]) * dtau

    t = 0.0
    for _ in range(n_steps):
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h * k1 / 2)
        k3 = rhs(t + h / 2, y + h * k2 / 2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        t += h
    states = hamiltonian_flow(INDEX_ZERO, st, TAU + dtau, steps=1)
    assert abs(states[-1].p - y[0]) < 1e-8
    assert abs(states[-1].A - y[1]) < 1e-8


def test_flow_tiny_step_matches_fd_derivative():
    st = hitchin_state(0.3, 0.2, TAU)
    delta = 1e-3
    states = hamiltonian_flow(INDEX_ZERO, st, TAU + delta, steps=1)
    flow_dp = (states[-1].p - st.p) / delta
    h = 1e-4
    c0 = make_context(TAU)
    cp, cm = make_context(TAU + h), make_context(TAU - h)
    p0 = st.p
    ptp, _ = hitchin_p(cp, 0.3, 0.2)
    ptm, _ = hitchin_p(cm, 0.3, 0.2)
    fd_dp = (nearest_representative(cp, p0, ptp.r + ptp.s * cp.tau)
             - nearest_representative(cm, p0, ptm.r + ptm.s * cm.tau)) / (2 * h)
    assert abs(flow_dp - fd_dp) < 5e-3 * max(1, abs(fd_dp))


def test_flow_half_period_collision():
    c = make_context(TAU)
    p_near = 0.5 + 0.01 + 0.005 * c.tau
    state = hitchin_state(0.3, 0.2, TAU)
    bad = type(state)(tau=TAU, p=complex(p_near), A=state.A, B=state.B)
    with pytest.raises(HalfPeriodCollisionError):
        hamiltonian_flow(INDEX_ZERO, bad, TAU + 0.1j, steps=2)


def test_branch_jump_detected():
    c = make_context(TAU)
    with pytest.raises(BranchJumpError):
        nearest_representative(c, 0.5 + 0.5 * c.tau, 0.003 + 0.001j)


def test_isomonodromy_traces_constant():
    """Traces of N1, N2 drift by < 1e-5 along the flow (monodromy preserving)."""
    from painleve_torus import gle_params, monodromy

    st = hitchin_state(0.3, 0.2, TAU)
    states = hamiltonian_flow(INDEX_ZERO, st, TAU + 0.2j, steps=4)
    tr1, tr2 = [], []
    for s in states[::2]:
        c = make_context(s.tau)
        rep = monodromy(c, gle_params(c, INDEX_ZERO, s.p, s.A))
        tr1.append(np.trace(rep.N1))
        tr2.append(np.trace(rep.N2))
    assert max(abs(t - tr1[0]) for t in tr1) < 1e-5
    assert max(abs(t - tr2[0]) for t in tr2) < 1e-5


def test_hitchin_identity_ties_to_green(rng):
    """a = r + s*tau is a nontrivial critical point of G_p for p the
    closed-form solution: the addition-formula identity across several tau."""
    from painleve_torus import gp_grad

    taus = [0.2 + 1.1j, -0.31 + 0.83j, 0.05 + 1.52j]
    checked = 0
    for tau in taus:
        c = make_context(tau)
        while checked < 17 * (taus.index(tau) + 1):
            r = rng.uniform(0.05, 0.95)
            s = rng.uniform(0.05, 0.95)
            if abs(2 * r - round(2 * r)) < 0.06 and abs(2 * s - round(2 * s)) < 0.06:
                continue
            try:
                if abs(z_rs(c, r, s)) < 0.15:
                    continue
                pt, val = hitchin_p(c, r, s)
            except DegenerateParameterError:
                continue
            a = r + s * c.tau
            p = pt.r + pt.s * c.tau
            assert abs(gp_grad(c, p, a)) < 1e-8
            wa, wpa = wp(c, a)
            assert abs(val - wa - wpa / (2 * z_rs(c, r, s))) < 1e-8 * max(1, abs(val))
            checked += 1
    assert checked >= 51


def test_flow_endpoints_share_monodromy_data():
    """The (r, s) extracted at both ends of a flow agree mod Z and joint sign."""
    from painleve_torus import CompletelyReducible, classify, gle_params, monodromy

    st0 = hitchin_state(0.3, 0.2, TAU)
    states = hamiltonian_flow(INDEX_ZERO, st0, TAU + 0.2j, steps=2)
    got = []
    for st in (states[0], states[-1]):
        c = make_context(st.tau)
        cls = classify(monodromy(c, gle_params(c, INDEX_ZERO, st.p, st.A)))
        assert isinstance(cls, CompletelyReducible)
        got.append((cls.r, cls.s))
    assert abs(got[0][0] - got[1][0]) < 1e-4
    assert abs(got[0][1] - got[1][1]) < 1e-4
