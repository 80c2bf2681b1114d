import numpy as np
import pytest

from painleve_torus import (
    INDEX_1000,
    INDEX_ZERO,
    PVIIndex,
    hitchin_p,
    make_context,
    okamoto_p_1000,
    omega_membership,
    omega_scan,
    torus_distance,
)
from painleve_torus.errors import HalfPeriodError, UnsupportedIndexError


@pytest.fixture(scope="module")
def scan32():
    return omega_scan(1j, INDEX_ZERO, 32)


def test_membership_round_trip_zero_index(ctx_square):
    pt, _ = hitchin_p(ctx_square, 0.3, 0.2)
    p = pt.r + pt.s * ctx_square.tau
    wit = omega_membership(ctx_square, p, INDEX_ZERO)
    assert wit is not None
    back, _ = hitchin_p(ctx_square, wit.r, wit.s)
    d = min(torus_distance(ctx_square, back.z, p), torus_distance(ctx_square, back.z, -p))
    assert d < 1e-6
    assert wit.residual < 1e-8


def test_membership_round_trip_lift(ctx_square):
    pt, _ = okamoto_p_1000(ctx_square, 0.3, 0.2)
    p = pt.r + pt.s * ctx_square.tau
    wit = omega_membership(ctx_square, p, INDEX_1000)
    assert wit is not None
    back, _ = okamoto_p_1000(ctx_square, wit.r, wit.s)
    d = min(torus_distance(ctx_square, back.z, p), torus_distance(ctx_square, back.z, -p))
    assert d < 1e-6


def test_membership_excludes_half_period_neighborhood(ctx_square):
    for w in (0.0, 0.5, 0.5j, 0.5 + 0.5j):
        for phase in (0.1, 1.7, 3.5, 5.1):
            p = w + 0.05 * np.exp(1j * phase)
            assert omega_membership(ctx_square, p, INDEX_ZERO) is None


def test_membership_input_validation(ctx_square):
    with pytest.raises(HalfPeriodError):
        omega_membership(ctx_square, 0.5 + 0j, INDEX_ZERO)
    with pytest.raises(UnsupportedIndexError):
        omega_membership(ctx_square, 0.3 + 0.1j, PVIIndex(0, 1, 0, 0))


def test_scan_symmetric_under_negation(scan32):
    assert np.array_equal(scan32.member, scan32.member[::-1, ::-1])
    assert np.array_equal(scan32.excluded, scan32.excluded[::-1, ::-1])


def test_scan_excluded_ring(scan32):
    c = make_context(1j)
    n = scan32.resolution
    for i in range(n):
        for j in range(n):
            z = scan32.r_cells[i] + scan32.s_cells[j] * 1j
            d = min(torus_distance(c, z, w) for w in (0, 0.5, 0.5j, 0.5 + 0.5j))
            assert scan32.excluded[i, j] == (d < 2.0 / n)
            if scan32.excluded[i, j]:
                assert not scan32.member[i, j]


def test_scan_members_exist_and_match_forward_image(scan32, ctx_square):
    assert scan32.member.sum() > 0
    hits = total = 0
    for r in np.linspace(0.1, 0.9, 5):
        for s in np.linspace(0.1, 0.4, 3):
            pt, _ = hitchin_p(ctx_square, r, s)
            i, j = int(pt.r * 32), int(pt.s * 32)
            if scan32.excluded[i, j]:
                continue
            total += 1
            hits += bool(scan32.member[i, j])
    assert total > 8
    assert hits / total > 0.6  # boundary cells may honestly miss


def test_scan_agrees_with_pointwise_membership(scan32, ctx_square):
    n = scan32.resolution
    rng = np.random.default_rng(7)
    picks = rng.integers(0, n, size=(12, 2))
    for i, j in picks:
        if scan32.excluded[i, j]:
            continue
        p = scan32.r_cells[i] + scan32.s_cells[j] * 1j
        wit = omega_membership(ctx_square, p, INDEX_ZERO)
        assert (wit is not None) == bool(scan32.member[i, j]), (i, j, p, wit)


def test_scan_witnesses_are_valid(scan32, ctx_square):
    n = scan32.resolution
    found = 0
    for i in range(0, n, 3):
        for j in range(0, n, 3):
            if not scan32.member[i, j]:
                continue
            wr, ws = scan32.witness_r[i, j], scan32.witness_s[i, j]
            assert np.isfinite(wr) and np.isfinite(ws)
            assert scan32.residual[i, j] < 1e-3 * 10
            p = scan32.r_cells[i] + scan32.s_cells[j] * 1j
            back, _ = hitchin_p(ctx_square, wr, ws)
            d = min(torus_distance(ctx_square, back.z, p), torus_distance(ctx_square, back.z, -p))
            assert d < 1e-5
            found += 1
    assert found > 5


def test_scan_resolution_validation():
    with pytest.raises(ValueError):
        omega_scan(1j, INDEX_ZERO, 8)


def test_scan_serialization_deterministic(scan32):
    csv1 = scan32.to_csv()
    again = omega_scan(1j, INDEX_ZERO, 32)
    assert again.to_csv() == csv1
    assert again.to_json() == scan32.to_json()
    header, first = csv1.split("\n")[0], csv1.split("\n")[1]
    assert header == "r_cell,s_cell,member,witness_r,witness_s,residual"
    assert len(first.split(",")) == 6


def test_scan_oblique_lift_smoke():
    sample = omega_scan(0.2 + 1.1j, INDEX_1000, 16)
    assert sample.member.sum() > 0
    assert np.array_equal(sample.member, sample.member[::-1, ::-1])
    # spot-check one member cell's witness
    idx = np.argwhere(sample.member)
    c = make_context(0.2 + 1.1j)
    i, j = idx[len(idx) // 2]
    p = sample.r_cells[i] + sample.s_cells[j] * c.tau
    back, _ = okamoto_p_1000(c, sample.witness_r[i, j], sample.witness_s[i, j])
    d = min(torus_distance(c, back.z, p), torus_distance(c, back.z, -p))
    assert d < 1e-4
