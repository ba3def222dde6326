import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimodec import (NoiseModel, generate_instance, initial_radius_sq,
                     make_constellation, noise_variance)

KINDS = ("bpsk", "qpsk", "qam16", "qam64")


@pytest.mark.parametrize("kind,size", [("bpsk", 2), ("qpsk", 4),
                                       ("qam16", 16), ("qam64", 64)])
def test_constellation_sizes_and_energy(kind, size):
    c = make_constellation(kind)
    assert c.size == size
    assert len(c.bit_labels) == size
    assert abs(np.mean(np.abs(c.points) ** 2) - 1.0) <= 1e-12


def test_bpsk_points():
    c = make_constellation("bpsk")
    assert set(np.round(c.points.real, 12)) == {-1.0, 1.0}
    assert np.all(c.points.imag == 0)


def test_qpsk_points():
    c = make_constellation("qpsk")
    expected = {(a / np.sqrt(2), b / np.sqrt(2)) for a in (-1, 1) for b in (-1, 1)}
    got = {(round(p.real, 12), round(p.imag, 12)) for p in c.points}
    assert got == {(round(a, 12), round(b, 12)) for a, b in expected}


def test_qam16_grid():
    c = make_constellation("qam16")
    scale = 1 / np.sqrt(10)
    levels = {round(v * scale, 12) for v in (-3, -1, 1, 3)}
    assert {round(p.real, 12) for p in c.points} == levels
    assert {round(p.imag, 12) for p in c.points} == levels


@pytest.mark.parametrize("kind", KINDS)
def test_labels_distinct_and_gray(kind):
    c = make_constellation(kind)
    assert len(set(c.bit_labels)) == c.size
    # neighbors along either axis differ in exactly one bit
    pts = c.points
    lab = {i: c.bit_labels[i] for i in range(c.size)}
    side = int(round(np.sqrt(c.size))) if kind != "bpsk" else c.size
    reals = np.unique(np.round(pts.real, 12))
    step = reals[1] - reals[0] if reals.size > 1 else 0
    for i in range(c.size):
        for j in range(c.size):
            d = pts[i] - pts[j]
            if abs(abs(d) - step) < 1e-9 and (abs(d.real) < 1e-9 or abs(d.imag) < 1e-9):
                flips = sum(a != b for a, b in zip(lab[i], lab[j]))
                assert flips == 1, (kind, i, j)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        make_constellation("qam256")


@pytest.mark.parametrize("kind", KINDS)
def test_quantizer_idempotent_and_exact(kind):
    c = make_constellation(kind)
    idx = c.nearest(c.points)
    assert np.array_equal(idx, np.arange(c.size))
    rng = np.random.default_rng(0)
    x = rng.standard_normal(256) + 1j * rng.standard_normal(256)
    once = c.nearest(x)
    again = c.nearest(c.points[once])
    assert np.array_equal(once, again)


def test_generate_deterministic():
    c = make_constellation("qam16")
    a = generate_instance(4, 4, c, 12.0, 1)
    b = generate_instance(4, 4, c, 12.0, 1)
    assert np.array_equal(a.h, b.h)
    assert np.array_equal(a.s_true, b.s_true)
    assert np.array_equal(a.y, b.y)


def test_generate_rejects_wide_system():
    c = make_constellation("bpsk")
    with pytest.raises(ValueError):
        generate_instance(3, 2, c, 10.0, 0)


def test_generate_noise_free_limit():
    c = make_constellation("bpsk")
    inst = generate_instance(2, 2, c, float("inf"), 7)
    assert np.allclose(inst.y, inst.h @ c.points[inst.s_true], atol=0, rtol=0)


def test_channel_unit_variance():
    c = make_constellation("bpsk")
    acc = 0.0
    count = 0
    for seed in range(156):  # > 1e4 entries of an 8x8 channel
        inst = generate_instance(8, 8, c, 0.0, seed)
        acc += float(np.sum(np.abs(inst.h) ** 2))
        count += inst.h.size
    assert abs(acc / count - 1.0) < 0.05


def test_noise_model_from_snr():
    assert NoiseModel.from_snr_db(10.0).variance == pytest.approx(0.1)
    assert noise_variance(0.0) == 1.0
    assert noise_variance(float("inf")) == 0.0


def test_symbols_drawn_uniformly():
    c = make_constellation("qpsk")
    counts = np.zeros(4)
    for seed in range(500):
        inst = generate_instance(8, 8, c, 10.0, 1000 + seed)
        counts += np.bincount(inst.s_true, minlength=4)
    freq = counts / counts.sum()
    assert freq.max() / freq.min() < 1.2


def test_noise_variance_matches_snr():
    c = make_constellation("qpsk")
    snr_db = 7.0
    var = noise_variance(snr_db)
    acc = 0.0
    count = 0
    for seed in range(250):
        inst = generate_instance(200, 400, c, snr_db, seed)
        noise = inst.y - inst.h @ c.points[inst.s_true]
        acc += float(np.sum(np.abs(noise) ** 2))
        count += noise.size
    assert count >= 100_000
    assert abs(acc / count - var) / var < 0.03


@pytest.mark.parametrize("m,n,snr,expected", [
    (18, 18, 0.0, 324.0),
    (10, 10, 10.0, 10.0),
    (16, 16, 20.0, 2.56),
])
def test_initial_radius_values(m, n, snr, expected):
    assert initial_radius_sq(m, n, snr) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(m=st.integers(1, 64), n=st.integers(1, 64),
       snr=st.floats(-10, 40), bump=st.floats(0.1, 20))
def test_initial_radius_monotone_and_linear(m, n, snr, bump):
    base = initial_radius_sq(m, n, snr)
    assert base > 0
    assert initial_radius_sq(m, n, snr + bump) < base
    assert initial_radius_sq(2 * m, n, snr) == pytest.approx(2 * base, rel=1e-12)
    assert initial_radius_sq(m, 3 * n, snr) == pytest.approx(3 * base, rel=1e-12)
