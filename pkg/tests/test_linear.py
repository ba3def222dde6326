import numpy as np
import pytest

from mimodec import (LinearKind, generate_instance, linear_decode,
                     linear_estimate, make_constellation)
from mimodec.linalg import RankDeficiencyError
from mimodec.model import MimoInstance

KINDS = ["mrc", "zf", "mmse"]


def _identity_instance(kind="qam16", m=4, seed=0):
    c = make_constellation(kind)
    rng = np.random.default_rng(seed)
    s = rng.integers(0, c.size, m)
    return MimoInstance(m=m, n=m, constellation=c, h=np.eye(m, dtype=complex),
                        s_true=s, y=c.points[s], snr_db=float("inf"))


@pytest.mark.parametrize("kind", KINDS)
def test_identity_channel_noise_free(kind):
    inst = _identity_instance()
    assert np.array_equal(linear_decode(inst, kind), inst.s_true)


def test_zf_exact_before_quantization():
    c = make_constellation("qam64")
    for seed in range(20):
        inst = generate_instance(5, 7, c, float("inf"), seed)
        x = linear_estimate(inst, "zf")
        assert np.abs(x - c.points[inst.s_true]).max() <= 1e-9


def test_mmse_approaches_zf_at_high_snr():
    c = make_constellation("qam16")
    for seed in range(20):
        inst = generate_instance(4, 6, c, 300.0, seed)
        assert np.array_equal(linear_decode(inst, "mmse"),
                              linear_decode(inst, "zf"))


def test_zf_singular_channel_raises():
    c = make_constellation("bpsk")
    h = np.ones((4, 2), dtype=complex)
    inst = MimoInstance(m=2, n=4, constellation=c, h=h,
                        s_true=np.array([0, 1]), y=np.zeros(4, complex),
                        snr_db=10.0)
    with pytest.raises(RankDeficiencyError):
        linear_decode(inst, "zf")


def test_mmse_tolerates_near_singular_channel():
    c = make_constellation("bpsk")
    h = np.ones((4, 2), dtype=complex)
    h[0, 0] += 1e-6
    inst = MimoInstance(m=2, n=4, constellation=c, h=h,
                        s_true=np.array([0, 1]),
                        y=h @ c.points[[0, 1]], snr_db=10.0)
    linear_decode(inst, "mmse")  # regularized solve succeeds


def test_kind_parsing():
    assert LinearKind.from_name("ZF") is LinearKind.ZF
    with pytest.raises(ValueError):
        LinearKind.from_name("dfe")


def test_mmse_beats_zf_statistically():
    # small-scale error-count smoke; the acceptance suite runs the full-size one
    c = make_constellation("bpsk")
    zf_err = 0
    mmse_err = 0
    for seed in range(800):
        inst = generate_instance(8, 8, c, 8.0, seed)
        zf_err += int((linear_decode(inst, "zf") != inst.s_true).sum())
        mmse_err += int((linear_decode(inst, "mmse") != inst.s_true).sum())
    assert mmse_err < zf_err
