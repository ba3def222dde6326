"""MIMO problem generation: constellations, channels, transmit vectors, noise.

Conventions used throughout the package:

* constellations are normalized to unit mean symbol energy,
* channel entries are i.i.d. circularly-symmetric complex Gaussian CN(0, 1),
* the per-component complex noise variance is ``sigma2 = 10**(-snr_db / 10)``,
  so the default squared search radius ``N * M * 10**(-snr_db / 10)`` equals
  ``M`` times the expected squared noise norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Constellation",
    "MimoInstance",
    "NoiseModel",
    "make_constellation",
    "generate_instance",
    "initial_radius_sq",
    "noise_variance",
    "CONSTELLATION_KINDS",
]

CONSTELLATION_KINDS = ("bpsk", "qpsk", "qam16", "qam64")

# per-axis amplitude levels (before normalization), ascending
_AXIS_LEVELS = {4: (-1.0, 1.0), 16: (-3.0, -1.0, 1.0, 3.0),
                64: (-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0)}


def _gray(i: int) -> int:
    return i ^ (i >> 1)


@dataclass(frozen=True)
class Constellation:
    """A finite complex symbol alphabet with Gray-coded bit labels.

    ``points`` is ordered ascending by (real, imag); tie-breaking and child
    enumeration everywhere in the package refer to indices into this array.
    """

    kind: str
    points: np.ndarray          # complex128, unit mean energy
    bit_labels: tuple[str, ...]  # one bit string per point

    @property
    def bits_per_symbol(self) -> int:
        return len(self.bit_labels[0])

    @property
    def size(self) -> int:
        return self.points.size

    def label_matrix(self) -> np.ndarray:
        """Bit labels as a (size, bits_per_symbol) uint8 matrix."""
        return np.array([[int(b) for b in lab] for lab in self.bit_labels],
                        dtype=np.uint8)

    def nearest(self, values: np.ndarray) -> np.ndarray:
        """Quantize complex values to indices of the nearest points.

        Euclidean metric; ties break toward the lower index.
        """
        values = np.asarray(values, dtype=np.complex128)
        d2 = np.abs(values.reshape(-1, 1) - self.points[None, :]) ** 2
        return d2.argmin(axis=1).reshape(values.shape)


def _square_qam(n_points: int) -> tuple[np.ndarray, tuple[str, ...]]:
    levels = np.array(_AXIS_LEVELS[n_points])
    side = levels.size
    half_bits = side.bit_length() - 1
    energy = np.mean(levels**2) * 2.0
    scale = 1.0 / np.sqrt(energy)
    pts = []
    labels = []
    for i, a in enumerate(levels):
        for q, b in enumerate(levels):
            pts.append((a + 1j * b) * scale)
            lab = format(_gray(i), f"0{half_bits}b") + format(_gray(q), f"0{half_bits}b")
            labels.append(lab)
    return np.array(pts, dtype=np.complex128), tuple(labels)


def make_constellation(kind: str) -> Constellation:
    """Build a normalized constellation for one of bpsk/qpsk/qam16/qam64."""
    k = kind.lower()
    if k == "bpsk":
        pts = np.array([-1.0 + 0j, 1.0 + 0j])
        labels = ("0", "1")
    elif k == "qpsk":
        pts, labels = _square_qam(4)
    elif k == "qam16":
        pts, labels = _square_qam(16)
    elif k == "qam64":
        pts, labels = _square_qam(64)
    else:
        raise ValueError(f"unknown constellation kind: {kind!r}")
    pts.setflags(write=False)
    return Constellation(kind=k, points=pts, bit_labels=labels)


def noise_variance(snr_db: float) -> float:
    """Per-component complex noise variance for a given SNR in dB."""
    return float(10.0 ** (-snr_db / 10.0))


@dataclass(frozen=True)
class NoiseModel:
    """Additive white complex Gaussian noise, zero mean, per-component variance."""

    variance: float

    @classmethod
    def from_snr_db(cls, snr_db: float) -> "NoiseModel":
        return cls(variance=noise_variance(snr_db))


@dataclass(frozen=True)
class MimoInstance:
    """One detection problem: y = H s + n with known channel H.

    ``s_true`` holds indices into ``constellation.points``.
    """

    m: int
    n: int
    constellation: Constellation
    h: np.ndarray        # (n, m) complex channel
    s_true: np.ndarray   # (m,) int symbol indices
    y: np.ndarray        # (n,) complex received vector
    snr_db: float

    @property
    def s_true_values(self) -> np.ndarray:
        return self.constellation.points[self.s_true]


def generate_instance(m: int, n: int, constellation: Constellation,
                      snr_db: float, rng) -> MimoInstance:
    """Draw a random instance: Rayleigh-fading channel, uniform symbols, AWGN.

    ``rng`` is an integer seed or a ``numpy.random.Generator``; identical
    seeds give bitwise-identical instances.  Draw order is fixed: channel
    (real then imaginary part), symbols, noise.
    """
    if m > n:
        raise ValueError(f"need m <= n for detection, got m={m} > n={n}")
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    h = (gen.standard_normal((n, m)) + 1j * gen.standard_normal((n, m))) / np.sqrt(2.0)
    s = gen.integers(0, constellation.size, size=m)
    var = noise_variance(snr_db)
    noise = np.sqrt(var / 2.0) * (gen.standard_normal(n) + 1j * gen.standard_normal(n))
    y = h @ constellation.points[s] + noise
    return MimoInstance(m=m, n=n, constellation=constellation, h=h,
                        s_true=s, y=y, snr_db=float(snr_db))


def initial_radius_sq(m: int, n: int, snr_db: float) -> float:
    """Default squared sphere radius: N * M * 10**(-snr_db / 10)."""
    if m < 1 or n < 1:
        raise ValueError("antenna counts must be >= 1")
    return float(n) * float(m) * 10.0 ** (-snr_db / 10.0)
