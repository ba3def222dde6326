"""Complex matrix kernels for the tree decoders.

QR factorization of the channel, rotation of the observation into the
upper-triangular metric ``||y_bar - R s||^2``, and the batched evaluation of
many candidate suffixes as one matrix product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .model import Constellation, MimoInstance, initial_radius_sq

__all__ = [
    "QrFactors",
    "PreprocessedProblem",
    "RankDeficiencyError",
    "qr_decompose",
    "preprocess",
    "batch_evaluate",
]

# relative pivot threshold under which a channel is treated as rank-deficient
_PIVOT_RTOL = 1e-12


class RankDeficiencyError(np.linalg.LinAlgError):
    """Channel matrix is numerically rank-deficient."""


@dataclass(frozen=True)
class QrFactors:
    """H = Q R with Q unitary (N x N) and R upper-triangular (N x M).

    The diagonal of R is canonicalized to be real and nonnegative so the
    tree levels have a deterministic sign convention across runs.
    """

    q: np.ndarray
    r: np.ndarray


def qr_decompose(h: np.ndarray) -> QrFactors:
    """Full QR factorization of an N x M channel (M <= N), canonicalized.

    Raises :class:`RankDeficiencyError` when a diagonal pivot magnitude
    falls below ``1e-12 * max|h_ij|``.
    """
    h = np.asarray(h, dtype=np.complex128)
    n, m = h.shape
    if m > n:
        raise ValueError(f"need M <= N, got {n}x{m}")
    q, r = np.linalg.qr(h, mode="complete")
    hmax = np.abs(h).max() if h.size else 0.0
    diag = np.abs(np.diagonal(r)[:m])
    if hmax == 0.0 or np.any(diag < _PIVOT_RTOL * hmax):
        raise RankDeficiencyError("channel matrix is rank deficient")
    # rotate each column phase so r_kk is real and >= 0
    phases = np.ones(n, dtype=np.complex128)
    dk = np.diagonal(r)[:m]
    phases[:m] = np.where(np.abs(dk) > 0, dk / np.abs(dk), 1.0)
    q = q * phases[None, :]
    r = phases.conj()[:, None] * r
    return QrFactors(q=q, r=r)


@dataclass(frozen=True)
class PreprocessedProblem:
    """Search-ready form of an instance: minimize ||y_bar - R s||^2.

    ``r`` is the top M x M block of the triangular factor, ``y_bar`` the top
    M entries of Q^H y, and ``offset_sq`` the constant ||(Q^H y)[M:]||^2 that
    separates the reduced metric from ||y - H s||^2.  ``radius_sq`` may be
    ``math.inf`` for unconstrained (benchmark) searches.
    """

    m: int
    constellation: Constellation
    r: np.ndarray
    y_bar: np.ndarray
    radius_sq: float
    offset_sq: float = 0.0
    snr_db: float = float("nan")


RadiusPolicy = Union[str, float]


def _resolve_radius(policy: RadiusPolicy, m: int, n: int, snr_db: float) -> float:
    if isinstance(policy, str):
        name = policy.lower()
        if name == "formula":
            value = initial_radius_sq(m, n, snr_db)
        elif name in ("inf", "infinite", "infinity"):
            return math.inf
        else:
            try:
                value = float(policy)
            except ValueError:
                raise ValueError(f"unknown radius policy: {policy!r}") from None
    else:
        value = float(policy)
    if not value > 0.0:
        raise ValueError(f"squared radius must be positive, got {value}")
    return value


def preprocess(instance: MimoInstance, radius: RadiusPolicy = "formula") -> PreprocessedProblem:
    """QR-transform an instance and fix the initial squared radius.

    ``radius`` is ``"formula"`` (the SNR-based default), ``"infinite"``, or an
    explicit positive squared value.
    """
    fac = qr_decompose(instance.h)
    qy = fac.q.conj().T @ instance.y
    m = instance.m
    y_bar = qy[:m].copy()
    offset = float(np.vdot(qy[m:], qy[m:]).real)
    return PreprocessedProblem(
        m=m,
        constellation=instance.constellation,
        r=fac.r[:m, :m].copy(),
        y_bar=y_bar,
        radius_sq=_resolve_radius(radius, m, instance.n, instance.snr_db),
        offset_sq=offset,
        snr_db=instance.snr_db,
    )


def batch_evaluate(r_sub: np.ndarray, y_star: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Squared residual norms of many suffix candidates at once.

    ``v`` holds one candidate suffix per column (|v| x K), ``r_sub`` is the
    trailing |v| x |v| block of R and ``y_star`` the trailing |v| entries of
    y_bar (broadcast across columns).  Returns the per-column squared norms
    of ``y_star - r_sub @ v``.
    """
    r_sub = np.asarray(r_sub, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128)
    y_star = np.asarray(y_star, dtype=np.complex128)
    if v.ndim != 2:
        raise ValueError(f"candidate matrix must be 2-D, got shape {v.shape}")
    k = v.shape[0]
    if r_sub.shape != (k, k):
        raise ValueError(f"R block shape {r_sub.shape} does not match suffix length {k}")
    if y_star.ndim == 1:
        if y_star.shape[0] != k:
            raise ValueError(f"y_star length {y_star.shape[0]} does not match suffix length {k}")
        y_col = y_star[:, None]
    elif y_star.shape == (k, v.shape[1]):
        y_col = y_star
    else:
        raise ValueError(f"y_star shape {y_star.shape} incompatible with candidates {v.shape}")
    b = y_col - r_sub @ v
    return np.einsum("ij,ij->j", b.conj(), b).real
