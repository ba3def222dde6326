"""Linear baseline detectors: matched filter, zero forcing, and MMSE.

Each forms a linear estimate ``x = H_inv @ y`` and quantizes every entry to
the nearest constellation point.  They sit outside the tree-search
complexity metric: campaign reports show zero visited nodes for them.
"""

from __future__ import annotations

import enum

import numpy as np
import scipy.linalg

from .linalg import qr_decompose
from .model import MimoInstance

__all__ = ["LinearKind", "linear_estimate", "linear_decode"]


class LinearKind(enum.Enum):
    MRC = "mrc"
    ZF = "zf"
    MMSE = "mmse"

    @classmethod
    def from_name(cls, name) -> "LinearKind":
        if isinstance(name, cls):
            return name
        key = str(name).lower()
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown linear decoder: {name!r}")


def linear_estimate(instance: MimoInstance, kind) -> np.ndarray:
    """Unquantized linear estimate of the transmitted vector.

    MRC applies the plain matched filter ``H^H y`` (meaningful for
    phase-keyed alphabets); ZF solves the least-squares system through the
    QR factors rather than forming an explicit pseudo-inverse; MMSE
    regularizes the normal equations by the reciprocal linear SNR.
    """
    kind = LinearKind.from_name(kind)
    h = instance.h
    y = instance.y
    if kind is LinearKind.MRC:
        return h.conj().T @ y
    if kind is LinearKind.ZF:
        fac = qr_decompose(h)  # raises on rank deficiency
        m = instance.m
        rhs = (fac.q.conj().T @ y)[:m]
        return scipy.linalg.solve_triangular(fac.r[:m, :m], rhs)
    snr_lin = 10.0 ** (instance.snr_db / 10.0)
    gram = h.conj().T @ h + (1.0 / snr_lin) * np.eye(instance.m)
    return np.linalg.solve(gram, h.conj().T @ y)


def linear_decode(instance: MimoInstance, kind) -> np.ndarray:
    """Decode to constellation indices by quantizing the linear estimate."""
    return instance.constellation.nearest(linear_estimate(instance, kind))
