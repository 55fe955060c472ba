"""Polarization tensor container shared by the spectral and boundary-integral solvers."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PolarizationTensor:
    """2x2 polarization tensor with solver provenance.

    Parameters
    ----------
    T : ndarray, shape (2, 2)
        Tensor entries, real.
    provenance : str
        "spectral" (Fourier disk solver, resolution = truncation order) or
        "bem" (Nystrom boundary solver, resolution = node count).
    resolution : int
        Truncation order N or mesh size n, depending on provenance.
    """

    T: np.ndarray
    provenance: str
    resolution: int

    def __post_init__(self):
        T = np.asarray(self.T, dtype=float)
        if T.shape != (2, 2):
            raise ValueError("polarization tensor must be 2x2")
        object.__setattr__(self, "T", T)

    def norm(self) -> float:
        """Spectral (2-)norm of the tensor."""
        return float(np.linalg.norm(self.T, 2))

    def to_dict(self) -> dict:
        return {
            "T11": float(self.T[0, 0]),
            "T12": float(self.T[0, 1]),
            "T21": float(self.T[1, 0]),
            "T22": float(self.T[1, 1]),
            "provenance": self.provenance,
            "resolution": int(self.resolution),
        }


def write_pt_json(pt: PolarizationTensor, path) -> None:
    with open(path, "w") as f:
        json.dump(pt.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")


def read_pt_json(path) -> PolarizationTensor:
    with open(path) as f:
        d = json.load(f)
    T = np.array([[d["T11"], d["T12"]], [d["T21"], d["T22"]]], dtype=float)
    return PolarizationTensor(T=T, provenance=d["provenance"], resolution=d["resolution"])
