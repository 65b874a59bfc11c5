"""Detector geometry, phase configurations and transfer matrices.

Sources sit on a line with spacing ``d``; source ``n`` (1-based) is a
distance ``n * d`` from the origin. A far-field detector at angle ``theta_m``
sees adjacent-source phase difference ``k * d * sin(theta_m)`` and the path
from source ``n`` picks up ``n`` times that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

#: Angles (radians) closer than this are treated as the same detector.
ANGLE_TOLERANCE = 1e-9

Norm = Union[str, float]
NORM_CONVENTIONS = ("unit", "sqrt_modes")


class InfeasibleGeometryError(ValueError):
    """Raised when phases cannot be produced by any detector angle."""

    def __init__(self, message: str, min_kd: float):
        super().__init__(message)
        self.min_kd = min_kd


def _check_finite(values, what):
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{what} must be finite, got {v!r}")


def _check_distinct(values, tol, what):
    ordered = sorted(values)
    for a, b in zip(ordered, ordered[1:]):
        if b - a <= tol:
            raise ValueError(f"duplicate {what}: {a!r} and {b!r} coincide")


@dataclass(frozen=True)
class Geometry:
    """Physical layout: ``n_sources`` emitters, one detector per emitter."""

    n_sources: int
    spacing_d: float
    wavenumber_k: float
    detector_angles: tuple

    def __post_init__(self):
        object.__setattr__(self, "detector_angles", tuple(float(a) for a in self.detector_angles))
        if int(self.n_sources) != self.n_sources or self.n_sources < 2:
            raise ValueError(f"need at least 2 sources, got {self.n_sources!r}")
        _check_finite([self.spacing_d, self.wavenumber_k], "spacing and wavenumber")
        _check_finite(self.detector_angles, "detector angles")
        if self.spacing_d <= 0 or self.wavenumber_k <= 0:
            raise ValueError("spacing_d and wavenumber_k must be positive")
        if len(self.detector_angles) != self.n_sources:
            raise ValueError(
                f"{self.n_sources} sources need {self.n_sources} detector angles, "
                f"got {len(self.detector_angles)}"
            )
        for a in self.detector_angles:
            if not -math.pi / 2 <= a <= math.pi / 2:
                raise ValueError(f"detector angle {a!r} outside [-pi/2, pi/2]")
        _check_distinct(self.detector_angles, ANGLE_TOLERANCE, "detector angles")

    @property
    def kd(self) -> float:
        return self.wavenumber_k * self.spacing_d

    def to_dict(self) -> dict:
        return {
            "n": self.n_sources,
            "d": self.spacing_d,
            "k": self.wavenumber_k,
            "angles": list(self.detector_angles),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Geometry":
        return cls(int(data["n"]), float(data["d"]), float(data["k"]), tuple(data["angles"]))


@dataclass(frozen=True)
class PhaseConfig:
    """Adjacent-source phase differences, one per detector (radians).

    ``physical`` records that a :class:`Geometry` producing these phases is
    known to exist; such configs must have pairwise distinct entries.
    """

    deltas: tuple
    physical: bool = field(default=False)

    def __post_init__(self):
        object.__setattr__(self, "deltas", tuple(float(x) for x in self.deltas))
        if len(self.deltas) < 2:
            raise ValueError(f"need at least 2 phases, got {len(self.deltas)}")
        _check_finite(self.deltas, "phases")
        if self.physical:
            _check_distinct(self.deltas, 0.0, "phases")

    @property
    def n(self) -> int:
        return len(self.deltas)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.deltas, dtype=float)

    def to_dict(self) -> dict:
        return {"deltas": list(self.deltas), "physical": self.physical}

    @classmethod
    def from_dict(cls, data: dict) -> "PhaseConfig":
        return cls(tuple(data["deltas"]), bool(data.get("physical", False)))


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Source-to-detector amplitudes; row ``n-1`` is source ``n``, column ``m`` a detector."""

    entries: np.ndarray
    c_norm: float = 1.0
    norm_convention: Norm = "unit"

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def norm_factor(norm: Norm, n: int) -> float:
    """Coefficient modulus for a named convention or an explicit scalar."""
    if isinstance(norm, str):
        if norm == "unit":
            return 1.0
        if norm == "sqrt_modes":
            return 1.0 / math.sqrt(n)
        raise ValueError(f"unknown norm convention {norm!r}; use one of {NORM_CONVENTIONS} or a number")
    value = float(norm)
    if not math.isfinite(value) or value <= 0:
        raise ValueError(f"custom norm must be a positive finite number, got {norm!r}")
    return value


def phases_from_geometry(geom: Geometry) -> PhaseConfig:
    kd = geom.kd
    return PhaseConfig(tuple(kd * math.sin(a) for a in geom.detector_angles), physical=True)


def angles_from_phases(phases: PhaseConfig, k: float, d: float) -> Geometry:
    """Detector angles that realise ``phases`` for sources with spacing ``d``.

    Raises :class:`InfeasibleGeometryError` if some ``|phase| > k*d``; the
    error carries the smallest ``k*d`` that would work.
    """
    if k <= 0 or d <= 0:
        raise ValueError("k and d must be positive")
    kd = k * d
    need = max(abs(p) for p in phases.deltas)
    if need > kd:
        raise InfeasibleGeometryError(
            f"phase {need!r} exceeds k*d = {kd!r}; smallest feasible k*d is {need!r}",
            min_kd=need,
        )
    _check_distinct(phases.deltas, 0.0, "phases")
    angles = tuple(math.asin(p / kd) for p in phases.deltas)
    return Geometry(phases.n, d, k, angles)


def phase_factors(deltas: np.ndarray, c_norm: float = 1.0) -> np.ndarray:
    """Entries ``c_norm * exp(-i n delta_m)`` for phase arrays of shape ``(..., N)``.

    Each phase is reduced modulo 2*pi before scaling by the row index, so a
    float shift by ``2*np.pi`` that is itself exact gives bitwise identical
    entries; the product is reduced again before ``exp``.
    """
    deltas = np.asarray(deltas, dtype=float)
    n = deltas.shape[-1]
    rows = np.arange(1, n + 1, dtype=float)[:, None]
    reduced = np.mod(deltas, 2 * np.pi)[..., None, :]
    return c_norm * np.exp(-1j * np.mod(rows * reduced, 2 * np.pi))


def build_transfer_matrix(phases: PhaseConfig, norm: Norm = "unit") -> TransferMatrix:
    c = norm_factor(norm, phases.n)
    return TransferMatrix(phase_factors(phases.as_array(), c), c, norm)


def phase_matrix(deltas: Sequence[float], norm: Norm = "unit") -> np.ndarray:
    """Shorthand for ``build_transfer_matrix(PhaseConfig(deltas), norm).entries``."""
    return build_transfer_matrix(PhaseConfig(tuple(deltas)), norm).entries
