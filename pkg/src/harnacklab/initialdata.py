"""Initial data constructors.

All builders produce fields with min f >= floor > 0 by construction, so
admissibility never needs rejection sampling.  Every builder is a closed
form in the node coordinates (random ones are closed forms once their
seeded coefficients are drawn), so the same datum can be resampled on a
refined or coarsened mesh of the same manifold, which the convergence
checks rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ManifoldDescriptor, ScalarField


@dataclass(frozen=True)
class ConstantData:
    value: float

    def __post_init__(self):
        if self.value <= 0:
            raise ValueError(f"constant initial data must be positive, got {self.value}")


@dataclass(frozen=True)
class TrigMode:
    """One raised-cosine mode: amplitude * (1 + cos(2 pi index . x / L + phase))."""

    index: tuple[int, ...]
    amplitude: float
    phase: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("mode amplitudes must be nonnegative (keeps the floor a floor)")


@dataclass(frozen=True)
class TrigPolynomialData:
    """floor + sum of raised-cosine modes; min f >= floor since each mode is >= 0."""

    floor: float
    modes: tuple[TrigMode, ...]

    def __post_init__(self):
        if self.floor <= 0:
            raise ValueError(f"floor must be positive, got {self.floor}")


@dataclass(frozen=True)
class RandomSmoothData:
    """floor + amplitude * (1 + ghat)/2 with ghat a seeded band-limited field in [-1, 1].

    ghat is a random trigonometric sum normalized by the closed-form bound
    sum |coefficients|, so the value range is grid-independent.
    """

    seed: int
    mode_cutoff: int
    amplitude: float
    floor: float

    def __post_init__(self):
        if self.floor <= 0:
            raise ValueError(f"floor must be positive, got {self.floor}")
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be nonnegative, got {self.amplitude}")
        if self.mode_cutoff < 1:
            raise ValueError(f"mode cutoff must be >= 1, got {self.mode_cutoff}")


InitialData = ConstantData | TrigPolynomialData | RandomSmoothData


def _torus_mode_field(m: ManifoldDescriptor, index, phase: float) -> np.ndarray:
    k = 2.0 * np.pi * np.asarray(index, dtype=float) / np.asarray(m.torus_side_lengths)
    return np.cos(m.positions @ k + phase)


def _build_trig(m: ManifoldDescriptor, data: TrigPolynomialData) -> np.ndarray:
    if not m.is_torus:
        raise ValueError("trigonometric initial data is only defined on tori")
    values = np.full(m.node_count, data.floor)
    for mode in data.modes:
        if len(mode.index) != m.dimension:
            raise ValueError(
                f"mode index {mode.index} does not match manifold dimension {m.dimension}"
            )
        values += mode.amplitude * (1.0 + _torus_mode_field(m, mode.index, mode.phase))
    return values


def _random_smooth_torus(m: ManifoldDescriptor, data: RandomSmoothData) -> np.ndarray:
    rng = np.random.default_rng(data.seed)
    cutoff = data.mode_cutoff
    ghat = np.zeros(m.node_count)
    total = 0.0
    for raw in np.ndindex(*[2 * cutoff + 1] * m.dimension):
        index = tuple(r - cutoff for r in raw)
        if all(i == 0 for i in index):
            continue
        decay = 1.0 + float(np.dot(index, index))
        coeff = rng.standard_normal() / decay
        phase = rng.uniform(0.0, 2.0 * np.pi)
        ghat += coeff * _torus_mode_field(m, index, phase)
        total += abs(coeff)
    return ghat / total


def _random_smooth_sphere(m: ManifoldDescriptor, data: RandomSmoothData) -> np.ndarray:
    # superposition of plane waves restricted to the sphere: smooth, with the
    # same closed-form sup bound as the torus construction
    rng = np.random.default_rng(data.seed)
    n_waves = 8 * data.mode_cutoff
    ghat = np.zeros(m.node_count)
    total = 0.0
    for _ in range(n_waves):
        direction = rng.standard_normal(3)
        direction /= np.linalg.norm(direction)
        freq = rng.uniform(0.5, float(data.mode_cutoff))
        coeff = rng.standard_normal() / (1.0 + freq * freq)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        ghat += coeff * np.cos(freq * (m.positions @ direction) + phase)
        total += abs(coeff)
    return ghat / total


def build_initial_field(data: InitialData, m: ManifoldDescriptor) -> ScalarField:
    if isinstance(data, ConstantData):
        values = np.full(m.node_count, data.value)
    elif isinstance(data, TrigPolynomialData):
        values = _build_trig(m, data)
    elif isinstance(data, RandomSmoothData):
        ghat = _random_smooth_torus(m, data) if m.is_torus else _random_smooth_sphere(m, data)
        values = data.floor + data.amplitude * (1.0 + ghat) / 2.0
    else:
        raise TypeError(f"unknown initial data spec {type(data).__name__}")
    return ScalarField(values, m)


# ---------------------------------------------------------------------------
# closed forms used by calibration and the equality-case checks


def wrapped_gaussian(
    m: ManifoldDescriptor, center: tuple[float, ...], heat_time: float, floor: float = 1e-120
) -> ScalarField:
    """The heat-kernel profile (4 pi t)^{-n/2} exp(-d^2 / 4t) on a torus.

    d is the minimum-image distance to ``center``.  Images beyond the
    nearest underflow to zero at desk scales, so the nearest image plus a
    tiny positive floor (which keeps the far tail representable and the
    state strictly positive) is the periodization in double precision.
    """
    if not m.is_torus:
        raise ValueError("wrapped Gaussian data is only defined on tori")
    if heat_time <= 0:
        raise ValueError(f"heat_time must be positive, got {heat_time}")
    sides = np.asarray(m.torus_side_lengths)
    delta = np.abs(m.positions - np.asarray(center, dtype=float))
    delta = np.minimum(delta, sides - delta)
    dist_sq = np.sum(delta * delta, axis=1)
    norm = (4.0 * np.pi * heat_time) ** (-m.dimension / 2.0)
    return ScalarField(norm * np.exp(-dist_sq / (4.0 * heat_time)) + floor, m)


def wrapped_distance_sq(m: ManifoldDescriptor, center: tuple[float, ...]) -> np.ndarray:
    """Squared minimum-image distance to ``center`` at every node (torus)."""
    sides = np.asarray(m.torus_side_lengths)
    delta = np.abs(m.positions - np.asarray(center, dtype=float))
    delta = np.minimum(delta, sides - delta)
    return np.sum(delta * delta, axis=1)


@dataclass(frozen=True)
class SingleModeSolution:
    """Exact solution floor + amp (1 + e^{-mu (t-t0)} cos(k.x + phase)) on a torus.

    The raised-cosine datum of ``TrigMode`` splits into a constant and one
    Fourier mode, so it evolves in closed form; mu = |k|^2.
    """

    manifold: ManifoldDescriptor
    mode: TrigMode
    floor: float
    t0: float

    @property
    def wave_vector(self) -> np.ndarray:
        return (
            2.0
            * np.pi
            * np.asarray(self.mode.index, dtype=float)
            / np.asarray(self.manifold.torus_side_lengths)
        )

    @property
    def decay_rate(self) -> float:
        k = self.wave_vector
        return float(np.dot(k, k))

    def initial_data(self) -> TrigPolynomialData:
        return TrigPolynomialData(floor=self.floor, modes=(self.mode,))

    def field_at(self, t: float) -> ScalarField:
        m = self.manifold
        amp = self.mode.amplitude * np.exp(-self.decay_rate * (t - self.t0))
        cos = _torus_mode_field(m, self.mode.index, self.mode.phase)
        return ScalarField(self.floor + self.mode.amplitude + amp * cos, m)

    def quantity_H_at(self, t: float) -> np.ndarray:
        """Exact H = -2 Lap f / f + |grad f|^2 / f^2 - 2n/t for the closed form."""
        m = self.manifold
        k = self.wave_vector
        mu = self.decay_rate
        amp = self.mode.amplitude * np.exp(-mu * (t - self.t0))
        theta = m.positions @ k + self.mode.phase
        f = self.floor + self.mode.amplitude + amp * np.cos(theta)
        lap_f = -mu * amp * np.cos(theta)
        grad_sq = mu * (amp * np.sin(theta)) ** 2
        return -2.0 * lap_f / f + grad_sq / (f * f) - 2.0 * m.dimension / t
