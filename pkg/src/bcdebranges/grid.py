"""Uniform grids, trapezoid weights and potential handling shared by all systems."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

PotentialLike = Union[None, float, str, Sequence[float], np.ndarray, "SampledPotential", Callable]


@dataclass(frozen=True)
class UniformGrid:
    """Uniform grid with ``points`` nodes on ``[0, length]``."""

    length: float
    points: int

    def __post_init__(self):
        if not (self.length > 0 and np.isfinite(self.length)):
            raise ValueError(f"grid length must be positive and finite, got {self.length}")
        if int(self.points) != self.points or self.points < 2:
            raise ValueError(f"grid needs at least 2 points, got {self.points}")

    @property
    def h(self) -> float:
        return self.length / (self.points - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.points)

    @property
    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.points, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w


@dataclass(frozen=True)
class SampledPotential:
    """Real samples of a potential on a uniform grid over ``[0, length]``.

    Evaluation is piecewise linear inside the sampled range and zero
    outside of it.
    """

    values: np.ndarray
    length: float
    grid: UniformGrid = field(init=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("potential samples must be a 1-d array with at least 2 entries")
        if not np.all(np.isfinite(v)):
            raise ValueError("potential samples must be finite")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "grid", UniformGrid(float(self.length), v.size))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.interp(x, self.grid.nodes, self.values, left=0.0, right=0.0)


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _linear(x):
    return np.asarray(x, dtype=float).copy()


def _sin(x):
    return np.sin(np.asarray(x, dtype=float))


BUILTIN_POTENTIALS: dict[str, Callable] = {"zero": _zero, "linear": _linear, "sin": _sin}


def scaled(func: Callable, scale: float) -> Callable:
    if scale == 1.0:
        return func
    return lambda x: scale * func(x)


def as_potential(spec: PotentialLike, length: float | None = None, scale: float = 1.0) -> Callable:
    """Turn a potential description into a vectorized callable ``x -> q(x)``.

    Accepted forms: ``None`` or ``0`` (zero potential), a builtin name
    (``"zero"``, ``"linear"``, ``"sin"``), a constant, a callable, a
    :class:`SampledPotential`, or a sample array (which then needs
    ``length``, the right end of the sampled interval).
    """
    if spec is None:
        func = _zero
    elif isinstance(spec, str):
        try:
            func = BUILTIN_POTENTIALS[spec]
        except KeyError:
            raise ValueError(f"unknown builtin potential {spec!r}; choose from {sorted(BUILTIN_POTENTIALS)}") from None
    elif isinstance(spec, SampledPotential) or callable(spec):
        func = spec
    elif np.isscalar(spec):
        c = float(spec)
        if not np.isfinite(c):
            raise ValueError("constant potential must be finite")
        func = lambda x: np.full_like(np.asarray(x, dtype=float), c)  # noqa: E731
    else:
        if length is None:
            raise ValueError("sampled potential needs the length of its grid")
        func = SampledPotential(np.asarray(spec, dtype=float), length)
    return scaled(func, float(scale))


def trapezoid_on_grid(values: np.ndarray, grid: UniformGrid, axis: int = -1):
    """Trapezoid rule of samples taken on ``grid`` along ``axis``."""
    v = np.moveaxis(np.asarray(values), axis, -1)
    return v @ grid.trapezoid_weights
