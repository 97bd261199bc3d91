"""Shading mathematics for illuminated streamlines.

Line lighting for curves (codimension 2) uses the tangent-based form of the
Phong terms: with unit light L, view V and tangent T, the effective diffuse
and specular factors depend only on L.T and V.T. The headlight case (L = V)
collapses to a one-dimensional intensity table indexed by t1 = (L.T + 1)/2,
plus a homogeneous transform that turns tangents into texture coordinates.
Linear fog and autofocus geometry complete the renderer inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np


@dataclass(frozen=True)
class LightingParams:
    """Ambient/diffuse/specular intensities and exponents.

    p compensates the overly bright tangent-based diffuse term; the default
    follows the published excess-brightness argument, with 2 as a cheaper
    alternative.
    """

    ka: float = 0.1
    kd: float = 0.6
    ks: float = 0.3
    s: float = 16.0
    p: float = 4.7635

    def __post_init__(self) -> None:
        for v, name in ((self.ka, "ka"), (self.kd, "kd"), (self.ks, "ks")):
            if not (0.0 <= v <= 1.0):
                raise ValueError("%s must lie in [0, 1]" % name)
        if self.s < 1:
            raise ValueError("specular exponent must be >= 1")
        if not (self.p > 0):
            raise ValueError("diffuse exponent must be positive")


@dataclass
class LightTable:
    """Headlight intensity indexed by t1 = (L.T + 1)/2 in [0, 1]."""

    entries: np.ndarray

    @property
    def resolution(self) -> int:
        return len(self.entries)

    def lookup(self, t1: float) -> float:
        """Linear interpolation between adjacent entries; t1 clamped."""
        t = min(max(t1, 0.0), 1.0) * (self.resolution - 1)
        i = min(int(t), self.resolution - 2)
        f = t - i
        return float(self.entries[i] * (1.0 - f) + self.entries[i + 1] * f)


def build_light_table(params: LightingParams, resolution: int = 256) -> LightTable:
    """Tabulate ka + kd*(sqrt(1-u^2))^p + ks*max(1-2u^2, 0)^s, u = 2 t1 - 1."""
    if resolution < 2:
        raise ValueError("table resolution must be >= 2")
    entries = np.empty(resolution)
    for i in range(resolution):
        u = 2.0 * i / (resolution - 1) - 1.0
        diffuse = math.sqrt(max(1.0 - u * u, 0.0)) ** params.p
        specular = max(1.0 - 2.0 * u * u, 0.0) ** params.s
        entries[i] = params.ka + params.kd * diffuse + params.ks * specular
    return LightTable(entries=entries)


def line_intensity(L: Sequence[float], V: Sequence[float], T: Sequence[float],
                   params: LightingParams) -> float:
    """Two-vector reference evaluation of the tangent-based Phong terms.

    L.N = sqrt(1 - (L.T)^2) for the normal closest to the light, and
    V.R = sqrt(1-(L.T)^2) sqrt(1-(V.T)^2) - (L.T)(V.T) for the reflection;
    the diffuse term carries the compensation exponent p.
    """
    L = np.asarray(L, dtype=float)
    V = np.asarray(V, dtype=float)
    T = np.asarray(T, dtype=float)
    for v in (L, V, T):
        if abs(np.linalg.norm(v) - 1.0) > 1e-6:
            raise ValueError("lineIntensity expects unit vectors")
    lt = float(np.dot(L, T))
    vt = float(np.dot(V, T))
    ln = math.sqrt(max(1.0 - lt * lt, 0.0))
    vn = math.sqrt(max(1.0 - vt * vt, 0.0))
    vr = ln * vn - lt * vt
    return params.ka + params.kd * ln ** params.p + params.ks * max(vr, 0.0) ** params.s


def texture_transform(L: Sequence[float], V: Sequence[float]) -> np.ndarray:
    """4x4 homogeneous transform mapping (T, 1) to texture coordinates.

    Row results: t1 = (L.T + 1)/2, t2 = (V.T + 1)/2, 0, and the homogeneous
    1; GPU texture units apply it to per-vertex tangents.
    """
    L = np.asarray(L, dtype=float)
    V = np.asarray(V, dtype=float)
    return 0.5 * np.array([
        [L[0], L[1], L[2], 1.0],
        [V[0], V[1], V[2], 1.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 2.0],
    ])


def texture_coords(M: np.ndarray, T: Sequence[float]) -> Tuple[float, float]:
    """Apply the transform to a unit tangent; returns (t1, t2)."""
    th = M @ np.array([T[0], T[1], T[2], 1.0])
    return float(th[0]), float(th[1])


@dataclass(frozen=True)
class FogParams:
    """Linear depth cue: full intensity at z_start, extinction at z_end."""

    z_start: float
    z_end: float
    start_factor: float = 1.0
    stop_factor: float = 1.0

    def __post_init__(self) -> None:
        if not (self.z_start < self.z_end):
            raise ValueError("fog requires z_start < z_end")


def fog_factor(z: float, fog: FogParams) -> float:
    f = (fog.z_end - z) / (fog.z_end - fog.z_start)
    return min(max(f, 0.0), 1.0)


@dataclass
class CameraPose:
    """Orbit camera: focus point plus azimuth/elevation/twist and distance."""

    focus_point: Tuple[float, float, float]
    azimuth: float = 0.0
    elevation: float = 0.0
    twist: float = 0.0
    distance: float = 1.0

    def __post_init__(self) -> None:
        if not (self.distance > 0):
            raise ValueError("camera distance must be positive")


def autofocus(box_min: Sequence[float], box_max: Sequence[float],
              fov: float = math.radians(45.0),
              start_factor: float = 1.0,
              stop_factor: float = 1.0) -> Tuple[Tuple[float, float, float], float, FogParams]:
    """Camera distance and fog range framing a box's bounding sphere.

    The sphere (box center, half-diagonal radius r) fits the view cone of
    angle fov at distance r / sin(fov/2); fog spans the sphere scaled by the
    start/stop factors.
    """
    lo = np.asarray(box_min, dtype=float)
    hi = np.asarray(box_max, dtype=float)
    r = 0.5 * float(np.linalg.norm(hi - lo))
    if r <= 0.0:
        raise ValueError("autofocus requires a non-degenerate box")
    center = tuple(0.5 * (lo + hi))
    distance = r / math.sin(fov / 2.0)
    fog = FogParams(z_start=distance - start_factor * r,
                    z_end=distance + stop_factor * r,
                    start_factor=start_factor, stop_factor=stop_factor)
    return center, distance, fog


@dataclass(frozen=True)
class ColorMap:
    """Piecewise-linear map through equally spaced RGB control points."""

    name: str
    controls: Tuple[Tuple[float, float, float], ...]

    def __post_init__(self) -> None:
        if len(self.controls) < 2:
            raise ValueError("a colormap needs at least two control points")


COLORMAPS: Dict[str, ColorMap] = {
    "jet": ColorMap("jet", (
        (0.0, 0.0, 1.0),
        (0.0, 1.0, 1.0),
        (1.0, 1.0, 0.0),
        (1.0, 0.0, 0.0),
    )),
    "summer": ColorMap("summer", (
        (0.0, 0.5, 0.4),
        (1.0, 1.0, 0.4),
    )),
}


def map_color(value: float, v_min: float, v_max: float,
              cmap: ColorMap) -> Tuple[float, float, float]:
    """Clamp, normalize and interpolate the value through the control points."""
    if not (v_min < v_max):
        raise ValueError("color scaling requires v_min < v_max")
    t = (min(max(value, v_min), v_max) - v_min) / (v_max - v_min)
    segments = len(cmap.controls) - 1
    pos = t * segments
    i = min(int(pos), segments - 1)
    f = pos - i
    a = cmap.controls[i]
    b = cmap.controls[i + 1]
    return tuple(a[c] * (1.0 - f) + b[c] * f for c in range(3))
