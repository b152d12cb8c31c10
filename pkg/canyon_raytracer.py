#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Incoherent image-method ray tracing for a straight street canyon.

Two parallel dielectric walls at y=0 and y=W plus a flat ground. The
direct ray, every wall image up to ``max_wall_reflections`` bounces, and
the same family with one ground bounce are summed in power.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from common_runtime import DomainError, ToolConfig
from propagation_models import FREQUENCY_HZ, wavelength_m


LOGGER = logging.getLogger(__name__)

DEFAULT_MAX_WALL_REFLECTIONS = 10


class Surface(str, Enum):
    WALL = "wall"
    GROUND = "ground"


@dataclass(frozen=True)
class CanyonGeometry:
    street_width_m: float = 30.0
    wall_rel_permittivity: float = 5.0
    bs_height_m: float = 18.0
    ue_height_m: float = 1.5
    bs_lateral_offset_m: float = 7.5
    ue_lateral_offset_m: float = 7.5
    max_wall_reflections: int = DEFAULT_MAX_WALL_REFLECTIONS
    include_ground: bool = True
    frequency_hz: float = FREQUENCY_HZ

    def __post_init__(self) -> None:
        if not self.street_width_m > 0:
            raise DomainError(f"El ancho de calle debe ser positivo (recibido {self.street_width_m})")
        if not self.wall_rel_permittivity > 1:
            raise DomainError(f"eps_r debe ser > 1 (recibido {self.wall_rel_permittivity})")
        if not (self.bs_height_m > 0 and self.ue_height_m > 0):
            raise DomainError("Las alturas de BS y UE deben ser positivas")
        for name in ("bs_lateral_offset_m", "ue_lateral_offset_m"):
            offset = getattr(self, name)
            if not 0 <= offset <= self.street_width_m:
                raise DomainError(f"{name}={offset} fuera de [0, {self.street_width_m}]")
        if self.max_wall_reflections < 0:
            raise DomainError("max_wall_reflections debe ser >= 0")

    @classmethod
    def from_config(cls, config: ToolConfig) -> "CanyonGeometry":
        return cls(
            street_width_m=config.get_float("canyon.width_m"),
            wall_rel_permittivity=config.get_float("canyon.eps_r"),
            bs_height_m=config.get_float("canyon.bs_height_m"),
            ue_height_m=config.get_float("canyon.ue_height_m"),
            bs_lateral_offset_m=config.get_float("canyon.bs_offset_m"),
            ue_lateral_offset_m=config.get_float("canyon.ue_offset_m"),
            max_wall_reflections=config.get_int("canyon.max_bounces"),
            include_ground=config.get_bool("canyon.ground"),
            frequency_hz=config.get_float("frequency_hz"),
        )


@dataclass(frozen=True)
class RayContribution:
    wall_bounce_count: int
    ground_bounce: bool
    path_length_m: float
    power_gain_linear: float


def _fresnel_power(cos_theta: np.ndarray, eps_r: float, surface: Surface) -> np.ndarray:
    sin2 = 1.0 - cos_theta**2
    root = np.sqrt(eps_r - sin2)
    if surface is Surface.WALL:
        gamma = (cos_theta - root) / (cos_theta + root)
    else:
        gamma = (eps_r * cos_theta - root) / (eps_r * cos_theta + root)
    return gamma**2


def fresnel_reflection_vpol(
    incidence_angle_rad: float,
    eps_r: float,
    surface: Surface | str = Surface.WALL,
) -> float:
    """|Gamma|^2 for a vertically polarised wave.

    The field is perpendicular (TE) to the plane of incidence on a vertical
    wall and parallel (TM) to it on the ground.
    """
    if not 0 <= incidence_angle_rad < np.pi / 2:
        raise DomainError(f"Ángulo de incidencia fuera de [0, pi/2): {incidence_angle_rad}")
    if not eps_r > 1:
        raise DomainError(f"eps_r debe ser > 1 (recibido {eps_r})")
    value = _fresnel_power(np.asarray(np.cos(incidence_angle_rad)), eps_r, Surface(surface))
    return float(np.clip(value, 0.0, 1.0))


def _image_families(geometry: CanyonGeometry) -> list[tuple[float, int]]:
    """Lateral image positions with their wall-bounce counts."""
    w = geometry.street_width_m
    yb = geometry.bs_lateral_offset_m
    k_max = geometry.max_wall_reflections
    families: list[tuple[float, int]] = []
    for k in range(-k_max, k_max + 1):
        even = 2 * abs(k)
        if even <= k_max:
            families.append((2 * k * w + yb, even))
        odd = abs(2 * k - 1)
        if odd <= k_max:
            families.append((2 * k * w - yb, odd))
    families.sort(key=lambda item: (item[1], item[0]))
    return families


def enumerate_rays(geometry: CanyonGeometry, range_m: float) -> list[RayContribution]:
    if not range_m >= 1:
        raise DomainError(f"El alcance debe ser >= 1 m (recibido {range_m})")
    lam = wavelength_m(geometry.frequency_hz)
    eps = geometry.wall_rel_permittivity
    ground_options = (False, True) if geometry.include_ground else (False,)

    rays: list[RayContribution] = []
    for image_y, bounces in _image_families(geometry):
        dy = image_y - geometry.ue_lateral_offset_m
        for ground in ground_options:
            dz = geometry.bs_height_m + geometry.ue_height_m if ground else geometry.bs_height_m - geometry.ue_height_m
            length = float(np.sqrt(range_m**2 + dy**2 + dz**2))
            power = (lam / (4.0 * np.pi * length)) ** 2
            if bounces:
                power *= float(_fresnel_power(np.asarray(abs(dy) / length), eps, Surface.WALL)) ** bounces
            if ground:
                power *= float(_fresnel_power(np.asarray(dz / length), eps, Surface.GROUND))
            rays.append(RayContribution(bounces, ground, length, power))
    return rays


def incoherent_path_gain(geometry: CanyonGeometry, range_m: float) -> float:
    rays = enumerate_rays(geometry, range_m)
    total = sum(ray.power_gain_linear for ray in rays)
    return float(10.0 * np.log10(total))


def path_gain_profile(geometry: CanyonGeometry, ranges_m: np.ndarray) -> tuple[np.ndarray, int]:
    """Gain over a range grid and the per-point ray count."""
    ranges = np.asarray(ranges_m, dtype=float)
    gains = np.array([incoherent_path_gain(geometry, r) for r in ranges])
    n_rays = len(_image_families(geometry)) * (2 if geometry.include_ground else 1)
    LOGGER.debug("Trazado de rayos: %d puntos, %d rayos por punto", ranges.size, n_rays)
    return gains, n_rays
