"""Source / flat-panel acquisition geometry on a circular trajectory."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .grid import MODE_2D, MODE_3D, GridSpec


@dataclass(frozen=True)
class ScanGeometry:
    """Point source and flat detector panel, rotated ``n_views`` times about z.

    Positions are given for view 0.  The panel faces the source; its u axis is
    perpendicular to the source-detector direction in the XY plane and its v
    axis is z.  Lines are ordered u-major: ``line = iu * n_v + iv``.
    """

    source: tuple
    detector_center: tuple
    n_u: int
    du: float
    n_views: int
    n_v: int = 1
    dv: float = 0.0

    def __post_init__(self):
        src = tuple(float(c) for c in self.source) + (0.0,) * (3 - len(self.source))
        det = tuple(float(c) for c in self.detector_center) + (0.0,) * (3 - len(self.detector_center))
        object.__setattr__(self, "source", src[:3])
        object.__setattr__(self, "detector_center", det[:3])
        if self.n_views < 1:
            raise InputError(f"need at least one view, got {self.n_views}")
        if self.n_u < 1 or self.n_v < 1:
            raise InputError("detector counts must be positive")
        if not self.du > 0 or (self.n_v > 1 and not self.dv > 0):
            raise InputError("detector spacing must be positive")
        axis = np.subtract(det[:2], src[:2])
        if np.hypot(*axis) == 0.0:
            raise InputError("source and detector centre coincide in the XY plane")
        # opposite sides of the rotation axis
        if np.dot(src[:2], axis) >= 0.0 or np.dot(det[:2], axis) <= 0.0:
            raise InputError("source and detector must lie on opposite sides of the origin")

    @property
    def is_cone(self) -> bool:
        return self.n_v > 1 or self.source[2] != 0.0 or self.detector_center[2] != 0.0

    @property
    def n_lines(self) -> int:
        return self.n_u * self.n_v

    @property
    def d_theta(self) -> float:
        return 360.0 / self.n_views

    @property
    def thetas(self) -> np.ndarray:
        """Source angle of each view in degrees; view 0 is the reference."""
        return np.arange(self.n_views) * self.d_theta

    def _basis(self):
        axis = np.subtract(self.detector_center[:2], self.source[:2])
        axis = axis / np.hypot(*axis)
        return np.array([-axis[1], axis[0], 0.0]), np.array([0.0, 0.0, 1.0])

    def detector_positions(self) -> np.ndarray:
        """View-0 detector element centres, shape ``(n_lines, 3)``."""
        e_u, e_v = self._basis()
        off_u = (np.arange(self.n_u) - (self.n_u - 1) / 2.0) * self.du
        off_v = (np.arange(self.n_v) - (self.n_v - 1) / 2.0) * self.dv
        cu = np.asarray(self.detector_center) + off_u[:, None] * e_u[None, :]
        pos = cu[:, None, :] + off_v[None, :, None] * e_v[None, None, :]
        return pos.reshape(-1, 3)

    def view_lines(self, theta_deg: float) -> tuple[np.ndarray, np.ndarray]:
        """Source position ``(3,)`` and detector positions ``(n_lines, 3)`` for one source angle."""
        c, s = np.cos(np.deg2rad(theta_deg)), np.sin(np.deg2rad(theta_deg))
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return rot @ np.asarray(self.source), self.detector_positions() @ rot.T

    def is_mirror_symmetric(self) -> bool:
        """True when the panel mirrors onto itself across y = 0 and z = 0."""
        return (self.source[1] == 0.0 and self.source[2] == 0.0
                and self.detector_center[1] == 0.0 and self.detector_center[2] == 0.0)

    def describe(self) -> dict:
        return {
            "source": ",".join(repr(c) for c in self.source),
            "detector_center": ",".join(repr(c) for c in self.detector_center),
            "n_u": self.n_u, "n_v": self.n_v, "du": repr(self.du), "dv": repr(self.dv),
            "n_views": self.n_views,
        }


# Standard set-ups.  Grid radii are a local choice; these
# keep the whole cylinder inside the beam.
FAN_RADIUS = 1.0
CONE_RADIUS = 0.45


def standard_fan(n_views: int = 50, n_det: int = 101, spacing: float = 0.05) -> ScanGeometry:
    return ScanGeometry((-8.0, 0.0, 0.0), (8.0, 0.0, 0.0), n_det, spacing, n_views)


def standard_cone(n_views: int = 70, n_det: int = 101, spacing: float = 0.05) -> ScanGeometry:
    return ScanGeometry((-3.0, 0.0, 0.0), (10.0, 0.0, 0.0), n_det, spacing, n_views,
                        n_v=n_det, dv=spacing)


def fan_grid(N: int, radius: float = FAN_RADIUS) -> GridSpec:
    return GridSpec(N, radius / (N // 2), mode=MODE_2D)


def cone_grid(N: int, radius: float = CONE_RADIUS) -> GridSpec:
    r = radius / (N // 2)
    return GridSpec(N, r, r, mode=MODE_3D)
