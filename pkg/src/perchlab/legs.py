"""Leg geometry, the leg design catalog, and impact-window analysis.

The planar vehicle carries a fore and a hind leg pair.  Each pair is a
rigid link of the given length mounted at a hip +/- mount_x from the
CoM along body x, splayed by angle_psi from body-down (fore tilts
toward +x, hind toward -x).  At the hip sits a torsional spring-damper:
stiffness hinge_k about the rest angle, damping from the ratio
hinge_zeta with the reference inertia of the leg link itself about the
hip (c = 2 zeta sqrt(k I_leg)).

Feet that reach the ceiling adhere and act as pin joints.  The impact
window of a design is the pitch interval, symmetric about 180 deg, in
which a foot touches the ceiling strictly before any body corner or
propeller point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dynamics import QuadParams


@dataclass(frozen=True)
class LegConfig:
    name: str
    length: float                         # hip-to-foot link length [mm]
    angle_psi: float                      # splay from body-down [deg]
    hinge_k: float = 0.08                 # hip torsional stiffness [N mm/rad]
    hinge_zeta: float = 0.25              # hip damping ratio
    foot_attach_tolerance: float = 0.002  # adhesion capture band [m]
    mount_x: float = 0.033                # hip offset from CoM along body x [m]
    pair_mass: float = 0.004              # one leg pair, damping reference only [kg]

    def __post_init__(self) -> None:
        if not (self.length > 0.0 and math.isfinite(self.length)):
            raise ValueError(f"LegConfig.length must be positive, got {self.length!r}")
        if not (0.0 <= self.angle_psi < 90.0):
            raise ValueError(f"LegConfig.angle_psi must be in [0, 90) deg, got {self.angle_psi!r}")
        for name in ("hinge_k", "hinge_zeta", "foot_attach_tolerance", "mount_x", "pair_mass"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(f"LegConfig.{name} must be positive, got {v!r}")

    @property
    def length_m(self) -> float:
        return self.length * 1.0e-3

    @property
    def psi_rad(self) -> float:
        return math.radians(self.angle_psi)

    @property
    def hinge_k_si(self) -> float:
        """Hip stiffness in N m/rad."""
        return self.hinge_k * 1.0e-3

    @property
    def hinge_ref_inertia(self) -> float:
        """Leg-pair link inertia about the hip (uniform rod) [kg m^2]."""
        return self.pair_mass * self.length_m * self.length_m / 3.0

    @property
    def hinge_damping(self) -> float:
        """Hip damping coefficient c = 2 zeta sqrt(k I_leg) [N m s/rad]."""
        return 2.0 * self.hinge_zeta * math.sqrt(self.hinge_k_si * self.hinge_ref_inertia)

    def foot_body_point(self, side: int) -> tuple[float, float]:
        """Foot position in the body frame at the hinge rest angle.

        side +1 is the fore pair, -1 the hind pair.
        """
        l_m = self.length_m
        px = side * (self.mount_x + l_m * math.sin(self.psi_rad))
        pz = -l_m * math.cos(self.psi_rad)
        return px, pz

    def hip_body_point(self, side: int) -> tuple[float, float]:
        return side * self.mount_x, 0.0


# Catalog of printed leg designs: splay angle x link length.
LEG_DESIGNS: dict[str, LegConfig] = {
    cfg.name: cfg
    for cfg in (
        LegConfig("Narrow-Short", 50.0, 5.0),
        LegConfig("Narrow-Long", 75.0, 5.0),
        LegConfig("Semi-Narrow-Short", 50.0, 30.0),
        LegConfig("Semi-Narrow-Long", 75.0, 30.0),
        LegConfig("Wide-Short", 50.0, 60.0),
        LegConfig("Wide-Long", 75.0, 60.0),
    )
}


def hard_body_points(params: QuadParams) -> tuple[tuple[str, float, float], ...]:
    """Body-frame points that must not touch the ceiling: box corners and
    the in-plane extremes of both propeller disks."""
    bw = params.body_halfwidth
    bh = params.body_halfheight
    po = params.arm_x + params.prop_radius
    pi_ = params.arm_x - params.prop_radius
    return (
        ("body", bw, bh), ("body", bw, -bh), ("body", -bw, bh), ("body", -bw, -bh),
        ("prop", po, 0.0), ("prop", -po, 0.0), ("prop", pi_, 0.0), ("prop", -pi_, 0.0),
    )


def _z_rel(px: float, pz: float, pitch: float) -> float:
    """Height of a body point above the CoM after pitching [m]."""
    return px * math.sin(pitch) + pz * math.cos(pitch)


def _window_gap(leg: LegConfig, hard: tuple[tuple[str, float, float], ...],
                pitch: float) -> float:
    """Highest foot minus highest hard point at the given pitch."""
    fx, fz = leg.foot_body_point(+1)
    hx, hz = leg.foot_body_point(-1)
    foot = max(_z_rel(fx, fz, pitch), _z_rel(hx, hz, pitch))
    worst = max(_z_rel(px, pz, pitch) for _, px, pz in hard)
    return foot - worst


def impact_window(leg: LegConfig, params: QuadParams = QuadParams()) -> tuple[float, float] | None:
    """Pitch interval [deg] around 180 where a foot touches the ceiling
    strictly before any body or propeller point, or None when the legs
    never clear the body envelope (degenerate geometry)."""
    hard = hard_body_points(params)

    def gap(deg: float) -> float:
        return _window_gap(leg, hard, math.radians(deg))

    if gap(180.0) <= 0.0:
        return None
    # march outward from 180 to bracket each sign change, then bisect
    step = 0.25

    def edge(direction: float) -> float:
        a = 180.0
        while True:
            b = a + direction * step
            if gap(b) <= 0.0:
                break
            a = b
            if abs(a - 180.0) >= 180.0:
                return a  # feet win everywhere on this side
        for _ in range(80):
            m = 0.5 * (a + b)
            if gap(m) > 0.0:
                a = m
            else:
                b = m
        return 0.5 * (a + b)

    return edge(-1.0), edge(+1.0)
