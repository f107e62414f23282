"""Radial Loewner flows in the unit disc with one or many driving points.

The joint conformal map G_t removing N growing boundary curves satisfies

    dG/dt = -G * sum_j (G + e^{i theta_j(t)}) / (G - e^{i theta_j(t)})

with the driving angles supplied by a :class:`DriveHistory` (typically a
Dyson trajectory).  Forward flow, the derivative at the origin, the
joint-versus-sequential composition defect and reverse-flow traces live
here.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import cmath
import math

import numpy as np

from .dyson import AngleConfig, TrajectoryRecord, wrap_angle

SWALLOW_DISTANCE = 1e-6
MIN_FLOW_STEP = 1e-12


class PointStatus(Enum):
    INTERIOR = "interior"
    SWALLOWED = "swallowed"
    UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class FlowPoint:
    """Image of a point under the flow, or its swallowing time."""

    z: complex
    status: PointStatus
    swallow_time: float | None = None


@dataclass(frozen=True)
class DriveHistory:
    """Time-stamped driving angles, sufficient to replay the flow.

    ``angles`` rows are wrapped to [0, 2*pi); an unwrapped lift is kept
    internally so that linear interpolation between samples never crosses a
    branch cut.
    """

    times: np.ndarray
    angles: np.ndarray  # shape (len(times), N), wrapped
    kappa: float
    dt_max: float = 1e-3

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        a = np.atleast_2d(np.asarray(self.angles, dtype=float))
        if t[0] != 0.0 or np.any(np.diff(t) <= 0.0):
            raise ValueError("times must increase strictly from 0")
        if a.shape[0] != t.size:
            raise ValueError("one angle row per time stamp required")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "angles", wrap_angle(a))
        lift = np.unwrap(np.atleast_2d(a), axis=0)
        object.__setattr__(self, "_lift", lift)

    @property
    def n(self) -> int:
        return self.angles.shape[1]

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def drivers_at(self, t: float) -> np.ndarray:
        """Driving angles at time t, linearly interpolated in the lift."""
        if t < 0.0 or t > self.duration + 1e-12:
            raise ValueError("t outside the recorded drive")
        cols = [np.interp(t, self.times, self._lift[:, j])
                for j in range(self.n)]
        return np.asarray(cols)

    @classmethod
    def from_trajectory(cls, rec: TrajectoryRecord) -> "DriveHistory":
        return cls(times=rec.times, angles=rec.states,
                   kappa=rec.params.kappa, dt_max=rec.params.dt)

    @classmethod
    def constant(cls, config: AngleConfig, kappa: float, duration: float,
                 dt_max: float = 1e-3) -> "DriveHistory":
        times = np.array([0.0, duration])
        angles = np.vstack([config.angles, config.angles])
        return cls(times=times, angles=angles, kappa=kappa, dt_max=dt_max)


def joint_rhs(g: complex, drivers) -> complex:
    """Right-hand side -g * sum_j (g + e^{i theta_j})/(g - e^{i theta_j})."""
    drivers = np.atleast_1d(np.asarray(drivers, dtype=float))
    e = np.exp(1j * drivers)
    denom = g - e
    if np.any(np.abs(denom) == 0.0):
        raise ZeroDivisionError("g sits on a driving singularity")
    return complex(-g * np.sum((g + e) / denom))


def _driver_distance(g, drivers):
    return float(np.min(np.abs(g - np.exp(1j * np.asarray(drivers)))))


def _rk4(z, t, dt, f):
    k1 = f(z, t)
    k2 = f(z + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = f(z + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = f(z + dt * k3, t + dt)
    return z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def evolve_point(z: complex, drive: DriveHistory, t: float) -> FlowPoint:
    """Forward image of ``z`` at time ``t``, with swallowing detection.

    RK4 with step control: the step shrinks with the squared distance to
    the nearest driving point (the vector field has simple poles there).
    """
    if abs(z) > 1.0 + 1e-12:
        raise ValueError("z must lie in the closed unit disc")
    if t > drive.duration + 1e-12:
        raise ValueError("t beyond the recorded drive")
    if z == 0:
        return FlowPoint(0j, PointStatus.INTERIOR)

    def f(g, s):
        return joint_rhs(g, drive.drivers_at(min(s, drive.duration)))

    g = complex(z)
    s = 0.0
    while s < t - 1e-15:
        d = _driver_distance(g, drive.drivers_at(s))
        if d < SWALLOW_DISTANCE:
            return FlowPoint(g, PointStatus.SWALLOWED, swallow_time=s)
        h = min(drive.dt_max, 0.2 * d * d, t - s)
        if h < MIN_FLOW_STEP:
            return FlowPoint(g, PointStatus.SWALLOWED, swallow_time=s)
        g = _rk4(g, s, h, f)
        if abs(g) > 1.0:
            g /= abs(g) / 1.0  # clip round-off excursions outside the disc
        s += h
    return FlowPoint(g, PointStatus.INTERIOR)


def derivative_at_origin(drive: DriveHistory, t: float,
                         dt: float = 1e-3) -> float:
    """|G_t'(0)| by integrating the variational equation along the flow.

    The origin is a fixed point, so the linearization is integrated with
    the base point held by the flow itself; the result must follow e^{N t}.
    """
    if t > drive.duration + 1e-12:
        raise ValueError("t beyond the recorded drive")

    def f(state, s):
        g, w = state
        drivers = drive.drivers_at(min(s, drive.duration))
        e = np.exp(1j * drivers)
        jac = -np.sum((g + e) / (g - e)) - g * np.sum(-2.0 * e / (g - e) ** 2)
        return np.array([joint_rhs(g, drivers), jac * w])

    state = np.array([0j, 1.0 + 0j])
    s = 0.0
    while s < t - 1e-15:
        h = min(dt, t - s)
        state = _rk4(state, s, h, f)
        s += h
    return abs(state[1])


def composition_defect(config: AngleConfig, kappa: float, dt: float,
                       probes, noise) -> float:
    """Max distance between the joint Euler step and the sequential one.

    The sequential route evolves one single-curve map at a time over dt,
    applying its Brownian part as an exact rotation to the point and to the
    other driving angles, then undoes the accumulated rotation globally
    with the same stored increments.  The defect contracts at O(dt^2).
    """
    probes = np.atleast_1d(np.asarray(probes, dtype=complex))
    noise = np.asarray(noise, dtype=float)
    th0 = config.angles.astype(float)
    n = th0.size
    if noise.shape != (n,):
        raise ValueError("need one noise draw per curve")
    e0 = np.exp(1j * th0)
    for z in probes:
        if abs(z) > 1.0 or _driver_distance(z, th0) < 1e-3:
            raise ValueError("probe outside the disc or too near a driver")
    d_b = math.sqrt(kappa * dt) * noise

    # joint Euler step of the rotated-frame system
    w_joint = probes + dt * np.sum(-probes[:, None]
                                   * (probes[:, None] + e0[None, :])
                                   / (probes[:, None] - e0[None, :]), axis=1)

    # sequential composition with exact rotations
    w = probes.astype(complex)
    th = th0.copy()
    for j in range(n):
        ej = cmath.exp(1j * th[j])
        w = (w - dt * w * (w + ej) / (w - ej)) * cmath.exp(-1j * d_b[j])
        for k in range(n):
            if k != j:
                th[k] += dt / math.tan((th[k] - th[j]) / 2.0) - d_b[j]
    w_seq = w * cmath.exp(1j * d_b.sum())

    return float(np.max(np.abs(w_joint - w_seq)))


def composition_defect_slope(config: AngleConfig, kappa: float, dts,
                             probes, noise) -> float:
    """Fitted log-log slope of the composition defect over the dt grid."""
    dts = np.asarray(dts, dtype=float)
    defects = np.array([composition_defect(config, kappa, d, probes, noise)
                        for d in dts])
    slope, _ = np.polyfit(np.log(dts), np.log(defects), 1)
    return float(slope)


def trace_points(drive: DriveHistory, j: int, sample_times,
                 offset: float = 1e-3, max_steps: int = 200_000
                 ) -> list[FlowPoint]:
    """Approximate trace of curve ``j`` via the reverse-time flow.

    For each requested time t the reverse flow replays the drive backwards
    from a point just inside e^{i theta_j(t)}.  The step shrinks with the
    squared distance to the current (reversed) drivers, exactly as in the
    forward flow; runs that exhaust the step budget or leave the disc are
    marked UNRESOLVED.
    """
    out = []
    for t in np.atleast_1d(np.asarray(sample_times, dtype=float)):
        if t < 0.0 or t > drive.duration + 1e-12:
            raise ValueError("sample time outside the drive history")
        seed = cmath.exp(1j * float(drive.drivers_at(t)[j]))
        if t == 0.0:
            out.append(FlowPoint(seed, PointStatus.INTERIOR))
            continue

        def f(w, s):
            return -joint_rhs(w, drive.drivers_at(max(t - s, 0.0)))

        w = seed * (1.0 - offset)
        s = 0.0
        ok = True
        for _ in range(max_steps):
            if s >= t - 1e-15:
                break
            d = _driver_distance(w, drive.drivers_at(max(t - s, 0.0)))
            h = min(drive.dt_max, 0.05 * d * d, t - s)
            if h < MIN_FLOW_STEP:
                ok = False
                break
            w = _rk4(w, s, h, f)
            if not np.isfinite(w.real) or abs(w) > 1.0 + 1e-6:
                ok = False
                break
            if abs(w) > 1.0:
                w /= abs(w)
            s += h
        else:
            ok = False
        out.append(FlowPoint(w, PointStatus.INTERIOR if ok
                             else PointStatus.UNRESOLVED))
    return out
