"""Microscopic driving behavior: IDM car following and MOBIL lane choice.

The integrator works on per-lane vehicle lists ordered leader-first. It is
deliberately standalone so soak tests can drive platoons and ring roads
without the rest of the engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

VEHICLE_LENGTH = 5.0  # m, single vehicle class
EMERGENCY_DECEL = 8.0  # m/s^2, hard floor on braking
MIN_GAP = 0.01  # m, substituted for nonpositive gaps
WALK_SPEED = 1.4  # m/s
BIKE_SPEED = 4.0  # m/s


@dataclass
class IdmParams:
    T: float = 1.5  # desired time headway, s
    s0: float = 2.0  # jam gap, m
    a_max: float = 2.0  # maximum acceleration, m/s^2
    b: float = 3.0  # comfortable deceleration, m/s^2
    delta: float = 4.0  # free-flow exponent

    def __post_init__(self):
        if min(self.T, self.s0, self.a_max, self.b, self.delta) <= 0:
            raise ValueError("IDM parameters must all be positive")


@dataclass
class MobilParams:
    p: float = 0.3  # politeness
    a_th: float = 0.2  # incentive threshold, m/s^2
    b_safe: float = 4.0  # braking the new follower may be asked to accept

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ValueError("politeness must lie in [0, 1]")
        if self.a_th <= 0 or self.b_safe <= 0:
            raise ValueError("a_th and b_safe must be positive")


def idm_acceleration(v: float, v0: float, s: float, dv: float, params: IdmParams) -> float:
    """Acceleration of a vehicle at speed v chasing a gap s closing at dv.

    ``s = inf`` means a free road. The result is clamped at the emergency
    deceleration floor.
    """
    free = 1.0 - (v / v0) ** params.delta
    if s == math.inf:
        a = params.a_max * free
    else:
        if s <= 0.0:
            s = MIN_GAP
        s_star = params.s0 + v * params.T + v * dv / (2.0 * math.sqrt(params.a_max * params.b))
        a = params.a_max * (free - (s_star / s) ** 2)
    return a if a > -EMERGENCY_DECEL else -EMERGENCY_DECEL


def equilibrium_gap(v: float, v0: float, params: IdmParams) -> float:
    """Gap at which a follower at speed v behind a leader at the same speed
    holds exactly zero acceleration."""
    free = 1.0 - (v / v0) ** params.delta
    if free <= 0:
        raise ValueError("no equilibrium at or above the desired speed")
    return (params.s0 + v * params.T) / math.sqrt(free)


def mobil_decide(
    a_current: float,
    a_current_new: float,
    a_new_follower: float,
    a_new_follower_new: float,
    a_old_follower: float,
    a_old_follower_new: float,
    params: MobilParams,
) -> bool:
    """Change lanes iff the safety bound and the incentive inequality hold.

    Plain arguments are accelerations in the present configuration, the
    ``_new`` ones after a hypothetical change.
    """
    if a_new_follower_new < -params.b_safe:
        return False
    own_gain = a_current_new - a_current
    others_loss = (a_new_follower_new - a_new_follower) + (a_old_follower_new - a_old_follower)
    return own_gain > params.p * others_loss + params.a_th


class Vehicle:
    """Mutable per-vehicle kinematic state on one road lane.

    ``exit_offset`` is where the vehicle wants to leave the road (the road
    end for through traffic, an interior point on the last leg of a route);
    the integrator itself ignores it.
    """

    __slots__ = ("person_id", "offset", "speed", "length", "v0", "exit_offset")

    def __init__(self, person_id: int, offset: float, speed: float, v0: float,
                 length: float = VEHICLE_LENGTH, exit_offset: float = math.inf):
        self.person_id = person_id
        self.offset = offset
        self.speed = speed
        self.v0 = v0
        self.length = length
        self.exit_offset = exit_offset

    def __repr__(self):
        return f"Vehicle({self.person_id}, x={self.offset:.2f}, v={self.speed:.2f})"


def integrate_lane(
    vehicles: list[Vehicle],
    dt: float,
    params: IdmParams,
    wrap: float | None = None,
) -> None:
    """Advance one lane by dt with a semi-implicit Euler step.

    ``vehicles`` is ordered leader first. With ``wrap`` set, the lane is a
    ring of that circumference and the first vehicle follows the last one.
    Accelerations are computed from the pre-step state for every vehicle,
    then a leader-to-follower projection pass clamps any overshoot so gaps
    never go negative.
    """
    n = len(vehicles)
    if n == 0:
        return
    accel = [0.0] * n
    for i in range(n):
        veh = vehicles[i]
        if i > 0:
            leader = vehicles[i - 1]
            gap = leader.offset - veh.offset - leader.length
        elif wrap is not None and n > 1:
            leader = vehicles[-1]
            gap = leader.offset + wrap - veh.offset - leader.length
        elif wrap is not None and n == 1:
            leader = veh
            gap = wrap - veh.length
        else:
            leader = None
            gap = math.inf
        dv = veh.speed - leader.speed if leader is not None else 0.0
        accel[i] = idm_acceleration(veh.speed, veh.v0, gap, dv, params)

    new_x = [0.0] * n
    new_v = [0.0] * n
    for i in range(n):
        veh = vehicles[i]
        v = veh.speed + accel[i] * dt
        if v < 0.0:
            v = 0.0
        new_v[i] = v
        new_x[i] = veh.offset + v * dt

    # Gap projection. An open lane is a chain, so one leader-to-follower
    # pass is exact; a ring couples the first vehicle back to the last, so
    # iterate until the cyclic constraints settle.
    for _ in range(n if wrap is not None else 1):
        changed = False
        for i in range(n):
            if i > 0:
                limit = new_x[i - 1] - vehicles[i - 1].length
                lead_v = new_v[i - 1]
            elif wrap is not None and n > 1:
                limit = new_x[-1] + wrap - vehicles[-1].length
                lead_v = new_v[-1]
            else:
                continue
            if new_x[i] > limit:
                new_x[i] = limit
                changed = True
                if new_v[i] > lead_v:
                    new_v[i] = lead_v
        if not changed:
            break

    for i in range(n):
        vehicles[i].offset = new_x[i]
        vehicles[i].speed = new_v[i]


def lane_gaps(vehicles: list[Vehicle], wrap: float | None = None) -> list[float]:
    """Pairwise follower-to-leader gaps, in vehicle order."""
    out = []
    n = len(vehicles)
    for i in range(1, n):
        out.append(vehicles[i - 1].offset - vehicles[i].offset - vehicles[i - 1].length)
    if wrap is not None and n > 1:
        out.append(vehicles[-1].offset + wrap - vehicles[0].offset - vehicles[-1].length)
    return out


CONGESTION_LEVELS = ("free", "slow", "congested", "jam")


def congestion_level(speeds: list[float], speed_limit: float) -> tuple[float, str]:
    """Average vehicle speed and the bucketed congestion level.

    An empty road reports the speed limit and "free".
    """
    if not speeds:
        return speed_limit, "free"
    avg = sum(speeds) / len(speeds)
    ratio = avg / speed_limit if speed_limit > 0 else 0.0
    if ratio > 0.7:
        level = "free"
    elif ratio >= 0.4:
        level = "slow"
    elif ratio >= 0.15:
        level = "congested"
    else:
        level = "jam"
    return avg, level
