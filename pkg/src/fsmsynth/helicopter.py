"""Planar helicopter autopilot task.

The helicopter always flies: each step first applies the chosen action (turn
or change speed) and then advances ``speed`` units along its heading. The
autopilot only sees which sight sector the next marker falls in; sector 0 is
centred on the heading and indices increase counter-clockwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .machine import MealyMachine

ROTATE_LEFT, ROTATE_RIGHT, ACCELERATE, DECELERATE = range(4)
ACTION_NAMES = ("rotate-left", "rotate-right", "accelerate", "decelerate")
TWO_PI = 2.0 * math.pi


class CourseError(ValueError):
    pass


@dataclass(frozen=True)
class HeliParams:
    sectors: int = 4
    turn_angle: float = TWO_PI / 16
    velocity_step: float = 0.5
    v_min: float = 0.0
    v_max: float = 5.0
    capture_radius: float = 5.0
    time_limit: int = 1000

    def __post_init__(self):
        if self.sectors < 2:
            raise ValueError("need at least 2 sight sectors")
        if self.turn_angle <= 0:
            raise ValueError("turn_angle must be positive")
        if self.v_min > self.v_max:
            raise ValueError("v_min exceeds v_max")
        if self.capture_radius <= 0:
            raise ValueError("capture_radius must be positive")

    @property
    def input_bits(self) -> int:
        return max(1, (self.sectors - 1).bit_length())


@dataclass(frozen=True)
class HeliState:
    x: float
    y: float
    heading: float
    speed: float


@dataclass(frozen=True)
class Course:
    markers: tuple[tuple[float, float], ...]
    start: HeliState

    def __post_init__(self):
        if not self.markers:
            raise CourseError("course needs at least one marker")


@dataclass(frozen=True)
class HeliResult:
    markers_visited: int
    steps_used: int
    final_distance: float
    total_markers: int
    trace: tuple | None = field(default=None, compare=False)

    @property
    def solved(self) -> bool:
        return self.markers_visited == self.total_markers


def generate_course(seed: int, n: int = 20, bounds: float = 400.0,
                    params: HeliParams | None = None, max_tries: int = 10000) -> Course:
    """Random markers in a ``bounds`` x ``bounds`` square, pairwise at least 4r apart."""
    if n < 1:
        raise CourseError("course needs at least one marker")
    params = params or HeliParams()
    min_sep = 4.0 * params.capture_radius
    rng = np.random.default_rng(seed)
    markers: list[tuple[float, float]] = []
    tries = 0
    while len(markers) < n:
        if tries >= max_tries:
            raise CourseError(f"could not place {n} markers {min_sep} apart in {bounds}x{bounds}")
        tries += 1
        px, py = (float(v) for v in rng.uniform(0.0, bounds, size=2))
        if all(math.hypot(px - mx, py - my) >= min_sep for mx, my in markers):
            markers.append((px, py))
    start = HeliState(bounds / 2, bounds / 2, 0.0, params.v_min)
    return Course(tuple(markers), start)


def sector_index(heli: HeliState, target: tuple[float, float], sectors: int) -> int:
    dx, dy = target[0] - heli.x, target[1] - heli.y
    if dx == 0.0 and dy == 0.0:
        return 0
    return _sector(dx, dy, heli.heading, sectors)


@numba.njit(cache=True)
def _sector(dx, dy, heading, sectors):
    width = 2.0 * math.pi / sectors
    beta = (math.atan2(dy, dx) - heading) % (2.0 * math.pi)
    idx = int(((beta + width / 2.0) % (2.0 * math.pi)) // width)
    # float rounding at the 2*pi seam
    return idx if idx < sectors else 0


def step_physics(heli: HeliState, action: int, params: HeliParams) -> HeliState:
    heading, speed = heli.heading, heli.speed
    if action == ROTATE_LEFT:
        heading = (heading + params.turn_angle) % TWO_PI
    elif action == ROTATE_RIGHT:
        heading = (heading - params.turn_angle) % TWO_PI
    elif action == ACCELERATE:
        speed = min(params.v_max, speed + params.velocity_step)
    elif action == DECELERATE:
        speed = max(params.v_min, speed - params.velocity_step)
    else:
        raise ValueError(f"invalid helicopter action {action}")
    return HeliState(heli.x + speed * math.cos(heading), heli.y + speed * math.sin(heading),
                     heading, speed)


@numba.njit(cache=True)
def _run_heli(next_state, output, markers, x, y, heading, speed, sectors, turn, dv,
              v_min, v_max, radius, time_limit, trace):
    n = markers.shape[0]
    two_pi = 2.0 * math.pi
    keep_trace = trace.shape[0] > 0
    visited = 0
    while visited < n and math.hypot(markers[visited, 0] - x, markers[visited, 1] - y) <= radius:
        visited += 1
    state = 0
    steps = 0
    while visited < n and steps < time_limit:
        dx = markers[visited, 0] - x
        dy = markers[visited, 1] - y
        sym = 0
        if dx != 0.0 or dy != 0.0:
            sym = _sector(dx, dy, heading, sectors)
        act = output[state, sym]
        if keep_trace:
            trace[steps, 0] = state
            trace[steps, 1] = sym
            trace[steps, 2] = act
        state = next_state[state, sym]
        if act == 0:
            heading = (heading + turn) % two_pi
        elif act == 1:
            heading = (heading - turn) % two_pi
        elif act == 2:
            speed = min(v_max, speed + dv)
        else:
            speed = max(v_min, speed - dv)
        x += speed * math.cos(heading)
        y += speed * math.sin(heading)
        steps += 1
        while visited < n and math.hypot(markers[visited, 0] - x, markers[visited, 1] - y) <= radius:
            visited += 1
        if keep_trace:
            trace[steps - 1, 3] = x
            trace[steps - 1, 4] = y
            trace[steps - 1, 5] = heading
            trace[steps - 1, 6] = speed
            trace[steps - 1, 7] = visited
    dist = 0.0
    if visited < n:
        dist = math.hypot(markers[visited, 0] - x, markers[visited, 1] - y)
    return visited, steps, dist


def simulate_heli(machine: MealyMachine, course: Course, params: HeliParams,
                  trace: bool = False) -> HeliResult:
    spec = machine.spec
    if spec.input_bits != params.input_bits or spec.action_count != 4:
        raise ValueError(
            f"autopilot needs {params.input_bits} input bits and 4 actions for {params.sectors} sectors")
    markers = np.asarray(course.markers, dtype=np.float64)
    buf = np.zeros((params.time_limit if trace else 0, 8), dtype=np.float64)
    s = course.start
    visited, steps, dist = _run_heli(
        machine.next_state, machine.output, markers, s.x, s.y, s.heading, s.speed,
        params.sectors, params.turn_angle, params.velocity_step, params.v_min, params.v_max,
        params.capture_radius, params.time_limit, buf)
    rows = None
    if trace:
        rows = tuple((t, int(r[0]), int(r[1]), int(r[2]), float(r[3]), float(r[4]),
                      float(r[5]), float(r[6]), int(r[7])) for t, r in enumerate(buf[:steps]))
    return HeliResult(int(visited), int(steps), float(dist), len(course.markers), rows)


def compare_autopilots(r1: HeliResult, r2: HeliResult) -> int:
    """-1 if ``r1`` is the better autopilot, 1 if ``r2`` is, 0 on an exact tie."""
    k1 = (-r1.markers_visited, r1.final_distance)
    k2 = (-r2.markers_visited, r2.final_distance)
    return (k1 > k2) - (k1 < k2)


def format_trace(result: HeliResult) -> str:
    """One line per step: ``step state input action x y heading speed markers``."""
    out = []
    for t, st, sym, act, x, y, h, v, m in result.trace or ():
        out.append(f"{t} {st} {sym} {act} {x:.6f} {y:.6f} {h:.6f} {v:.6f} {m}\n")
    return "".join(out)


def dumps_course(course: Course) -> str:
    s = course.start
    lines = [f"course {len(course.markers)}", f"start {s.x!r} {s.y!r} {s.heading!r} {s.speed!r}"]
    lines += [f"marker {mx!r} {my!r}" for mx, my in course.markers]
    return "\n".join(lines) + "\n"


def loads_course(text: str) -> Course:
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    try:
        if rows[0][0] != "course" or rows[1][0] != "start":
            raise CourseError("course file needs 'course N' and 'start x y heading speed' lines")
        n = int(rows[0][1])
        start = HeliState(*(float(v) for v in rows[1][1:5]))
        markers = []
        for r in rows[2:]:
            if r[0] != "marker" or len(r) != 3:
                raise CourseError(f"bad marker line: {' '.join(r)}")
            markers.append((float(r[1]), float(r[2])))
    except (IndexError, ValueError) as exc:
        raise CourseError(f"malformed course file: {exc}") from None
    if len(markers) != n:
        raise CourseError(f"course declares {n} markers but lists {len(markers)}")
    return Course(tuple(markers), start)


def load_course(path) -> Course:
    return loads_course(Path(path).read_text())


@dataclass(frozen=True)
class HeliTask:
    """Adapter used by the GA: a2 is steps used, deficit is unvisited markers."""

    course: Course
    params: HeliParams = HeliParams()

    name = "heli"
    output_bits = 2
    action_count = 4
    raw_key = "markers_visited"

    @property
    def input_bits(self) -> int:
        return self.params.input_bits

    def run(self, machine: MealyMachine) -> HeliResult:
        return simulate_heli(machine, self.course, self.params)

    def outcome(self, machine: MealyMachine):
        res = self.run(machine)
        raw = {"markers_visited": res.markers_visited, "steps_used": res.steps_used,
               "final_distance": res.final_distance}
        deficit = len(self.course.markers) - res.markers_visited
        return res.solved, res.steps_used, deficit, raw, res.final_distance
