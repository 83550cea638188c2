"""Artificial ant on a toroidal food trail.

Grid coordinates are ``(row, col)`` with row 0 at the top. Headings are
numbered clockwise from east, so a right turn adds one and a left turn
subtracts one (mod 4).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from importlib import resources

import numba
import numpy as np

from .machine import MealyMachine

EAST, SOUTH, WEST, NORTH = range(4)
HEADING_NAMES = ("east", "south", "west", "north")
# (d_row, d_col) per heading
DELTAS = ((0, 1), (1, 0), (0, -1), (-1, 0))

FORWARD, LEFT, RIGHT = range(3)
ACTION_NAMES = ("forward", "left", "right")

MAX_MOVES = 200


class TrailError(ValueError):
    pass


@dataclass(frozen=True)
class TrailWorld:
    width: int
    height: int
    food: frozenset
    start: tuple[int, int]
    start_heading: int = EAST

    @property
    def total_food(self) -> int:
        return len(self.food)

    def grid(self) -> np.ndarray:
        g = np.zeros((self.height, self.width), dtype=np.uint8)
        for r, c in self.food:
            g[r, c] = 1
        return g


@dataclass(frozen=True)
class AntState:
    position: tuple[int, int]
    heading: int
    food_eaten: int = 0
    moves_used: int = 0


@dataclass(frozen=True)
class AntResult:
    food_eaten: int
    moves_to_finish: int
    moves_used: int
    total_food: int
    trace: tuple | None = None

    @property
    def solved(self) -> bool:
        return self.food_eaten == self.total_food


def load_trail(text: str, width: int = 32, height: int = 32) -> TrailWorld:
    lines = [ln.rstrip("\r") for ln in text.splitlines()]
    while lines and not lines[-1].strip():
        lines.pop()
    if len(lines) != height:
        raise TrailError(f"expected {height} rows, got {len(lines)}")
    food, starts = set(), []
    for r, line in enumerate(lines):
        if len(line) != width:
            raise TrailError(f"row {r} has {len(line)} cells, expected {width}")
        for c, ch in enumerate(line):
            if ch == "#":
                food.add((r, c))
            elif ch == "S":
                starts.append((r, c))
            elif ch != ".":
                raise TrailError(f"unknown cell {ch!r} at row {r}, col {c}")
    if len(starts) != 1:
        raise TrailError(f"trail needs exactly one start cell, found {len(starts)}")
    return TrailWorld(width, height, frozenset(food), starts[0], EAST)


def santa_fe_trail() -> TrailWorld:
    """The canonical 32x32 trail with 89 food cells, start at the corner facing east."""
    text = resources.files("fsmsynth").joinpath("data/santafe.trail").read_text()
    return load_trail(text)


def ahead(world: TrailWorld, position: tuple[int, int], heading: int) -> tuple[int, int]:
    dr, dc = DELTAS[heading]
    return (position[0] + dr) % world.height, (position[1] + dc) % world.width


def sense(world: TrailWorld, ant: AntState) -> int:
    """1 iff food lies in the cell directly in front of the ant."""
    return int(ahead(world, ant.position, ant.heading) in world.food)


def apply_action(world: TrailWorld, ant: AntState, action: int) -> tuple[TrailWorld, AntState]:
    """Perform one move. Returns the world with any eaten food removed, and the new ant."""
    if action == FORWARD:
        pos = ahead(world, ant.position, ant.heading)
        eaten = ant.food_eaten
        if pos in world.food:
            world = replace(world, food=world.food - {pos})
            eaten += 1
        return world, AntState(pos, ant.heading, eaten, ant.moves_used + 1)
    if action == LEFT:
        return world, AntState(ant.position, (ant.heading - 1) % 4, ant.food_eaten, ant.moves_used + 1)
    if action == RIGHT:
        return world, AntState(ant.position, (ant.heading + 1) % 4, ant.food_eaten, ant.moves_used + 1)
    raise ValueError(f"invalid ant action {action}")


@numba.njit(cache=True)
def _run_ant(next_state, output, grid, start_r, start_c, heading, total, max_moves, trace):
    grid = grid.copy()
    height, width = grid.shape
    dr = (0, 1, 0, -1)
    dc = (1, 0, -1, 0)
    r, c, h = start_r, start_c, heading
    state = 0
    eaten = 0
    moves = 0
    finish = max_moves
    keep_trace = trace.shape[0] > 0
    while moves < max_moves and eaten < total:
        fr = (r + dr[h]) % height
        fc = (c + dc[h]) % width
        sym = 1 if grid[fr, fc] else 0
        act = output[state, sym]
        if keep_trace:
            trace[moves, 0] = state
            trace[moves, 1] = sym
            trace[moves, 2] = act
        state = next_state[state, sym]
        if act == 0:
            r, c = fr, fc
            if grid[r, c]:
                grid[r, c] = 0
                eaten += 1
        elif act == 1:
            h = (h + 3) % 4
        else:
            h = (h + 1) % 4
        moves += 1
        if keep_trace:
            trace[moves - 1, 3] = eaten
        if eaten == total:
            finish = moves
    return eaten, moves, finish


def simulate_ant(machine: MealyMachine, world: TrailWorld, max_moves: int = MAX_MOVES,
                 trace: bool = False) -> AntResult:
    spec = machine.spec
    if spec.input_bits != 1 or spec.action_count != 3:
        raise ValueError("ant controller needs 1 input bit and 3 actions")
    buf = np.zeros((max_moves if trace else 0, 4), dtype=np.int64)
    eaten, moves, finish = _run_ant(machine.next_state, machine.output, world.grid(),
                                    world.start[0], world.start[1], world.start_heading,
                                    world.total_food, max_moves, buf)
    rows = None
    if trace:
        rows = tuple((t, *map(int, buf[t])) for t in range(moves))
    return AntResult(int(eaten), int(finish), int(moves), world.total_food, rows)


def format_trace(result: AntResult) -> str:
    """One line per move: ``move_index state input action food_eaten``."""
    return "".join(" ".join(map(str, row)) + "\n" for row in result.trace or ())


@dataclass(frozen=True)
class SantaFeTask:
    """Adapter used by the GA: a2 is moves to finish, deficit is uneaten food."""

    world: TrailWorld
    max_moves: int = MAX_MOVES

    name = "santafe"
    input_bits = 1
    output_bits = 2
    action_count = 3
    raw_key = "food_eaten"

    def run(self, machine: MealyMachine) -> AntResult:
        return simulate_ant(machine, self.world, self.max_moves)

    def outcome(self, machine: MealyMachine):
        res = self.run(machine)
        raw = {"food_eaten": res.food_eaten, "moves_to_finish": res.moves_to_finish}
        return res.solved, res.moves_to_finish, self.world.total_food - res.food_eaten, raw, 0.0
