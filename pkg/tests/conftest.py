import pytest

from fsmsynth.santafe import SantaFeTask, santa_fe_trail

ACCEPTANCE_LINES: list[str] = []


class ScriptedRng:
    """Stands in for numpy's Generator: ``integers`` returns scripted values in order."""

    def __init__(self, values):
        self.values = list(values)

    def integers(self, low, high=None, size=None):
        if size is not None:
            return [self.values.pop(0) for _ in range(size)]
        return self.values.pop(0)


class StubTask:
    """A task whose outcome depends only on the machine's reachable-state count."""

    name = "stub"
    input_bits = 1
    output_bits = 2
    action_count = 3
    raw_key = "score"

    def __init__(self, feasible=False, a2=10):
        self.feasible = feasible
        self.a2 = a2

    def outcome(self, machine):
        score = int(machine.output.sum())
        return self.feasible, self.a2, 0 if self.feasible else 100 - score, {"score": score}, 0.0


@pytest.fixture(scope="session")
def trail():
    return santa_fe_trail()


@pytest.fixture(scope="session")
def ant_task(trail):
    return SantaFeTask(trail)


@pytest.fixture
def report():
    def _report(criterion: str, ok: bool, detail: str):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {criterion}: {detail}")
        print(ACCEPTANCE_LINES[-1])
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
