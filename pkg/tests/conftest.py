import pytest

from tabu_forge import truss

_solve = truss.solve


def _checked_solve(model):
    sol = _solve(model)
    assert sol.residual <= 1e-8 * max(sol.load_norm, 1e-300) or sol.load_norm == 0.0, (
        f"equilibrium residual {sol.residual:.3e} exceeds 1e-8 * |F| = {1e-8 * sol.load_norm:.3e}"
    )
    return sol


@pytest.fixture(autouse=True)
def residual_guard(monkeypatch):
    """Every stiffness solve in every test must satisfy |K u - F| <= 1e-8 |F|."""
    monkeypatch.setattr(truss, "solve", _checked_solve)
    yield


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
