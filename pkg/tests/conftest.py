import pathlib

import pytest

from porocdh.greens import Problem, Receiver
from porocdh.material import PoroelasticLayer, SourceAmplitudes, derive_layer

ROOT = pathlib.Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

TOP = PoroelasticLayer(rho_s=2200, rho_f=950, phi=0.4, a=2, K_s=6.9e9, K_f=2e9, K_b=6.7e9, mu=3e9)
BOTTOM = PoroelasticLayer(rho_s=2650, rho_f=750, phi=0.2, a=2, K_s=37e9, K_f=1.7e9, K_b=2.2e9,
                          mu=4.4e9)
BULK = SourceAmplitudes(f_u=-1e10, f_w=-1e10, f_p=0.0)
PRESSURE = SourceAmplitudes(f_u=0.0, f_w=0.0, f_p=1.0)
H = 500.0
R1 = Receiver(400.0, 0.0, 533.0)
R2 = Receiver(400.0, 0.0, -533.0)


@pytest.fixture(scope="session")
def top():
    return derive_layer(TOP)


@pytest.fixture(scope="session")
def bottom():
    return derive_layer(BOTTOM)


@pytest.fixture(scope="session")
def bulk_problem():
    return Problem.build(TOP, BOTTOM, H, BULK)


@pytest.fixture(scope="session")
def pressure_problem():
    return Problem.build(TOP, BOTTOM, H, PRESSURE)


@pytest.fixture(scope="session")
def pairs(bulk_problem):
    return {"r1": bulk_problem.pairs(R1), "r2": bulk_problem.pairs(R2)}


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
