import numpy as np
import pytest

from divw.data import PopulationParams, SummaryDataset


def make_dataset(gamma_hat, se_x, Gamma_hat, se_y, gamma_star=None, se_x_star=None):
    return SummaryDataset(gamma_hat, se_x, Gamma_hat, se_y, gamma_star, se_x_star)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_params():
    """Fifty SNPs of mixed strength, used by the small Monte Carlo checks."""
    r = np.random.default_rng(5)
    gamma = r.normal(0, 0.05, 50)
    return PopulationParams(
        gamma=gamma,
        sigma_x=np.full(50, 0.02),
        sigma_y=np.full(50, 0.03),
        sigma_x_star=np.full(50, 0.02),
        beta0=0.4,
    )


@pytest.fixture
def random_dataset(rng):
    p = 40
    gamma = rng.normal(0, 0.05, p)
    se_x = rng.uniform(0.01, 0.03, p)
    se_y = rng.uniform(0.02, 0.04, p)
    return SummaryDataset(
        gamma + se_x * rng.standard_normal(p),
        se_x,
        0.3 * gamma + se_y * rng.standard_normal(p),
        se_y,
        gamma + se_x * rng.standard_normal(p),
        se_x,
    )


_VERDICTS = []


@pytest.fixture
def report():
    """Record one acceptance verdict line; all lines are repeated at the end of the run."""

    def emit(line):
        print(line)
        _VERDICTS.append(line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
