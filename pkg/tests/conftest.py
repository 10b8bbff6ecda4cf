import numpy as np
import pytest

from vrresgld.model import MixtureModel, MixtureSpec, PerDatumModel

ACCEPTANCE_LINES = []


class TableModel(PerDatumModel):
    """Per-datum energies read from a lookup table keyed by theta."""

    def __init__(self, table):
        self.table = {float(k): np.asarray(v, dtype=float) for k, v in table.items()}
        self.n_data = len(next(iter(self.table.values())))

    def energies(self, theta, idx=None):
        th = np.asarray(theta, dtype=float)
        rows = np.array([self.table[float(t)] for t in th.reshape(-1)])
        rows = rows.reshape(th.shape + (self.n_data,))
        return rows if idx is None else rows[..., np.asarray(idx)]

    def grads(self, theta, idx=None):
        return np.zeros_like(self.energies(theta, idx))


@pytest.fixture(scope="session")
def small_spec():
    return MixtureSpec(n_data=10, gen_seed=3)


@pytest.fixture(scope="session")
def small_model(small_spec):
    return MixtureModel.from_spec(small_spec)


@pytest.fixture(scope="session")
def mixture_model():
    return MixtureModel.from_spec(MixtureSpec())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
