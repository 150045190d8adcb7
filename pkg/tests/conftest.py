import io

import numpy as np
import pytest

from hitting_reliability.ingest import make_panel
from hitting_reliability.models import Hyperparams
from hitting_reliability.sampler import GibbsState


@pytest.fixture
def small_panel():
    """3 players x 2 seasons with uneven weights."""
    return make_panel(
        metric="FIX",
        player_ids=["a", "a", "b", "b", "c", "c"],
        seasons=[2001, 2002, 2001, 2002, 2001, 2002],
        y=[0.30, 0.26, 0.21, 0.25, 0.18, 0.20],
        weights=[0.5, 1.5, 1.0, 1.0, 2.0, 0.8],
    )


@pytest.fixture
def proper_hyper():
    """Proper priors so every inverse-gamma conditional has finite fourth moments."""
    return Hyperparams(K2=10.0, alpha0=3.0, beta0=2.0, psi0=3.0, delta0=2.0, v0=0.1)


@pytest.fixture
def small_state():
    return GibbsState(
        mu=0.23,
        sigma2=0.002,
        tau2=0.003,
        p1=0.4,
        alpha=np.array([0.05, -0.01, -0.04]),
        gamma=np.array([1, 0, 1], dtype=np.int8),
    )


@pytest.fixture
def raw_csv():
    """Build an in-memory raw CSV from a header and row lists."""

    def build(header: list[str], rows: list[list]) -> io.StringIO:
        lines = [",".join(header)] + [",".join(str(v) for v in row) for row in rows]
        return io.StringIO("\n".join(lines) + "\n")

    return build
