from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from sddm.core import GrowthDistribution, JointGrowthModel, MomentInputs, StockMoments, StockSpec

FIXTURES = Path(__file__).parent / "fixtures"

# reference inputs: sample geometric means and variances, CAPM discount rates
D0 = (0.5, 1.24)
K = (0.06631, 0.07943)
GBAR = (0.02, 0.0234)
VARG = (0.02431, 0.01447)

GEOMEAN_TABLE = dict(
    states_a=(-0.05019, 0.07390),
    states_b=(-0.02627, 0.05100),
    table=((7 / 27, 5 / 27), (6 / 27, 9 / 27)),
)
MEDIAN_TABLE = dict(
    states_a=(0.0, 0.13810),
    states_b=(0.0, 0.08688),
    table=((0.28, 0.24), (0.2, 0.28)),
)


def table_model(tbl: dict) -> JointGrowthModel:
    return JointGrowthModel.from_table(tbl["states_a"], tbl["states_b"], tbl["table"], D0, K)


def pair_inputs(growth_covariance: float) -> MomentInputs:
    return MomentInputs(
        StockMoments(D0[0], K[0], GBAR[0], VARG[0]),
        StockMoments(D0[1], K[1], GBAR[1], VARG[1]),
        growth_covariance,
    )


@pytest.fixture
def model_geo() -> JointGrowthModel:
    return table_model(GEOMEAN_TABLE)


@pytest.fixture
def model_med() -> JointGrowthModel:
    return table_model(MEDIAN_TABLE)


@pytest.fixture
def inputs_geo(model_geo) -> MomentInputs:
    return pair_inputs(model_geo.growth_covariance)


@pytest.fixture
def inputs_med(model_med) -> MomentInputs:
    return pair_inputs(model_med.growth_covariance)


# ---------------------------------------------------------------------------
# hypothesis strategies
# ---------------------------------------------------------------------------


@st.composite
def growth_states(draw, n: int) -> tuple[float, ...]:
    values = draw(
        st.lists(
            st.floats(-0.4, 0.4, allow_nan=False), min_size=n, max_size=n, unique=True
        ).filter(lambda xs: min(np.diff(sorted(xs)), default=1.0) > 1e-3)
    )
    return tuple(sorted(values))


@st.composite
def joint_models(draw, max_states: int = 3, sparse: bool = True) -> JointGrowthModel:
    """Random valid joint models with n_A, n_B <= max_states.

    Discount rates sit comfortably above the mean growth; table cells may be
    zero (when ``sparse``) as long as every marginal probability is positive.
    """
    na = draw(st.integers(1, max_states))
    nb = draw(st.integers(1, max_states))
    sa = draw(growth_states(na))
    sb = draw(growth_states(nb))
    low = 0.0 if sparse else 0.05
    weights = np.array(
        draw(st.lists(st.floats(low, 1.0), min_size=na * nb, max_size=na * nb))
    ).reshape(na, nb)
    # keep every row and column alive
    weights[np.arange(na), np.arange(na) % nb] += 0.05
    weights[np.arange(nb) % na, np.arange(nb)] += 0.05
    table = weights / weights.sum()
    d0 = (draw(st.floats(0.1, 5.0)), draw(st.floats(0.1, 5.0)))
    ga = float(np.dot(table.sum(axis=1), sa))
    gb = float(np.dot(table.sum(axis=0), sb))
    k = (ga + draw(st.floats(0.02, 0.3)), gb + draw(st.floats(0.02, 0.3)))
    return JointGrowthModel.from_table(sa, sb, table, d0, k)


@st.composite
def stock_specs(draw, max_states: int = 3) -> StockSpec:
    n = draw(st.integers(1, max_states))
    states = draw(growth_states(n))
    weights = np.array(draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n)))
    probs = tuple(weights / weights.sum())
    g = GrowthDistribution(states, probs)
    return StockSpec(draw(st.floats(0.1, 5.0)), g.mean + draw(st.floats(0.02, 0.3)), g)


# ---------------------------------------------------------------------------
# acceptance report: one line per criterion at the end of the run
# ---------------------------------------------------------------------------

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion a test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "tests": 0, "failed": []})
    if report.when == "call" or report.failed:
        entry["tests"] += 1
        if report.failed or report.skipped:
            entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = "FAIL" if entry["failed"] else "PASS"
        line = f"criterion {number}: {status}  {entry['title']} ({entry['tests']} checks)"
        if entry["failed"]:
            line += "  failed: " + ", ".join(entry["failed"])
        terminalreporter.write_line(line)
