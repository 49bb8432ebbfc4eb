import pytest
from hypothesis import settings

from adaptrust.evalharness import EvalConfig, split_dataset, train_pipeline
from adaptrust.synth.generator import GeneratorConfig, generate_dataset

settings.register_profile("default", max_examples=100, deadline=None)
settings.load_profile("default")

# the four expectation vectors of the two-indicator (speed, security) worked example
TABLE1 = [(0.6, 0.1), (0.9, 0.2), (0.9, 0.3), (0.1, 0.9)]


@pytest.fixture(scope="session")
def k2_data():
    return generate_dataset(GeneratorConfig(indicator_count=2, seed=42))


@pytest.fixture(scope="session")
def k2_trained(k2_data):
    ds, truth = k2_data
    train, test = split_dataset(ds, 0.8, 42)
    pair = train_pipeline(train, EvalConfig())
    return ds, truth, train, test, pair


# criterion -> (passed, detail), filled by tests/test_acceptance.py
ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in sorted(ACCEPTANCE_RESULTS.items()):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
