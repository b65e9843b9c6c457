"""Shared test helpers: small configurations and the acceptance report."""

from mmnoma.harness import ExperimentConfig

ACCEPTANCE_LINES = {}


def record_criterion(number, passed, detail):
    """Store and print the pass/fail line of one acceptance criterion."""
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def small_config(**kw):
    base = dict(users=5, aps=2, rf_chains=2, ap_antennas=12, runs=1, base_seed=7)
    base.update(kw)
    return ExperimentConfig(**base).resolved()
