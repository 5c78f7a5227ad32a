from __future__ import annotations

import time

import numpy as np
import pytest

from cbscm import simgen
from cbscm.inference import placebo_in_space, placebo_in_time
from cbscm.league import MatchRecord, build_season_table
from cbscm.scm import ScmConfig, fit_scm

ACCEPTANCE_LINES: list[str] = []

MIX_WEIGHTS = {"GER": 0.6, "ESP": 0.4}
MIX_NOISE = 0.002
N_REPLICATES = 30
NULL_PSEUDO_YEAR = 1969
HARNESS_SECONDS: dict[str, float] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def record_criterion():
    """Print-and-keep one PASS/FAIL line per criterion, then assert it."""

    def record(label: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def season_from_results(results: np.ndarray, league: str = "L", season: int = 2000, goals=(1, 0)):
    """Matches of a double round robin from a K x K code matrix.

    ``results[i, j]`` is the outcome of i at home to j: 0 home win, 1 draw, 2 away win.
    """
    K = results.shape[0]
    hg, ag = goals
    out = []
    for i in range(K):
        for j in range(K):
            if i == j:
                continue
            code = results[i, j]
            h, a = {0: (hg, ag), 1: (hg, hg), 2: (ag, hg)}[int(code)]
            out.append(MatchRecord(league, season, f"T{i:02d}", f"T{j:02d}", h, a))
    return out


def cascade_results(K: int) -> np.ndarray:
    """Team i beats every j > i home and away."""
    r = np.ones((K, K), dtype=int)
    for i in range(K):
        for j in range(K):
            if i < j:
                r[i, j] = 0
            elif i > j:
                r[i, j] = 2
    return r


@pytest.fixture
def make_table():
    def make(results, rule=None, **kw):
        from cbscm.league import TWO_POINTS

        return build_season_table(season_from_results(np.asarray(results), **kw), rule or TWO_POINTS)

    return make


@pytest.fixture(scope="session")
def mixture_harness():
    """30 replicates of a treated unit built as 0.6 GER + 0.4 ESP with a realized -0.05 effect.

    The nominal dispersion shift is calibrated once on replicate 0 and reused;
    each replicate's truth is its own paired-seed realized effect.
    """
    start = time.perf_counter()
    base = simgen.default_scenario(seed=0, n_leagues=5)
    nominal = simgen.calibrate_effect(base, -0.05, mixture=MIX_WEIGHTS)
    reps = []
    for seed in range(N_REPLICATES):
        spec = simgen.default_scenario(seed=seed, n_leagues=5, treated_effect=nominal)
        panel, truth = simgen.generate_mixture_panel(spec, MIX_WEIGHTS, noise=MIX_NOISE, noise_seed=seed)
        config = ScmConfig("MIX", 1981, seed=seed)
        reps.append((panel, truth, config, fit_scm(panel, config)))
    HARNESS_SECONDS["mixture"] = time.perf_counter() - start
    return nominal, reps


@pytest.fixture(scope="session")
def null_harness():
    """30 exchangeable null panels: true fit, every space placebo, and a time placebo."""
    start = time.perf_counter()
    out = []
    for seed in range(N_REPLICATES):
        spec = simgen.default_scenario(seed=1000 + seed)
        panel, truth = simgen.generate_panel_scenario(spec)
        config = ScmConfig(spec.treated, spec.treatment_year, seed=seed)
        fit = fit_scm(panel, config)
        space = placebo_in_space(panel, config)
        time_placebo = placebo_in_time(panel, config, NULL_PSEUDO_YEAR)
        out.append({"truth": truth, "fit": fit, "space": space, "time": time_placebo})
    HARNESS_SECONDS["null"] = time.perf_counter() - start
    return out
