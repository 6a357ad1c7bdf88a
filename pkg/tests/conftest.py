import numpy as np
import pytest

from ipdad.core import CONTINUOUS, AdStudy, IpdStudy, StudyCollection
from ipdad.glmm import GlmmStudyFit, LogisticSelectionTerms, fit_logistic_counts


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def record_acceptance(request):
    def record(line):
        request.config._acceptance_lines.append(line)
        print(line)
    return record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_design(rng, k_max=10, n_max=20, k_min=1):
    """Random (n, pi, sigma_sq, sigma_alpha_sq) with realisable arm counts."""
    k = int(rng.integers(k_min, k_max + 1))
    n = rng.integers(2, n_max + 1, size=k)
    n_t = np.array([rng.integers(1, m) for m in n])
    s2 = rng.uniform(0.2, 5.0, size=k)
    sa = float(rng.choice([0.0, rng.uniform(0.001, 2.0)]))
    return n.astype(float), n_t / n, s2, sa


def continuous_collection(rng, k=6, n=12, beta=1.0):
    ipd = {}
    for j in range(k):
        n_t = int(rng.integers(1, n))
        x = np.r_[np.ones(n_t), np.zeros(n - n_t)]
        y = rng.normal(0.3 * j, 1.0, size=n) + beta * x
        ipd[str(j + 1)] = IpdStudy(str(j + 1), y, x, CONTINUOUS)
    return StudyCollection(ipd=ipd, outcome_kind=CONTINUOUS)


def random_fits(rng, m=4, n_ad=3):
    fits, ads = [], []
    for j in range(m):
        n_t, n_c = int(rng.integers(20, 80)), int(rng.integers(20, 80))
        ct, cc = int(rng.integers(3, n_t - 3)), int(rng.integers(3, n_c - 3))
        fits.append(fit_logistic_counts(str(j), ct, cc, n_t, n_c))
    for j in range(n_ad):
        ads.append(AdStudy(f"a{j}", float(rng.normal(0.3, 0.5)), float(rng.uniform(0.05, 0.5)), 40, 40))
    return fits, ads


def random_logistic_instance(rng, k):
    p1, p0 = rng.uniform(0.1, 0.9, k), rng.uniform(0.1, 0.9, k)
    n_t, n_c = rng.integers(10, 200, k).astype(float), rng.integers(10, 200, k).astype(float)
    sa = float(rng.uniform(0.01, 1.5))
    terms = LogisticSelectionTerms.from_probabilities(p1, p0, n_t, n_c, sa)
    a, b = n_t * p1 * (1 - p1), n_c * p0 * (1 - p0)
    fits = [GlmmStudyFit(str(j), np.array([0.1]), np.array([0.0]),
                         np.array([[a[j], a[j]], [a[j], a[j] + b[j]]])) for j in range(k)]
    ads = [AdStudy(str(j), 0.1, float(1 / a[j] + 1 / b[j]), 10, 10) for j in range(k)]
    return terms, fits, ads, np.diag([0.0, sa])
