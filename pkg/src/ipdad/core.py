"""Study containers, CSV ingestion and validation.

Two kinds of study enter a combined analysis: individual participant data
(:class:`IpdStudy`, one row per participant) and aggregate data
(:class:`AdStudy`, a published effect estimate with its variance).  A
:class:`StudyCollection` holds both, keyed by an opaque string identifier
and kept in input order.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

CONTINUOUS = "continuous"
BINARY = "binary"
OUTCOME_KINDS = (CONTINUOUS, BINARY)

IPD_COLUMNS = ("study_id", "y", "x")
AD_COLUMNS = ("study_id", "beta_hat", "var_hat", "n_t", "n_c")
AD_CASE_COLUMNS = ("cases_t", "cases_c")


class InputError(ValueError):
    """Malformed input file or a study violating its invariants."""


class StudyValidationError(InputError):
    def __init__(self, study_id: str, rule: str):
        self.study_id = study_id
        self.rule = rule
        super().__init__(f"study {study_id!r}: {rule}")


class EstimabilityError(ArithmeticError):
    """A quantity is not identified by the supplied data."""


class SeparationError(EstimabilityError):
    """Logistic MLE does not exist (an arm has all-0 or all-1 responses)."""


class ConvergenceError(RuntimeError):
    """An iterative fit failed to converge."""


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class IpdStudy:
    """Per-participant responses ``y`` and 0/1 treatment indicators ``x``."""

    study_id: str
    responses: np.ndarray
    treatment: np.ndarray
    outcome_kind: str = CONTINUOUS

    def __post_init__(self):
        y = _frozen(self.responses)
        x = _frozen(self.treatment)
        object.__setattr__(self, "responses", y)
        object.__setattr__(self, "treatment", x)
        sid = self.study_id
        if self.outcome_kind not in OUTCOME_KINDS:
            raise StudyValidationError(sid, f"unknown outcome kind {self.outcome_kind!r}")
        if y.ndim != 1 or x.shape != y.shape:
            raise StudyValidationError(sid, "responses and treatment differ in length")
        if y.size < 2:
            raise StudyValidationError(sid, "fewer than 2 participants")
        if not np.all(np.isfinite(y)):
            raise StudyValidationError(sid, "non-finite response")
        if not np.all((x == 0) | (x == 1)):
            raise StudyValidationError(sid, "treatment indicator not in {0,1}")
        n_t = int(x.sum())
        if n_t == 0 or n_t == y.size:
            raise StudyValidationError(sid, "single-arm study")
        if self.outcome_kind == BINARY and not np.all((y == 0) | (y == 1)):
            raise StudyValidationError(sid, "binary response not in {0,1}")

    @property
    def n(self) -> int:
        return int(self.responses.size)

    @property
    def n_t(self) -> int:
        return int(self.treatment.sum())

    @property
    def n_c(self) -> int:
        return self.n - self.n_t

    @property
    def pi(self) -> float:
        return self.n_t / self.n

    def arm_counts(self) -> tuple[float, float, int, int]:
        """(cases_t, cases_c, n_t, n_c) for a binary study."""
        t = self.treatment == 1
        return float(self.responses[t].sum()), float(self.responses[~t].sum()), self.n_t, self.n_c

    def __eq__(self, other):
        if not isinstance(other, IpdStudy):
            return NotImplemented
        return (
            self.study_id == other.study_id
            and self.outcome_kind == other.outcome_kind
            and np.array_equal(self.responses, other.responses)
            and np.array_equal(self.treatment, other.treatment)
        )

    __hash__ = None


@dataclass(frozen=True)
class AdStudy:
    """Published summary of one study: effect estimate, variance, arm sizes."""

    study_id: str
    beta_hat: float
    var_hat: float
    n_t: int
    n_c: int
    cases_t: float | None = None
    cases_c: float | None = None

    def __post_init__(self):
        sid = self.study_id
        if not math.isfinite(self.beta_hat):
            raise StudyValidationError(sid, "non-finite beta_hat")
        if not (math.isfinite(self.var_hat) and self.var_hat > 0):
            raise StudyValidationError(sid, "var_hat must be positive")
        if self.n_t < 1 or self.n_c < 1:
            raise StudyValidationError(sid, "arm sizes must be at least 1")
        if (self.cases_t is None) != (self.cases_c is None):
            raise StudyValidationError(sid, "cases_t and cases_c must be given together")
        if self.cases_t is not None:
            if not (0 <= self.cases_t <= self.n_t and 0 <= self.cases_c <= self.n_c):
                raise StudyValidationError(sid, "case counts outside [0, arm size]")

    @property
    def n(self) -> int:
        return self.n_t + self.n_c

    @property
    def pi(self) -> float:
        return self.n_t / self.n

    @property
    def has_cases(self) -> bool:
        return self.cases_t is not None


@dataclass(frozen=True)
class Partition:
    """IPD set ``s1`` and AD set ``s2`` over a collection's study identifiers."""

    s1: frozenset
    s2: frozenset

    def __post_init__(self):
        object.__setattr__(self, "s1", frozenset(self.s1))
        object.__setattr__(self, "s2", frozenset(self.s2))
        if self.s1 & self.s2:
            raise InputError(f"studies in both IPD and AD sets: {sorted(self.s1 & self.s2)}")

    @property
    def k1(self) -> int:
        return len(self.s1)

    @property
    def k2(self) -> int:
        return len(self.s2)

    @classmethod
    def from_ipd(cls, study_ids: Iterable[str], ipd_ids: Iterable[str]) -> "Partition":
        ids = list(study_ids)
        s1 = set(ipd_ids)
        return cls(frozenset(s1), frozenset(i for i in ids if i not in s1))


@dataclass(frozen=True)
class StudyCollection:
    """IPD and AD studies keyed by identifier; ``order`` is the input order."""

    ipd: Mapping[str, IpdStudy] = field(default_factory=dict)
    ad: Mapping[str, AdStudy] = field(default_factory=dict)
    outcome_kind: str = CONTINUOUS
    order: tuple = ()

    def __post_init__(self):
        ipd, ad = dict(self.ipd), dict(self.ad)
        object.__setattr__(self, "ipd", ipd)
        object.__setattr__(self, "ad", ad)
        clash = set(ipd) & set(ad)
        if clash:
            raise InputError(f"identifiers present as both IPD and AD: {sorted(clash)}")
        for s in ipd.values():
            if s.outcome_kind != self.outcome_kind:
                raise StudyValidationError(s.study_id, "outcome kind differs from collection")
        order = tuple(self.order) or tuple(ipd) + tuple(ad)
        if sorted(order) != sorted(set(ipd) | set(ad)) or len(set(order)) != len(order):
            raise InputError("order does not list every study exactly once")
        object.__setattr__(self, "order", order)

    @property
    def study_ids(self) -> tuple:
        return self.order

    @property
    def k(self) -> int:
        return len(self.order)

    def merge(self, other: "StudyCollection") -> "StudyCollection":
        if other.outcome_kind != self.outcome_kind and other.ipd and self.ipd:
            raise InputError("cannot merge collections with different outcome kinds")
        kind = self.outcome_kind if self.ipd or not other.ipd else other.outcome_kind
        return StudyCollection(
            {**self.ipd, **other.ipd}, {**self.ad, **other.ad}, kind, self.order + other.order
        )

    def as_ad(self, study_id: str) -> AdStudy:
        """AD summary of a study, computing it from IPD when needed."""
        if study_id in self.ad:
            return self.ad[study_id]
        return summarize_ipd(self.ipd[study_id], self.outcome_kind)

    def all_ad(self) -> list[AdStudy]:
        return [self.as_ad(s) for s in self.order]

    def n_pi(self) -> tuple[np.ndarray, np.ndarray]:
        """Study sizes and treatment proportions in input order."""
        n, pi = [], []
        for s in self.order:
            st = self.ipd.get(s) or self.ad[s]
            n.append(st.n)
            pi.append(st.n_t / st.n)
        return np.array(n, dtype=float), np.array(pi)


def _read_rows(path, required, optional=()):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        missing = [c for c in required if c not in header]
        if missing:
            raise InputError(f"{path}: missing column(s) {missing}")
        reader.fieldnames = header
        rows = list(reader)
    present = [c for c in optional if c in header]
    return rows, present


def _num(value, path, line, col):
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise InputError(f"{path}:{line}: non-numeric {col} {value!r}") from None
    if not math.isfinite(out):
        raise InputError(f"{path}:{line}: non-finite {col} {value!r}")
    return out


def _count(value, path, line, col):
    out = _num(value, path, line, col)
    if out != int(out):
        raise InputError(f"{path}:{line}: {col} must be an integer, got {value!r}")
    return int(out)


def load_ipd(path, outcome_kind: str = CONTINUOUS) -> StudyCollection:
    """Read ``study_id,y,x`` rows; rows of a study are grouped in input order."""
    if outcome_kind not in OUTCOME_KINDS:
        raise InputError(f"unknown outcome kind {outcome_kind!r}")
    rows, _ = _read_rows(path, IPD_COLUMNS)
    ys: dict[str, list] = {}
    xs: dict[str, list] = {}
    for line, row in enumerate(rows, start=2):
        sid = (row["study_id"] or "").strip()
        if not sid:
            raise InputError(f"{path}:{line}: empty study_id")
        ys.setdefault(sid, []).append(_num(row["y"], path, line, "y"))
        xs.setdefault(sid, []).append(_num(row["x"], path, line, "x"))
    ipd = {sid: IpdStudy(sid, ys[sid], xs[sid], outcome_kind) for sid in ys}
    return StudyCollection(ipd=ipd, outcome_kind=outcome_kind)


def load_ad(path, outcome_kind: str = CONTINUOUS) -> StudyCollection:
    """Read ``study_id,beta_hat,var_hat,n_t,n_c[,cases_t,cases_c]`` rows."""
    rows, opt = _read_rows(path, AD_COLUMNS, AD_CASE_COLUMNS)
    if len(opt) == 1:
        raise InputError(f"{path}: cases_t and cases_c must both be present")
    ad: dict[str, AdStudy] = {}
    for line, row in enumerate(rows, start=2):
        sid = (row["study_id"] or "").strip()
        if not sid:
            raise InputError(f"{path}:{line}: empty study_id")
        if sid in ad:
            raise InputError(f"{path}:{line}: duplicate study_id {sid!r}")
        cases = (None, None)
        if opt and (row["cases_t"] or "").strip() != "":
            cases = (_num(row["cases_t"], path, line, "cases_t"),
                     _num(row["cases_c"], path, line, "cases_c"))
        ad[sid] = AdStudy(
            sid,
            _num(row["beta_hat"], path, line, "beta_hat"),
            _num(row["var_hat"], path, line, "var_hat"),
            _count(row["n_t"], path, line, "n_t"),
            _count(row["n_c"], path, line, "n_c"),
            *cases,
        )
    return StudyCollection(ad=ad, outcome_kind=outcome_kind)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 2**53 else repr(v)


def write_ipd(collection: StudyCollection, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(IPD_COLUMNS)
        for sid in collection.order:
            st = collection.ipd.get(sid)
            if st is None:
                continue
            for y, x in zip(st.responses, st.treatment):
                w.writerow([sid, _fmt(y), _fmt(x)])


def write_ad(collection: StudyCollection, path) -> None:
    studies = [collection.ad[s] for s in collection.order if s in collection.ad]
    with_cases = any(s.has_cases for s in studies)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(AD_COLUMNS + (AD_CASE_COLUMNS if with_cases else ()))
        for s in studies:
            row = [s.study_id, _fmt(s.beta_hat), _fmt(s.var_hat), s.n_t, s.n_c]
            if with_cases:
                row += ["", ""] if not s.has_cases else [_fmt(s.cases_t), _fmt(s.cases_c)]
            w.writerow(row)


def summarize_ipd(study: IpdStudy, outcome_kind: str | None = None) -> AdStudy:
    """Reduce an IPD study to its AD summary (within-study MLE and variance).

    Continuous outcomes give the treated-minus-control mean difference with
    variance ``s^2 / (n pi (1 - pi))``, ``s^2`` the pooled within-arm
    residual variance on ``n - 2`` degrees of freedom.  Binary outcomes give
    the logistic log odds ratio and the inverse observed information, with
    the 2x2 case counts attached.
    """
    kind = outcome_kind or study.outcome_kind
    y, x = study.responses, study.treatment == 1
    n, n_t = study.n, study.n_t
    if kind == BINARY:
        from .glmm import fit_study_logistic

        fit = fit_study_logistic(study)
        cases_t, cases_c, _, _ = study.arm_counts()
        return AdStudy(study.study_id, float(fit.beta_hat[0]), float(fit.covariance[0, 0]),
                       n_t, n - n_t, cases_t, cases_c)
    yt, yc = np.sort(y[x]), np.sort(y[~x])
    beta = yt.mean() - yc.mean()
    if n <= 2:
        raise EstimabilityError(f"study {study.study_id!r}: no residual degrees of freedom")
    ss = np.sum((yt - yt.mean()) ** 2) + np.sum((yc - yc.mean()) ** 2)
    sigma_sq = ss / (n - 2)
    if sigma_sq <= 0:
        raise EstimabilityError(f"study {study.study_id!r}: zero residual variance")
    pi = n_t / n
    return AdStudy(study.study_id, float(beta), float(sigma_sq / (n * pi * (1 - pi))), n_t, n - n_t)


def expand_counts(study_id: str, cases_t: int, cases_c: int, n_t: int, n_c: int) -> IpdStudy:
    """Participant-level binary IPD reproducing a 2x2 table (treated first)."""
    if not (0 <= cases_t <= n_t and 0 <= cases_c <= n_c):
        raise StudyValidationError(study_id, "case counts outside the arm sizes")
    y = np.concatenate([np.ones(cases_t), np.zeros(n_t - cases_t),
                        np.ones(cases_c), np.zeros(n_c - cases_c)])
    x = np.concatenate([np.ones(n_t), np.zeros(n_c)])
    return IpdStudy(study_id, y, x, BINARY)


def load_example(name: str = "beta_blockers") -> StudyCollection:
    """Bundled AD file (with case counts) shipped in ``ipdad/data``."""
    from importlib.resources import as_file, files

    with as_file(files("ipdad") / "data" / f"{name}.csv") as path:
        return load_ad(path, BINARY)
