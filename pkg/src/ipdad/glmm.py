"""Combining IPD and AD studies in a generalized linear mixed model.

Study parameters ``theta_j = (beta_j, alpha_j)`` are drawn from
``N(theta, Sigma)``.  An IPD study is represented by its MLE and observed
information; integrating its quadratic (Laplace) log-likelihood against the
random-effect density gives ``theta_hat_j ~ N(theta, Sigma + I_j^{-1})``.
An AD study contributes ``beta_hat_j ~ N(beta, Sigma_bb + V_j)``.  The sum
of these Gaussian terms is a composite log-likelihood; for fixed ``Sigma``
the mean is a precision-weighted average, and ``Sigma`` is found by
maximising the profiled objective with a Nelder-Mead search over a
log-Cholesky factor.

Only the logistic link with a single treatment coefficient and intercept
is fitted here, but the block algebra does not depend on the family.
Parameter vectors are ordered ``(beta..., alpha...)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

from .core import (
    BINARY,
    AdStudy,
    ConvergenceError,
    EstimabilityError,
    InputError,
    IpdStudy,
    Partition,
    SeparationError,
    StudyCollection,
)

_LOG2PI = math.log(2 * math.pi)
SEPARATION_BOUND = 10.0
STRUCTURES = ("full", "independent", "alpha_only", "beta_only")
_MIN_LOG_SD = -10.0
BOUNDARY_VARIANCE = 1e-6


@dataclass(frozen=True, eq=False)
class GlmmStudyFit:
    """Per-study MLE with observed information (order: beta, then alpha)."""

    study_id: str
    beta_hat: np.ndarray
    alpha_hat: np.ndarray
    info: np.ndarray
    corrected: bool = False

    @property
    def theta_hat(self) -> np.ndarray:
        return np.concatenate([self.beta_hat, self.alpha_hat])

    @property
    def covariance(self) -> np.ndarray:
        return np.linalg.inv(self.info)

    @property
    def p_beta(self) -> int:
        return self.beta_hat.size

    def to_ad(self, n_t: int, n_c: int, cases=(None, None)) -> AdStudy:
        return AdStudy(self.study_id, float(self.beta_hat[0]), float(self.covariance[0, 0]),
                       n_t, n_c, *cases)


@dataclass(frozen=True, eq=False)
class RandomEffectCov:
    """Covariance of the study-level random effects ``(beta_j, alpha_j)``."""

    matrix: np.ndarray
    p_beta: int = 1

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or not 0 < self.p_beta <= m.shape[0]:
            raise InputError("random-effect covariance must be square with a beta block")
        if not np.allclose(m, m.T, rtol=0, atol=1e-12 * max(1.0, np.abs(m).max())):
            raise InputError("random-effect covariance must be symmetric")
        m = 0.5 * (m + m.T)
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise InputError("random-effect covariance must be positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def diagonal(cls, sigma_bb: float, sigma_aa: float) -> "RandomEffectCov":
        return cls(np.diag([sigma_bb, sigma_aa]))

    @property
    def bb(self) -> np.ndarray:
        return self.matrix[: self.p_beta, : self.p_beta]

    @property
    def aa(self) -> np.ndarray:
        return self.matrix[self.p_beta:, self.p_beta:]

    @property
    def ba(self) -> np.ndarray:
        return self.matrix[: self.p_beta, self.p_beta:]


@dataclass(frozen=True, eq=False)
class VarCompFit:
    sigma: RandomEffectCov
    loglik: float
    params: np.ndarray
    structure: str
    converged: bool
    boundary: bool
    n_iter: int


@dataclass(frozen=True, eq=False)
class GlmmCombined:
    beta_hat: np.ndarray
    alpha_hat: np.ndarray
    sigma_hat: RandomEffectCov
    variance_beta: np.ndarray
    loglik: float
    partition: Partition | None = None
    converged: bool = True
    boundary: bool = False

    @property
    def se(self) -> float:
        return math.sqrt(float(self.variance_beta[0, 0]))


def _as_matrix(sigma) -> np.ndarray:
    return sigma.matrix if isinstance(sigma, RandomEffectCov) else np.asarray(sigma, dtype=float)


# -- per-study logistic fits -------------------------------------------------

def _grouped_loglik(theta, s_t, s_c, n_t, n_c):
    beta, alpha = theta
    eta_t, eta_c = alpha + beta, alpha
    return (s_t * eta_t - n_t * np.logaddexp(0, eta_t)
            + s_c * eta_c - n_c * np.logaddexp(0, eta_c))


def fit_logistic_counts(
    study_id: str,
    cases_t: float,
    cases_c: float,
    n_t: float,
    n_c: float,
    continuity: float = 0.0,
    max_iter: int = 100,
    tol: float = 1e-10,
) -> GlmmStudyFit:
    """Intercept + treatment logistic MLE from the 2x2 table of one study.

    With ``continuity > 0`` a table with an empty cell has ``continuity``
    added to all four cells before fitting; without it such a table raises
    :class:`SeparationError`.  Newton-Raphson with step halving.
    """
    cells = (cases_t, n_t - cases_t, cases_c, n_c - cases_c)
    corrected = False
    if min(cells) <= 0:
        if continuity <= 0:
            raise SeparationError(f"study {study_id!r}: an arm has all-0 or all-1 responses")
        cases_t, cases_c = cases_t + continuity, cases_c + continuity
        n_t, n_c = n_t + 2 * continuity, n_c + 2 * continuity
        corrected = True
    p_t0 = cases_t / n_t
    p_c0 = cases_c / n_c
    # start near the answer but not on it, so the iteration is exercised
    theta = np.array([0.5 * (math.log(p_t0 / (1 - p_t0)) - math.log(p_c0 / (1 - p_c0))),
                      0.5 * math.log(p_c0 / (1 - p_c0))])
    ll = _grouped_loglik(theta, cases_t, cases_c, n_t, n_c)
    for _ in range(max_iter):
        p_t = 1 / (1 + math.exp(-(theta[1] + theta[0])))
        p_c = 1 / (1 + math.exp(-theta[1]))
        r_t, r_c = cases_t - n_t * p_t, cases_c - n_c * p_c
        grad = np.array([r_t, r_t + r_c])
        w_t, w_c = n_t * p_t * (1 - p_t), n_c * p_c * (1 - p_c)
        info = np.array([[w_t, w_t], [w_t, w_t + w_c]])
        if np.linalg.norm(grad) < tol:
            return GlmmStudyFit(study_id, theta[:1].copy(), theta[1:].copy(), info, corrected)
        step = np.linalg.solve(info, grad)
        for _ in range(60):
            trial = theta + step
            ll_trial = _grouped_loglik(trial, cases_t, cases_c, n_t, n_c)
            if ll_trial >= ll - 1e-12 * abs(ll):
                break
            step = step / 2
        theta, ll = trial, ll_trial
        if np.any(np.abs(theta) > SEPARATION_BOUND):
            raise SeparationError(f"study {study_id!r}: |coefficient| exceeded {SEPARATION_BOUND}")
    raise ConvergenceError(f"study {study_id!r}: logistic fit did not converge in {max_iter} iterations")


def fit_study_logistic(study: IpdStudy, continuity: float = 0.0, **kw) -> GlmmStudyFit:
    """Logistic MLE of ``(beta, alpha)`` for a binary IPD study."""
    if study.outcome_kind != BINARY:
        raise InputError(f"study {study.study_id!r} is not binary")
    cases_t, cases_c, n_t, n_c = study.arm_counts()
    return fit_logistic_counts(study.study_id, cases_t, cases_c, n_t, n_c, continuity, **kw)


def study_loglik(study: IpdStudy, beta: float, alpha: float) -> float:
    """Participant-level Bernoulli log-likelihood (no grouping)."""
    eta = alpha + beta * study.treatment
    return float(np.sum(study.responses * eta - np.logaddexp(0, eta)))


# -- likelihood blocks -------------------------------------------------------

def laplace_block(fit: GlmmStudyFit, sigma) -> np.ndarray:
    """Precision ``(Sigma + I_j^{-1})^{-1}`` of an IPD study's MLE."""
    s = _as_matrix(sigma) + fit.covariance
    try:
        np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        raise EstimabilityError(f"study {fit.study_id!r}: Sigma + I^-1 is not positive definite") from None
    out = np.linalg.inv(s)
    return 0.5 * (out + out.T)


def ad_block(ad: AdStudy, sigma_bb, p_alpha: int = 1) -> np.ndarray:
    """Precision block of an AD study; only the beta coordinates are informed."""
    sbb = np.atleast_2d(np.asarray(sigma_bb, dtype=float))
    pb = sbb.shape[0]
    out = np.zeros((pb + p_alpha, pb + p_alpha))
    out[:pb, :pb] = np.linalg.inv(sbb + ad.var_hat * np.eye(pb))
    return out


class _Blocks:
    """Stacked per-study summaries so every Sigma evaluation is vectorised."""

    def __init__(self, fits: Sequence[GlmmStudyFit], ads: Sequence[AdStudy]):
        self.fits, self.ads = list(fits), list(ads)
        if self.fits:
            self.p_beta = self.fits[0].p_beta
            self.p = self.fits[0].theta_hat.size
            self.theta = np.array([f.theta_hat for f in self.fits])
            self.cov = np.array([f.covariance for f in self.fits])
        else:
            self.p_beta, self.p = 1, 2
            self.theta = np.zeros((0, 2))
            self.cov = np.zeros((0, 2, 2))
        self.b = np.array([a.beta_hat for a in self.ads], dtype=float)
        self.v = np.array([a.var_hat for a in self.ads], dtype=float)
        if self.p_beta != 1 and self.ads:
            raise InputError("AD studies carry a scalar treatment effect")

    @property
    def m(self) -> int:
        return len(self.fits)

    def evaluate(self, sigma: np.ndarray):
        """Profile mean, summed precision and log-likelihood at ``sigma``."""
        pb = self.p_beta
        prec = np.zeros((self.p, self.p))
        rhs = np.zeros(self.p)
        ll = 0.0
        delta = None
        if self.m:
            s = sigma[None, :, :] + self.cov
            sign, logdet = np.linalg.slogdet(s)
            if np.any(sign <= 0):
                raise EstimabilityError("Sigma + I^-1 is not positive definite")
            delta = np.linalg.inv(s)
            prec += delta.sum(axis=0)
            rhs += np.einsum("mij,mj->i", delta, self.theta)
            ll += -0.5 * (logdet.sum() + self.m * self.p * _LOG2PI)
        if self.ads:
            s_ad = sigma[0, 0] + self.v
            if np.any(s_ad <= 0):
                raise EstimabilityError("Sigma_bb + V is not positive")
            w = 1.0 / s_ad
            prec[0, 0] += w.sum()
            rhs[0] += np.sum(w * self.b)
            ll += -0.5 * (np.sum(np.log(s_ad)) + len(self.ads) * _LOG2PI)
        if self.m:
            try:
                mean = np.linalg.solve(prec, rhs)
            except np.linalg.LinAlgError:
                raise EstimabilityError("summed precision is singular") from None
        else:
            mean = np.full(self.p, np.nan)
            mean[:pb] = rhs[:pb] / prec[0, 0]
        if self.m:
            d = self.theta - mean
            ll += -0.5 * np.einsum("mi,mij,mj->", d, delta, d)
        if self.ads:
            ll += -0.5 * np.sum((self.b - mean[0]) ** 2 * w)
        return mean, prec, float(ll), delta

    def grad_sigma(self, sigma: np.ndarray) -> np.ndarray:
        """d loglik / d Sigma at the profiled mean (envelope theorem)."""
        mean, _, _, delta = self.evaluate(sigma)
        g = np.zeros((self.p, self.p))
        if self.m:
            d = self.theta - mean
            dd = np.einsum("mij,mj->mi", delta, d)
            g += 0.5 * (np.einsum("mi,mj->ij", dd, dd) - delta.sum(axis=0))
        if self.ads:
            s_ad = sigma[0, 0] + self.v
            g[0, 0] += 0.5 * np.sum((self.b - mean[0]) ** 2 / s_ad**2 - 1 / s_ad)
        return g


def profile_mean(fits, ads, sigma) -> tuple[np.ndarray, np.ndarray]:
    """Precision-weighted ``(beta(Sigma), alpha(Sigma))``.

    Without IPD fits ``alpha`` is not identified and is returned as NaN;
    ``beta`` is then the random-effects weighted mean of the AD estimates.
    """
    blocks = _Blocks(fits, ads)
    mean, _, _, _ = blocks.evaluate(_as_matrix(sigma))
    return mean[: blocks.p_beta], mean[blocks.p_beta:]


def variance_at(fits, ads, sigma) -> np.ndarray:
    """Covariance of the profiled treatment effect(s) at fixed ``Sigma``."""
    blocks = _Blocks(fits, ads)
    _, prec, _, _ = blocks.evaluate(_as_matrix(sigma))
    pb = blocks.p_beta
    if blocks.m:
        return np.linalg.inv(prec)[:pb, :pb]
    return np.array([[1.0 / prec[0, 0]]])


def composite_loglik(fits, ads, sigma) -> float:
    """Composite Gaussian log-likelihood profiled over the mean.

    Per-study constants ``l_j(theta_hat_j)`` and the Laplace Jacobian terms
    are omitted; they do not involve ``(theta, Sigma)``.
    """
    return _Blocks(fits, ads).evaluate(_as_matrix(sigma))[2]


# -- Sigma parameterisation --------------------------------------------------

def n_params(structure: str, p: int = 2) -> int:
    return {"full": p * (p + 1) // 2, "independent": p, "alpha_only": 1, "beta_only": 1}[structure]


def sigma_from_params(params, structure: str, p: int = 2, p_beta: int = 1) -> np.ndarray:
    """Map unconstrained parameters to a PSD covariance.

    ``full``: lower-triangular factor with log-diagonal, filled row-wise.
    ``independent``: log standard deviations of a diagonal matrix.
    ``alpha_only`` / ``beta_only``: one log standard deviation, other
    entries zero.  Log standard deviations are floored at ``exp(-10)``.
    """
    params = np.asarray(params, dtype=float)
    if structure == "full":
        low = np.zeros((p, p))
        it = iter(params)
        for i in range(p):
            for j in range(i + 1):
                val = next(it)
                low[i, j] = math.exp(max(val, _MIN_LOG_SD)) if i == j else val
        return low @ low.T
    sd = np.exp(np.maximum(params, _MIN_LOG_SD))
    if structure == "independent":
        return np.diag(sd**2)
    out = np.zeros((p, p))
    if structure == "alpha_only":
        out[p_beta:, p_beta:] = np.eye(p - p_beta) * sd[0] ** 2
    elif structure == "beta_only":
        out[:p_beta, :p_beta] = np.eye(p_beta) * sd[0] ** 2
    else:
        raise InputError(f"unknown covariance structure {structure!r}")
    return out


def params_from_sigma(sigma, structure: str, p_beta: int = 1) -> np.ndarray:
    m = _as_matrix(sigma)
    p = m.shape[0]
    floor = math.exp(2 * _MIN_LOG_SD)
    if structure == "full":
        low = np.linalg.cholesky(m + floor * np.eye(p))
        out = []
        for i in range(p):
            for j in range(i + 1):
                out.append(math.log(low[i, j]) if i == j else low[i, j])
        return np.array(out)
    diag = np.maximum(np.diag(m), floor)
    if structure == "independent":
        return 0.5 * np.log(diag)
    if structure == "alpha_only":
        return np.array([0.5 * math.log(diag[p_beta])])
    if structure == "beta_only":
        return np.array([0.5 * math.log(diag[0])])
    raise InputError(f"unknown covariance structure {structure!r}")


def _dsigma_dparams(params, structure: str, p: int, p_beta: int) -> list[np.ndarray]:
    params = np.asarray(params, dtype=float)
    out = []
    if structure == "full":
        low = np.zeros((p, p))
        pos = []
        it = iter(params)
        for i in range(p):
            for j in range(i + 1):
                val = next(it)
                low[i, j] = math.exp(max(val, _MIN_LOG_SD)) if i == j else val
                pos.append((i, j, val))
        for i, j, val in pos:
            dl = np.zeros((p, p))
            if i == j:
                dl[i, j] = low[i, j] if val > _MIN_LOG_SD else 0.0
            else:
                dl[i, j] = 1.0
            out.append(dl @ low.T + low @ dl.T)
        return out
    for t, val in enumerate(params):
        d = np.zeros((p, p))
        deriv = 2 * math.exp(2 * val) if val > _MIN_LOG_SD else 0.0
        if structure == "independent":
            d[t, t] = deriv
        elif structure == "alpha_only":
            d[p_beta:, p_beta:] = np.eye(p - p_beta) * deriv
        else:
            d[:p_beta, :p_beta] = np.eye(p_beta) * deriv
        out.append(d)
    return out


def composite_loglik_params(fits, ads, params, structure: str = "full") -> float:
    blocks = _Blocks(fits, ads)
    return blocks.evaluate(sigma_from_params(params, structure, blocks.p, blocks.p_beta))[2]


def composite_loglik_grad(fits, ads, params, structure: str = "full") -> np.ndarray:
    """Analytic gradient of the profiled composite log-likelihood with
    respect to the unconstrained covariance parameters."""
    blocks = _Blocks(fits, ads)
    sigma = sigma_from_params(params, structure, blocks.p, blocks.p_beta)
    g = blocks.grad_sigma(sigma)
    return np.array([np.sum(g * d) for d in _dsigma_dparams(params, structure, blocks.p, blocks.p_beta)])


# -- variance-component search ----------------------------------------------

def _dl_tau2(b, v) -> float:
    """DerSimonian-Laird moment estimate of between-study variance."""
    if b.size < 2:
        return 0.0
    w = 1 / v
    mean = np.sum(w * b) / w.sum()
    q = np.sum(w * (b - mean) ** 2)
    return max(0.0, (q - (b.size - 1)) / (w.sum() - np.sum(w**2) / w.sum()))


def initial_sigma(fits, ads, floor: float = 0.01) -> np.ndarray:
    """Moment-based start: DL for the beta block, spread of alpha_hat for
    the alpha block, zero correlation."""
    if ads:
        b = np.array([a.beta_hat for a in ads])
        v = np.array([a.var_hat for a in ads])
        if len(ads) < 2 and fits:
            b = np.concatenate([b, [f.beta_hat[0] for f in fits]])
            v = np.concatenate([v, [f.covariance[0, 0] for f in fits]])
    else:
        b = np.array([f.beta_hat[0] for f in fits])
        v = np.array([f.covariance[0, 0] for f in fits])
    sbb = max(_dl_tau2(b, v), floor)
    saa = floor
    if len(fits) >= 2:
        alphas = np.array([f.alpha_hat[0] for f in fits])
        within = np.mean([f.covariance[-1, -1] for f in fits])
        saa = max(float(np.var(alphas, ddof=1)) - within, floor)
    return np.diag([sbb, saa])


def maximize_varcomp(
    fits: Sequence[GlmmStudyFit],
    ads: Sequence[AdStudy],
    init=None,
    structure: str = "full",
    max_iter: int = 500,
    xatol: float = 1e-8,
    fatol: float = 1e-10,
) -> VarCompFit:
    """Maximise the profiled composite log-likelihood over ``Sigma``.

    Nelder-Mead on the unconstrained parameters, restarted once from the
    optimum.  Without IPD fits only ``Sigma_bb`` is identified and the
    search is restricted to it.  ``converged`` is False when the iteration
    cap was hit; ``boundary`` flags a free variance below 1e-6.
    """
    fits, ads = list(fits), list(ads)
    if len(fits) + len(ads) < 2:
        raise InputError("variance components need at least 2 studies")
    if structure not in STRUCTURES:
        raise InputError(f"unknown covariance structure {structure!r}")
    if not fits:
        structure = "beta_only"
    blocks = _Blocks(fits, ads)
    p, pb = blocks.p, blocks.p_beta
    start = _as_matrix(init) if init is not None else initial_sigma(fits, ads)
    x0 = params_from_sigma(start, structure, pb)

    def nll(x):
        try:
            return -blocks.evaluate(sigma_from_params(x, structure, p, pb))[2]
        except EstimabilityError:
            return math.inf

    n_iter, converged = 0, True
    x = x0
    for step in (0.5, 0.1):
        simplex = np.vstack([x] + [x + step * e for e in np.eye(x.size)])
        res = optimize.minimize(nll, x, method="Nelder-Mead",
                                options={"initial_simplex": simplex, "maxiter": max_iter,
                                         "xatol": xatol, "fatol": fatol})
        n_iter += int(res.nit)
        converged = converged and res.nit < max_iter
        x = res.x
    sigma = sigma_from_params(x, structure, p, pb)
    if not converged:
        warnings.warn("variance-component search hit the iteration cap", stacklevel=2)
    free = {"full": range(p), "independent": range(p), "alpha_only": range(pb, p),
            "beta_only": range(pb)}[structure]
    boundary = any(sigma[i, i] < BOUNDARY_VARIANCE for i in free)
    return VarCompFit(RandomEffectCov(sigma, pb), -float(nll(x)), x, structure,
                      converged, boundary, n_iter)


# -- full pipeline -----------------------------------------------------------

def _summaries(collection: StudyCollection, partition: Partition, continuity: float):
    fits, ads = [], []
    for sid in collection.order:
        if sid in partition.s1:
            if sid not in collection.ipd:
                raise InputError(f"study {sid!r} is in the IPD set but has no IPD")
            fits.append(fit_study_logistic(collection.ipd[sid], continuity))
        elif sid in partition.s2:
            if sid in collection.ad:
                ads.append(collection.ad[sid])
            else:
                st = collection.ipd[sid]
                ct, cc, nt, nc = st.arm_counts()
                ads.append(fit_study_logistic(st, continuity).to_ad(nt, nc, (ct, cc)))
        else:
            raise InputError(f"study {sid!r} is in neither set of the partition")
    return fits, ads


def combine(fits, ads, structure: str = "full", init=None, partition=None, **kw) -> GlmmCombined:
    """Estimate ``Sigma``, then the profiled mean and its variance block."""
    vc = maximize_varcomp(fits, ads, init=init, structure=structure, **kw)
    blocks = _Blocks(fits, ads)
    mean, _, ll, _ = blocks.evaluate(vc.sigma.matrix)
    pb = blocks.p_beta
    var = variance_at(fits, ads, vc.sigma)
    return GlmmCombined(mean[:pb], mean[pb:], vc.sigma, var, ll, partition, vc.converged, vc.boundary)


def combined_estimate_glmm(
    collection: StudyCollection,
    partition: Partition,
    structure: str = "full",
    continuity: float = 0.0,
    **kw,
) -> GlmmCombined:
    """Fit IPD studies in ``s1``, take AD for ``s2`` and combine.

    Studies in ``s2`` that only have IPD are summarised by their own
    logistic fit.  ``continuity`` is passed to the per-study fits.
    """
    if collection.outcome_kind != BINARY:
        raise InputError("only the logistic family is implemented; outcome must be binary")
    fits, ads = _summaries(collection, partition, continuity)
    return combine(fits, ads, structure=structure, partition=partition, **kw)


# -- logistic closed forms ---------------------------------------------------

@dataclass(frozen=True, eq=False)
class LogisticSelectionTerms:
    """Per-study ``g``, ``h`` and ``h / c`` of the logistic variance formula.

    ``u`` and ``v`` are the selection weights ``g`` and ``h / c``.
    """

    g: np.ndarray
    h: np.ndarray
    h_over_c: np.ndarray

    @property
    def u(self) -> np.ndarray:
        return self.g

    @property
    def v(self) -> np.ndarray:
        return self.h_over_c

    @classmethod
    def from_probabilities(cls, p1, p0, n_t, n_c, sigma_alpha_sq: float) -> "LogisticSelectionTerms":
        p1, p0 = np.asarray(p1, dtype=float), np.asarray(p0, dtype=float)
        a = np.asarray(n_t, dtype=float) * p1 * (1 - p1)
        b = np.asarray(n_c, dtype=float) * p0 * (1 - p0)
        h = 1 / a + 1 / b
        g = 1 / (b / a + 1)
        c = sigma_alpha_sq * h + 1 / (a * b)
        return cls(g, h, h / c)


def logistic_variance_combined(terms: LogisticSelectionTerms, s1) -> float:
    """``[sum_{S1} (h/c)(g - g~)^2 + sum_all 1/h]^{-1}``, ``g~`` the
    ``h/c``-weighted mean of ``g`` over ``S1``."""
    h = np.asarray(terms.h, dtype=float)
    if h.size == 0:
        raise InputError("no studies")
    info = np.sum(1 / h)
    idx = np.unique(np.asarray(list(s1), dtype=int)) if s1 is not None else np.arange(h.size)
    if idx.size:
        w, g = terms.h_over_c[idx], terms.g[idx]
        centre = np.sum(w * g) / w.sum()
        info += np.sum(w * (g - centre) ** 2)
    return float(1 / info)


def selection_weights_logistic(
    ads: Sequence[AdStudy], sigma_alpha_sq: float, mode: str = "rare_disease"
) -> LogisticSelectionTerms:
    """Selection weights estimated from AD alone.

    ``rare_disease`` uses ``g = 1 / ((n_T/n_C) exp(beta_hat) + 1)`` and
    ``h = V_hat``; this ``g`` is one minus the exact ``a/(a+b)``, which
    leaves the spread (and so the selection and the variance) unchanged.
    ``two_by_two`` rebuilds the arm event rates from case counts, adding
    0.5 to every cell of a table with an empty cell.
    """
    if mode == "rare_disease":
        beta = np.array([a.beta_hat for a in ads])
        v = np.array([a.var_hat for a in ads])
        ratio = np.array([a.n_t / a.n_c for a in ads])
        g = 1 / (ratio * np.exp(beta) + 1)
        return LogisticSelectionTerms(g, v, (1 / v) / (sigma_alpha_sq / v + g * (1 - g)))
    if mode == "two_by_two":
        p1, p0, nt, nc = [], [], [], []
        for a in ads:
            if not a.has_cases:
                raise InputError(f"study {a.study_id!r} has no case counts")
            ct, cc, t, c = a.cases_t, a.cases_c, a.n_t, a.n_c
            if min(ct, t - ct, cc, c - cc) <= 0:
                warnings.warn(f"study {a.study_id!r}: empty cell, adding 0.5 to each cell", stacklevel=2)
                ct, cc, t, c = ct + 0.5, cc + 0.5, t + 1, c + 1
            p1.append(ct / t)
            p0.append(cc / c)
            nt.append(t)
            nc.append(c)
        return LogisticSelectionTerms.from_probabilities(p1, p0, nt, nc, sigma_alpha_sq)
    raise InputError(f"unknown weight mode {mode!r}")
