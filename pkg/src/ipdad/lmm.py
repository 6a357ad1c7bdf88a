"""Combined IPD/AD estimation under the one-way linear mixed model.

Study ``j`` follows ``y_ji = alpha_j + beta * x_ji + e_ji`` with
``alpha_j ~ N(alpha, sigma_alpha^2)`` and ``e_ji ~ N(0, sigma_j^2)``.  IPD
studies enter through their marginal likelihood (compound-symmetric
covariance ``sigma_alpha^2 11' + sigma_j^2 I``); AD studies enter as
``beta_hat_j ~ N(beta, var_hat_j)``.

Two variance-component ratios recur throughout::

    b_j = sigma_alpha^2 / sigma_j^2
    a_j = 1 + n_j * b_j

and the variance of the combined treatment-effect estimator depends on the
data only through ``n_j``, ``pi_j`` and the IPD set.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import linalg, optimize, stats

from .core import (
    BINARY,
    CONTINUOUS,
    AdStudy,
    ConvergenceError,
    EstimabilityError,
    InputError,
    IpdStudy,
    Partition,
    StudyCollection,
)


@dataclass(frozen=True)
class VarianceComponents:
    """Between-study variance and within-study error variance(s).

    ``sigma_sq`` is either one pooled value, a sequence aligned with the
    study order, or a mapping from study identifier to variance.
    """

    sigma_alpha_sq: float
    sigma_sq: float | Sequence[float] | Mapping[str, float]

    def __post_init__(self):
        if not (self.sigma_alpha_sq >= 0 and math.isfinite(self.sigma_alpha_sq)):
            raise InputError("sigma_alpha_sq must be finite and nonnegative")
        if isinstance(self.sigma_sq, Mapping):
            values = list(self.sigma_sq.values())
        else:
            values = np.atleast_1d(np.asarray(self.sigma_sq, dtype=float)).tolist()
            if np.ndim(self.sigma_sq) == 1:
                object.__setattr__(self, "sigma_sq", tuple(values))
        if not values or not all(v > 0 and math.isfinite(v) for v in values):
            raise InputError("every sigma_sq entry must be positive")

    @property
    def pooled(self) -> bool:
        return np.ndim(self.sigma_sq) == 0 and not isinstance(self.sigma_sq, Mapping)

    def sigma_sq_vector(self, k: int | None = None, ids: Sequence[str] | None = None) -> np.ndarray:
        if isinstance(self.sigma_sq, Mapping):
            if ids is None:
                raise InputError("study identifiers needed to resolve per-study sigma_sq")
            missing = [i for i in ids if i not in self.sigma_sq]
            if missing:
                raise InputError(f"no sigma_sq for studies {missing}")
            return np.array([self.sigma_sq[i] for i in ids], dtype=float)
        k = len(ids) if ids is not None else k
        if self.pooled:
            return np.full(k, float(self.sigma_sq))
        out = np.asarray(self.sigma_sq, dtype=float)
        if k is not None and out.size != k:
            raise InputError(f"sigma_sq has {out.size} entries for {k} studies")
        return out


@dataclass(frozen=True)
class LmmEstimate:
    alpha_hat: float
    beta_hat: float
    covariance: np.ndarray
    partition: Partition
    variance_beta: float

    @property
    def se(self) -> float:
        return math.sqrt(self.variance_beta)


def _indices(s1, k: int) -> np.ndarray:
    if s1 is None:
        return np.arange(k)
    idx = np.unique(np.asarray(list(s1), dtype=int))
    if idx.size and (idx[0] < 0 or idx[-1] >= k):
        raise InputError(f"IPD index out of range for {k} studies")
    return idx


def _design(n, pi, vc: VarianceComponents):
    n = np.asarray(n, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if n.ndim != 1 or n.size == 0 or pi.shape != n.shape:
        raise InputError("n and pi must be nonempty vectors of equal length")
    if np.any(n < 1):
        raise InputError("study sizes must be at least 1")
    if np.any((pi <= 0) | (pi >= 1)):
        raise InputError("treatment proportions must lie strictly inside (0, 1)")
    s2 = vc.sigma_sq_vector(n.size)
    a = 1.0 + n * vc.sigma_alpha_sq / s2
    return n, pi, s2, a


def ipd_weights(n, pi, vc: VarianceComponents) -> np.ndarray:
    """Per-study weights ``n_j / (sigma_j^2 a_j)`` of the IPD deviation term."""
    n, _, s2, a = _design(n, pi, vc)
    return n / (s2 * a)


def ad_information(n, pi, vc: VarianceComponents) -> np.ndarray:
    """Per-study ``n_j pi_j (1 - pi_j) / sigma_j^2``, the inverse AD variance."""
    n, pi, s2, _ = _design(n, pi, vc)
    return n * pi * (1 - pi) / s2


def variance_combined(n, pi, vc: VarianceComponents, s1: Iterable[int] | None) -> float:
    """Variance of the combined estimator of ``beta`` with IPD for ``s1``.

    ``s1`` holds 0-based study positions (``None`` means every study).  The
    IPD set adds the weighted spread of its treatment proportions around
    their weighted mean to the AD information.
    """
    n, pi, s2, a = _design(n, pi, vc)
    info = np.sum(n * pi * (1 - pi) / s2)
    idx = _indices(s1, n.size)
    if idx.size:
        w = n[idx] / (s2[idx] * a[idx])
        p = pi[idx]
        centre = np.sum(w * p) / np.sum(w)
        info += np.sum(w * (p - centre) ** 2)
    return float(1.0 / info)


def variance_ipd_ma(n, pi, vc: VarianceComponents) -> float:
    return variance_combined(n, pi, vc, None)


def variance_ad_ma(n, pi, vc: VarianceComponents) -> float:
    return variance_combined(n, pi, vc, ())


def relative_efficiency(n, pi, vc: VarianceComponents, s1: Iterable[int] | None) -> float:
    """``v(IPD-MA) / v(IPD-AD-MA)``; 1 when every study contributes IPD."""
    return variance_ipd_ma(n, pi, vc) / variance_combined(n, pi, vc, s1)


def variance_balanced(n: float, pi, sigma_sq: float, sigma_alpha_sq: float, s1) -> float:
    """Balanced homoscedastic closed form (``n_j = n``, ``sigma_j^2 = sigma^2``)."""
    pi = np.asarray(pi, dtype=float)
    idx = _indices(s1, pi.size)
    b = sigma_alpha_sq / sigma_sq
    a = 1 + n * b
    mask = np.zeros(pi.size, bool)
    mask[idx] = True
    q = pi * (1 - pi)
    bracket = n * b / a * q[mask].sum() + q[~mask].sum()
    if idx.size:
        bracket += pi[mask].sum() * (1 - pi[mask]).sum() / (a * idx.size)
    return float(sigma_sq / n / bracket)


def _ipd_normal_equations(study: IpdStudy, sigma_sq: float, sigma_alpha_sq: float):
    """Contribution ``U_j' H_j^{-1} [U_j, y_j]`` of one IPD study.

    ``H_j^{-1} = (I - (b/a) 11') / sigma^2`` (Sherman-Morrison), so only arm
    counts and arm sums are needed.
    """
    y, x = study.responses, study.treatment == 1
    n, n_t = study.n, study.n_t
    b = sigma_alpha_sq / sigma_sq
    a = 1 + n * b
    sum_y = np.sort(y).sum()
    sum_t = np.sort(y[x]).sum()
    gram = np.array([[n / a, n_t / a], [n_t / a, n_t - b * n_t**2 / a]]) / sigma_sq
    rhs = np.array([sum_y / a, sum_t - b * n_t * sum_y / a]) / sigma_sq
    return gram, rhs


def combined_estimate_lmm(
    collection: StudyCollection,
    partition: Partition,
    vc: VarianceComponents,
    ad_variance: str = "reported",
) -> LmmEstimate:
    """GLS estimate of ``(alpha, beta)`` from IPD studies in ``partition.s1``
    and AD studies in ``partition.s2``.

    AD studies without a published summary are summarised from their IPD.
    ``ad_variance="model"`` replaces each AD variance with
    ``sigma_j^2 / (n_j pi_j (1 - pi_j))`` from ``vc``.
    """
    ids = collection.order
    if set(partition.s1) | set(partition.s2) != set(ids):
        raise InputError("partition does not cover the study collection")
    if partition.k1 == 0:
        raise EstimabilityError("alpha is not identified without IPD; use variance_ad_ma for AD-only pooling")
    s2 = dict(zip(ids, vc.sigma_sq_vector(ids=ids)))
    gram = np.zeros((2, 2))
    rhs = np.zeros(2)
    for sid in ids:
        if sid in partition.s1:
            if sid not in collection.ipd:
                raise InputError(f"study {sid!r} is in the IPD set but has no IPD")
            g, r = _ipd_normal_equations(collection.ipd[sid], s2[sid], vc.sigma_alpha_sq)
            gram += g
            rhs += r
        else:
            ad = collection.as_ad(sid)
            v = ad.var_hat if ad_variance == "reported" else s2[sid] / (ad.n * ad.pi * (1 - ad.pi))
            gram[1, 1] += 1.0 / v
            rhs[1] += ad.beta_hat / v
    try:
        factor = linalg.cho_factor(gram)
    except linalg.LinAlgError:
        raise EstimabilityError("normal equations are singular") from None
    theta = linalg.cho_solve(factor, rhs)
    cov = linalg.cho_solve(factor, np.eye(2))
    cov = 0.5 * (cov + cov.T)
    return LmmEstimate(float(theta[0]), float(theta[1]), cov, partition, float(cov[1, 1]))


def estimate_sigma_j(ad: AdStudy) -> float:
    """Back out ``sigma_j^2 = var_hat * n_j pi_j (1 - pi_j)`` from an AD summary."""
    return ad.var_hat * ad.n * ad.pi * (1 - ad.pi)


def pooled_sigma(ads: Sequence[AdStudy]) -> tuple[float, float]:
    """Pooled error variance and Bartlett homogeneity p-value.

    Each study contributes ``n_j - 2`` degrees of freedom.  The p-value is
    reported only; nothing here decides whether pooling is appropriate.
    """
    if len(ads) < 2:
        raise InputError("pooling needs at least 2 studies")
    s = np.array([estimate_sigma_j(a) for a in ads])
    df = np.array([a.n - 2 for a in ads], dtype=float)
    if np.any(df < 1):
        raise InputError("each study needs at least 3 participants for pooling")
    total = df.sum()
    pooled = float(np.sum(df * s) / total)
    k = len(ads)
    stat = total * math.log(pooled) - np.sum(df * np.log(s))
    stat /= 1 + (np.sum(1 / df) - 1 / total) / (3 * (k - 1))
    return pooled, float(stats.chi2.sf(max(stat, 0.0), k - 1))


def _study_loglik(study: IpdStudy, alpha, beta, sigma_sq, sigma_alpha_sq):
    r = study.responses - alpha - beta * study.treatment
    n = study.n
    b = sigma_alpha_sq / sigma_sq
    a = 1 + n * b
    quad = (r @ r - b / a * r.sum() ** 2) / sigma_sq
    return -0.5 * (n * math.log(2 * math.pi) + n * math.log(sigma_sq) + math.log(a) + quad)


def lmm_profile_loglik(pilots: Sequence[IpdStudy], sigma_sq, sigma_alpha_sq) -> float:
    """Log-likelihood of IPD studies with ``(alpha, beta)`` profiled out by GLS."""
    sigma_sq = np.broadcast_to(np.asarray(sigma_sq, dtype=float), (len(pilots),))
    gram, rhs = np.zeros((2, 2)), np.zeros(2)
    for st, s2 in zip(pilots, sigma_sq):
        g, r = _ipd_normal_equations(st, s2, sigma_alpha_sq)
        gram += g
        rhs += r
    alpha, beta = np.linalg.solve(gram, rhs)
    return sum(_study_loglik(st, alpha, beta, s2, sigma_alpha_sq) for st, s2 in zip(pilots, sigma_sq))


def estimate_sigma_alpha(
    pilots: Sequence[IpdStudy],
    outcome_kind: str = CONTINUOUS,
    pooled: bool = False,
    max_iter: int = 500,
    continuity: float = 0.0,
) -> float:
    """Maximum-likelihood ``sigma_alpha^2`` from pilot IPD studies.

    Continuous outcomes maximise the marginal likelihood of the linear mixed
    model with per-study (or pooled) error variances.  Binary outcomes
    maximise the Laplace-approximated likelihood of the per-study logistic
    fits with a fixed common treatment effect.  Boundary estimates are
    returned as 0 with a warning.  ``continuity`` is passed to the binary
    per-study fits.
    """
    pilots = list(pilots)
    if len(pilots) < 2:
        raise InputError("at least 2 pilot IPD studies are needed")
    if outcome_kind == BINARY:
        from .glmm import fit_study_logistic, maximize_varcomp

        fits = [fit_study_logistic(s, continuity) for s in pilots]
        res = maximize_varcomp(fits, [], structure="alpha_only", max_iter=max_iter)
        if res.boundary:
            warnings.warn("sigma_alpha^2 estimate on the boundary; truncated at 0", stacklevel=2)
            return 0.0
        return float(res.sigma.matrix[1, 1])

    from .core import summarize_ipd

    s_init = np.array([estimate_sigma_j(summarize_ipd(s, CONTINUOUS)) for s in pilots])
    if pooled:
        s_init = np.array([np.mean(s_init)])
    means = np.array([s.responses[s.treatment == 0].mean() for s in pilots])
    sa_init = max(float(np.var(means, ddof=1)), 1e-3 * float(np.mean(s_init)))
    m = s_init.size

    def nll(params):
        s2 = np.exp(params[:m])
        return -lmm_profile_loglik(pilots, s2 if not pooled else s2[0], params[m])

    x0 = np.concatenate([np.log(s_init), [sa_init]])
    bounds = [(None, None)] * m + [(0.0, None)]
    res = optimize.minimize(nll, x0, method="L-BFGS-B", bounds=bounds,
                            options={"maxiter": max_iter, "ftol": 1e-13, "gtol": 1e-9})
    if not res.success and res.nit >= max_iter:
        raise ConvergenceError(f"sigma_alpha^2 optimisation did not converge: {res.message}")
    sa = float(res.x[m])
    if sa <= 1e-10:
        warnings.warn("sigma_alpha^2 estimate on the boundary; truncated at 0", stacklevel=2)
        return 0.0
    return sa
