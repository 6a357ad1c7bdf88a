"""Choosing which studies to analyse as IPD.

For fixed sizes and variance components the combined-estimator variance is

    [ sum_{j in A} v_j (u_j - ubar_A)^2 + const ]^{-1}

with ``ubar_A`` the ``v``-weighted mean of ``u`` over the IPD set ``A``, so the
best IPD set of size ``k1`` maximises the weighted spread of ``u`` over ``A``.
In the linear mixed model ``u_j = pi_j`` and ``v_j = n_j / (sigma_j^2 a_j)``;
the logistic model has the same structure with other weights.

Tie-breaking, everywhere: candidates are ordered lexicographically by sorted
index tuple; maximisers resolve to the *last* tied candidate and minimisers
to the *first*.  This is what stably sorting every subset by objective and
reading off the two ends produces.  When every candidate scores zero the
result is flagged ``indifferent`` and the first ``k1`` indices are returned.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import InputError
from .lmm import VarianceComponents, ipd_weights, variance_combined, variance_ipd_ma

ENUMERATION_CAP = 10**7
_CHUNK = 1 << 16


class EnumerationCapError(RuntimeError):
    """Exact search would exceed the subset budget; use :func:`ssa_select`."""


@dataclass(frozen=True)
class SelectionInstance:
    """Per-study values ``u``, positive weights ``v`` and the IPD count ``k1``.

    Arrays are copied and frozen on construction.
    """

    u: np.ndarray
    v: np.ndarray
    k1: int

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float).copy()
        v = np.asarray(self.v, dtype=float).copy()
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        if u.ndim != 1 or u.shape != v.shape or u.size == 0:
            raise InputError("u and v must be nonempty vectors of equal length")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise InputError("u and v must be finite")
        if np.any(v <= 0):
            raise InputError("v must be strictly positive")
        if not 0 <= int(self.k1) <= u.size:
            raise InputError(f"k1={self.k1} outside [0, {u.size}]")
        object.__setattr__(self, "k1", int(self.k1))

    @property
    def k(self) -> int:
        return self.u.size

    def with_k1(self, k1: int) -> "SelectionInstance":
        return SelectionInstance(self.u, self.v, k1)


@dataclass(frozen=True)
class SelectionResult:
    chosen: tuple
    objective: float
    method: str
    indifferent: bool = False
    trace: tuple = ()


def _batch_objective(u, v, combos: np.ndarray) -> np.ndarray:
    uu, vv = u[combos], v[combos]
    centre = (vv * uu).sum(axis=1) / vv.sum(axis=1)
    return (vv * (uu - centre[:, None]) ** 2).sum(axis=1)


def objective(instance: SelectionInstance, subset) -> float:
    """Weighted spread ``sum_A v_j (u_j - ubar_A)^2`` of ``u`` over ``subset``."""
    idx = np.array(sorted(set(int(i) for i in subset)), dtype=int)
    if idx.size == 0:
        raise InputError("objective of an empty subset is undefined")
    if idx[0] < 0 or idx[-1] >= instance.k:
        raise InputError("subset index out of range")
    return float(_batch_objective(instance.u, instance.v, idx[None, :])[0])


def _trivial(instance: SelectionInstance, method: str):
    k, k1 = instance.k, instance.k1
    if k1 == 0:
        return SelectionResult((), 0.0, method, indifferent=True)
    if k1 == 1:
        return SelectionResult((0,), 0.0, method, indifferent=True)
    if k1 == k:
        return SelectionResult(tuple(range(k)), objective(instance, range(k)), method)
    return None


def _degenerate(u) -> bool:
    return bool(np.all(u == u[0]))


def _last_argmax(a: np.ndarray) -> int:
    return a.size - 1 - int(np.argmax(a[::-1]))


def _enumerate(instance: SelectionInstance, worst: bool):
    u, v, k1 = instance.u, instance.v, instance.k1
    combos = itertools.combinations(range(instance.k), k1)
    best_val, best_set = None, None
    while True:
        block = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, _CHUNK)),
                            dtype=np.int64)
        if block.size == 0:
            break
        block = block.reshape(-1, k1)
        vals = _batch_objective(u, v, block)
        if worst:
            i = int(np.argmin(vals))
            if best_val is None or vals[i] < best_val:
                best_val, best_set = vals[i], block[i]
        else:
            i = _last_argmax(vals)
            if best_val is None or vals[i] >= best_val:
                best_val, best_set = vals[i], block[i]
    return float(best_val), tuple(int(i) for i in best_set)


def _branch_and_bound(instance: SelectionInstance, worst: bool, budget: int):
    """Depth-first exact search in lexicographic order with pruning.

    Maximisation bound: for any centre ``c`` the spread of a superset is at
    most ``sum v (u - c)^2`` over it, evaluated at the partial set's centre
    with the best remaining terms.  Minimisation bound: spread never
    decreases when a study is added.
    """
    u, v, k, k1 = instance.u, instance.v, instance.k, instance.k1
    best = [-math.inf if not worst else math.inf, None]
    nodes = [0]
    slack = 1e-12

    def leaf(chosen):
        val = float(_batch_objective(u, v, np.array(chosen)[None, :])[0])
        if (not worst and val >= best[0]) or (worst and val < best[0]):
            best[0], best[1] = val, tuple(chosen)

    def visit(chosen, start):
        nodes[0] += 1
        if nodes[0] > budget:
            raise EnumerationCapError(f"branch-and-bound exceeded {budget} nodes")
        m = len(chosen)
        if m == k1:
            leaf(chosen)
            return
        if m >= 2:
            idx = np.array(chosen)
            vw = v[idx]
            centre = np.sum(vw * u[idx]) / vw.sum()
            partial = float(np.sum(vw * (u[idx] - centre) ** 2))
            if worst:
                if partial > best[0] * (1 + slack) + 1e-300:
                    return
            else:
                rest = v[start:] * (u[start:] - centre) ** 2
                need = k1 - m
                top = np.sort(rest)[::-1][:need].sum() if rest.size >= need else -math.inf
                if partial + top < best[0] * (1 - slack):
                    return
        for j in range(start, k - (k1 - m) + 1):
            chosen.append(j)
            visit(chosen, j + 1)
            chosen.pop()

    visit([], 0)
    return best[0], best[1]


def _exact(instance: SelectionInstance, worst: bool, cap: int, method: str) -> SelectionResult:
    triv = _trivial(instance, method)
    if triv is not None:
        return triv
    if _degenerate(instance.u):
        return SelectionResult(tuple(range(instance.k1)), 0.0, method, indifferent=True)
    if math.comb(instance.k, instance.k1) <= cap:
        val, chosen = _enumerate(instance, worst)
    else:
        val, chosen = _branch_and_bound(instance, worst, cap)
    return SelectionResult(chosen, val, method)


def brute_force_select(instance: SelectionInstance, cap: int = ENUMERATION_CAP) -> SelectionResult:
    """Globally optimal IPD set of size ``k1``.

    Enumerates all subsets when there are at most ``cap`` of them, and
    otherwise runs a pruned search limited to ``cap`` nodes.
    """
    return _exact(instance, worst=False, cap=cap, method="exact")


def brute_force_worst(instance: SelectionInstance, cap: int = ENUMERATION_CAP) -> SelectionResult:
    """IPD set of size ``k1`` with the smallest spread (largest variance)."""
    return _exact(instance, worst=True, cap=cap, method="exact")


def ssa_select(instance: SelectionInstance, trace: bool = False) -> SelectionResult:
    """Sequential selection: best seed pair, then greedy single additions.

    The seed pair maximises ``(u_p - u_q)^2 / (1/v_p + 1/v_q)``, the spread
    of a two-element set.  Each later step adds the study with the largest
    spread increment ``v_r (u_r - M)^2 / (D + v_r)`` where ``M`` and ``D``
    are the running weighted mean and weight total.  With ``trace`` the
    result records ``(chosen so far, M, D)`` after every step.
    """
    u, v, k, k1 = instance.u, instance.v, instance.k, instance.k1
    if k1 < 2:
        raise InputError("sequential selection requires k1 >= 2")
    if _degenerate(u):
        return SelectionResult(tuple(range(k1)), 0.0, "ssa", indifferent=True)
    iu, ju = np.triu_indices(k, 1)
    pair = (u[iu] - u[ju]) ** 2 / (1 / v[iu] + 1 / v[ju])
    best = _last_argmax(pair)
    m, n = int(iu[best]), int(ju[best])
    chosen = [m, n]
    remaining = np.ones(k, dtype=bool)
    remaining[[m, n]] = False
    d = v[m] + v[n]
    centre = (v[m] * u[m] + v[n] * u[n]) / d
    steps = [(tuple(chosen), centre, d)]
    while len(chosen) < k1:
        cand = np.flatnonzero(remaining)
        gain = v[cand] * (u[cand] - centre) ** 2 / (d + v[cand])
        l = int(cand[_last_argmax(gain)])
        chosen.append(l)
        remaining[l] = False
        centre = (d * centre + v[l] * u[l]) / (d + v[l])
        d = d + v[l]
        steps.append((tuple(chosen), centre, d))
    chosen = tuple(sorted(chosen))
    return SelectionResult(chosen, objective(instance, chosen), "ssa",
                           trace=tuple(steps) if trace else ())


def extremes_select(pi, k1: int) -> SelectionResult:
    """Balanced homoscedastic rule: take extreme proportions, alternating ends.

    Studies are stably sorted by ``pi``; picks alternate between the low
    and the high end.  Both starting ends are tried and the one with larger
    spread is kept (the low end on a tie).  Ties in ``pi`` resolve to the
    lower index at the low end and the higher index at the high end.
    """
    pi = np.asarray(pi, dtype=float)
    k = pi.size
    inst = SelectionInstance(pi, np.ones(k), k1)
    triv = _trivial(inst, "extremes")
    if triv is not None:
        return triv
    if _degenerate(pi):
        return SelectionResult(tuple(range(k1)), 0.0, "extremes", indifferent=True)
    order = np.argsort(pi, kind="stable")

    def alternate(low_first):
        lo, hi, out = 0, k - 1, []
        take_low = low_first
        while len(out) < k1:
            if take_low:
                out.append(int(order[lo]))
                lo += 1
            else:
                out.append(int(order[hi]))
                hi -= 1
            take_low = not take_low
        return tuple(sorted(out))

    a, b = alternate(True), alternate(False)
    fa, fb = objective(inst, a), objective(inst, b)
    chosen, val = (b, fb) if fb > fa else (a, fa)
    return SelectionResult(chosen, val, "extremes")


def selection_weights_lmm(n, pi, vc: VarianceComponents) -> tuple[np.ndarray, np.ndarray]:
    """``u_j = pi_j`` and ``v_j = n_j / (sigma_j^2 a_j)``."""
    return np.asarray(pi, dtype=float), ipd_weights(n, pi, vc)


def select(instance: SelectionInstance, method: str = "exact", cap: int = ENUMERATION_CAP) -> SelectionResult:
    if method == "exact":
        return brute_force_select(instance, cap)
    if method == "ssa":
        triv = _trivial(instance, "ssa")
        return triv if triv is not None else ssa_select(instance)
    if method == "extremes":
        return extremes_select(instance.u, instance.k1)
    raise InputError(f"unknown selection method {method!r}")


def re_curve(n, pi, vc: VarianceComponents, k1_range=None, mode: str = "exact",
             cap: int = ENUMERATION_CAP) -> list[dict]:
    """Best (and, in exact mode, worst) relative efficiency for each ``k1``.

    Rows hold ``k1``, ``max_re``, ``argmax``, ``min_re`` and ``argmin``;
    ``argmax``/``argmin`` are 0-based index tuples.  In ``ssa`` mode the
    minimum columns are ``None``.
    """
    if mode not in ("exact", "ssa"):
        raise InputError(f"unknown curve mode {mode!r}")
    u, v = selection_weights_lmm(n, pi, vc)
    k = u.size
    k1_range = range(0, k + 1) if k1_range is None else k1_range
    v_ipd = variance_ipd_ma(n, pi, vc)
    rows = []
    for k1 in k1_range:
        inst = SelectionInstance(u, v, k1)
        best = select(inst, mode, cap)
        row = {"k1": int(k1), "max_re": v_ipd / variance_combined(n, pi, vc, best.chosen),
               "argmax": best.chosen, "min_re": None, "argmin": None}
        if mode == "exact":
            worst = brute_force_worst(inst, cap)
            row["min_re"] = v_ipd / variance_combined(n, pi, vc, worst.chosen)
            row["argmin"] = worst.chosen
        rows.append(row)
    return rows


def re_all_combinations(n, pi, vc: VarianceComponents, k1: int, cap: int = ENUMERATION_CAP):
    """Relative efficiency of every IPD set of size ``k1``, in lexicographic order."""
    k = len(pi)
    if math.comb(k, k1) > cap:
        raise EnumerationCapError(f"C({k},{k1}) exceeds the cap {cap}")
    combos = list(itertools.combinations(range(k), k1))
    v_ipd = variance_ipd_ma(n, pi, vc)
    return [(c, v_ipd / variance_combined(n, pi, vc, c)) for c in combos]
