"""Stage 3: zero-forcing digital precoder and DC power allocation.

The sum rate is ``F2(p) - F1(p)`` with ``F1 = -sum log2 D1`` and
``F2 = -sum log2 D2`` where ``D1``/``D2`` are the interference-plus-noise
terms with and without the user's own signal.  Both are convex, so each
outer iteration replaces ``F2`` by its tangent plane and minimizes the convex
upper bound ``F1 - F2_lin`` over the (linear) budget, SIC and QoS constraints.

Internally powers are divided by ``p_total`` and gains by ``sigma^2``.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linprog

from .barrier import barrier_minimize
from .errors import InfeasibleError

LN2 = math.log(2.0)


# -- digital precoder -----------------------------------------------------------

@dataclass
class EquivalentChannel:
    users: tuple
    group_matrix: np.ndarray  # N x |Q|, columns h_kb (conjugated rows of heff)
    principal: np.ndarray  # u_bn1
    vector: np.ndarray  # h_hat_bn


def _fix_phase(u):
    """Rotate ``u`` so its first nonzero entry is real and positive."""
    nz = np.flatnonzero(np.abs(u) > 1e-300)
    if nz.size == 0:
        return u
    return u * (np.conj(u[nz[0]]) / abs(u[nz[0]]))


def group_equivalent_channels(heff, schedule):
    """Per-group equivalent vectors: the member's own channel for singletons,
    ``H_bn u_bn1`` for pairs with ``u_bn1`` the principal left singular vector
    of ``H_bn^H``."""
    out = {}
    for (b, n), users in schedule.groups().items():
        Ht = np.conj(heff[users, b, :]).T
        if len(users) == 1:
            u = np.ones(1, dtype=complex)
        else:
            U, _, _ = np.linalg.svd(Ht.conj().T)
            u = _fix_phase(U[:, 0])
        out[(b, n)] = EquivalentChannel(tuple(users), Ht, u, Ht @ u)
    return out


@dataclass
class ZfPrecoder:
    G: np.ndarray  # B x N x N, unit-norm columns
    G_raw: np.ndarray  # before column normalization
    H_hat: np.ndarray  # B x N x N equivalent matrices
    regularized: np.ndarray  # per-AP flag: diagonal loading applied


def zf_precoder(heff, schedule, cond_limit=1e12):
    """``G_b = H_b (H_b^H H_b)^-1`` on the equivalent matrix of every AP.

    Chains without a group contribute the unit column ``e_n`` (their analog
    beam is zero, so every effective channel vanishes on that chain and the
    inverse decouples).  An AP with no users gets the identity.
    """
    B, N = schedule.num_aps, schedule.num_chains
    H_hat = np.tile(np.eye(N, dtype=complex), (B, 1, 1))
    for (b, n), eq in group_equivalent_channels(heff, schedule).items():
        H_hat[b][:, n] = eq.vector
    G_raw = np.empty_like(H_hat)
    flags = np.zeros(B, dtype=bool)
    for b in range(B):
        gram = H_hat[b].conj().T @ H_hat[b]
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond > cond_limit:
            load = 1e-12 * max(np.trace(gram).real / N, 1e-300)
            gram = gram + load * np.eye(N)
            flags[b] = True
        G_raw[b] = H_hat[b] @ np.linalg.solve(gram, np.eye(N))
    norms = np.linalg.norm(G_raw, axis=1, keepdims=True)
    G = np.divide(G_raw, norms, out=G_raw.copy(), where=norms > 0)
    return ZfPrecoder(G, G_raw, H_hat, flags)


# -- DC decomposition -------------------------------------------------------------

def dc_objective_parts(budget, p):
    """``(F1, F2)`` with ``F1 - F2 = -R_sum``."""
    d1, d2 = budget.denominators(np.asarray(p, dtype=float))
    return -float(np.sum(np.log2(d1))), -float(np.sum(np.log2(d2)))


def dc_gradient_f2(budget, p):
    _, d2 = budget.denominators(np.asarray(p, dtype=float))
    return -(budget.coupling.T @ (1.0 / d2)) / LN2


def normalized_budget(budget, p_total):
    """Same link model with powers in units of ``p_total`` and noise 1."""
    s = p_total / budget.noise
    return replace(budget, direct=budget.direct * s, coupling=budget.coupling * s,
                   intra=budget.intra * s, inter_group=budget.inter_group * s,
                   inter_ap=budget.inter_ap * s, noise=1.0)


def restrict(budget, keep):
    """Link model of the users flagged in ``keep`` (local mask)."""
    keep = np.asarray(keep, dtype=bool)
    idx = np.flatnonzero(keep)
    remap = {int(s): i for i, s in enumerate(idx)}
    pairs = [(remap[s], remap[w]) for s, w in budget.pairs if s in remap and w in remap]
    sub = np.ix_(idx, idx)
    return replace(budget, users=budget.users[idx], direct=budget.direct[idx],
                   coupling=budget.coupling[sub], intra=budget.intra[sub],
                   inter_group=budget.inter_group[sub], inter_ap=budget.inter_ap[sub],
                   pairs=pairs)


# -- constraints --------------------------------------------------------------------

@dataclass
class Constraints:
    A: np.ndarray
    b: np.ndarray
    kinds: list


def constraint_rows(nb, rate_min=None, sic=True):
    """Linear constraints ``A x <= b`` on normalized powers.

    Rows: ``x >= 0``; ``sum x <= 1``; for each pair (strong s, weak w)
    ``a_w D1_s <= a_s D2_w``; for each user with a positive threshold
    ``(2^Rmin - 1) D2 <= a x``.  Rows are scaled to unit norm.
    """
    n = nb.size
    rows = [-np.eye(n), np.ones((1, n))]
    rhs = [np.zeros(n), np.ones(1)]
    kinds = ["nonneg"] * n + ["budget"]
    full = nb.coupling + np.diag(nb.direct)
    if sic:
        for s, w in nb.pairs:
            rows.append((nb.direct[w] * full[s] - nb.direct[s] * nb.coupling[w])[None, :])
            rhs.append(np.array([nb.direct[s] - nb.direct[w]]))
            kinds.append(("sic", s, w))
    if rate_min is not None:
        for s in range(n):
            if rate_min[s] <= 0:
                continue
            c = 2.0 ** rate_min[s] - 1.0
            row = c * nb.coupling[s].copy()
            row[s] -= nb.direct[s]
            rows.append(row[None, :])
            rhs.append(np.array([-c]))
            kinds.append(("qos", s))
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    scale = np.linalg.norm(A, axis=1)
    live = scale > 0
    if np.any(~live & (b < 0)):
        # 0 <= negative: a constraint no power vector can meet
        A, b = np.vstack([A, np.zeros((1, n))]), np.concatenate([b, [-1.0]])
        kinds.append("void")
        scale = np.append(scale, 1.0)
        live = np.append(live, True)
    A, b = A[live] / scale[live, None], b[live] / scale[live]
    return Constraints(A, b, [k for k, keep in zip(kinds, live) if keep])


def max_min_slack(cons):
    """Point maximizing the smallest slack ``min(b - A x)`` (capped at 1)."""
    m, n = cons.A.shape
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=np.hstack([cons.A, np.ones((m, 1))]), b_ub=cons.b,
                  bounds=[(None, None)] * n + [(None, 1.0)], method="highs")
    if res.status != 0:
        return None, -np.inf
    return res.x[:n], float(res.x[-1])


# -- convex subproblem ---------------------------------------------------------------

def surrogate(nb, x_t):
    """``F1(x) - [F2(x_t) + grad F2(x_t) . (x - x_t)]``: returns ``(fun, value)``
    where ``fun`` gives value, gradient and Hessian and ``value`` the value only."""
    full = nb.coupling + np.diag(nb.direct)
    _, f2_t = dc_objective_parts(nb, x_t)
    g2 = dc_gradient_f2(nb, x_t)
    const = -f2_t + g2 @ x_t

    def value(x):
        return -np.log2(nb.noise + full @ x).sum() + const - g2 @ x

    def fun(x):
        d1 = nb.noise + full @ x
        f = -np.log2(d1).sum() + const - g2 @ x
        inv = 1.0 / d1
        grad = -(full.T @ inv) / LN2 - g2
        hess = (full.T * (inv * inv)) @ full / LN2
        return f, grad, hess
    return fun, value


def solve_convex_subproblem(nb, x_t, cons, interior=None, tol=1e-6, max_iter=200, t0=1.0):
    """Minimize the convex bound at ``x_t`` over ``cons``.

    ``interior`` is a strictly feasible point (found by LP when omitted).
    Raises ``InfeasibleError`` when the constraint set has no interior.
    """
    if interior is None:
        interior, slack = max_min_slack(cons)
        if interior is None or slack <= 0:
            raise InfeasibleError("constraint set has no strictly feasible point")
    start = np.asarray(x_t, dtype=float)
    if np.any(cons.b - cons.A @ start <= 0):
        start = 0.99 * start + 0.01 * interior
    fun, value = surrogate(nb, x_t)
    return barrier_minimize(fun, start, cons.A, cons.b, tol=tol, max_iter=max_iter, t0=t0,
                            value=value)


# -- outer DC loop --------------------------------------------------------------------

@dataclass
class DcResult:
    powers: np.ndarray  # watts, local order of ``budget.users``
    rates: np.ndarray
    sum_rate: float
    trace: list = field(default_factory=list)  # sum rate after each accepted step
    level: int = 0  # 0: all constraints, 1: QoS dropped, 2: weak users switched off
    zeroed: tuple = ()
    outer_iterations: int = 0

    @property
    def feasible(self):
        return self.level == 0


def dc_power_allocate(budget, p_total, rate_min, params, init_count=None):
    """Concave-convex procedure for the sum-rate problem of ``budget``.

    Starts from ``p_total / init_count`` per user (default: every user in the
    budget) or, if that violates a constraint, the max-min-slack point.  When
    the QoS rows cannot be met they are dropped (level 1); if the SIC rows
    still leave no interior, the weak member of every pair whose direct gain
    is not below its partner's is switched off (level 2).
    """
    n = budget.size
    if n == 0:
        return DcResult(np.zeros(0), np.zeros(0), 0.0, [0.0])
    rmin = np.broadcast_to(np.asarray(rate_min, dtype=float), (n,)).copy()
    nb_all = normalized_budget(budget, p_total)
    free = np.ones(n, dtype=bool)
    level = 0
    while True:
        if level == 2:
            for s, w in nb_all.pairs:
                if nb_all.direct[w] >= nb_all.direct[s]:
                    free[w] = False
        nb = restrict(nb_all, free)
        cons = constraint_rows(nb, rmin[free] if level == 0 else None)
        interior, slack = max_min_slack(cons)
        if interior is not None and slack > 1e-12:
            break
        if level == 2:
            raise InfeasibleError("no interior point even without QoS and weak users")
        level += 1
    m = int(free.sum())
    x0 = np.full(m, 1.0 / (init_count or n))
    x = x0 if np.all(cons.A @ x0 <= cons.b + 1e-12) else interior
    value = float(np.sum(nb.rates(x)))
    trace = [value]
    outer = 0
    for outer in range(1, params.dc_max_outer + 1):
        # later subproblems start next to their solution: skip the early barrier stages
        res = solve_convex_subproblem(nb, x, cons, interior, params.inner_kkt_tol,
                                      params.inner_max_iter, 1.0 if outer == 1 else 1e3)
        new = float(np.sum(nb.rates(res.x)))
        if new < value:
            break
        x, old, value = res.x, value, new
        trace.append(value)
        if abs(new - old) <= params.dc_rel_tol * max(abs(old), 1e-12):
            break
    powers = np.zeros(n)
    powers[free] = x * p_total
    rates = budget.rates(powers)
    return DcResult(powers, rates, float(math.fsum(rates)), trace, level,
                    tuple(int(i) for i in np.flatnonzero(~free)), outer)
