"""Log-barrier Newton method for smooth convex objectives under ``A x <= b``."""

from dataclasses import dataclass

import numpy as np


@dataclass
class BarrierResult:
    x: np.ndarray
    value: float
    gap: float
    newton_steps: int
    converged: bool


def barrier_minimize(fun, x0, A, b, tol=1e-6, max_iter=200, t0=1.0, mu=50.0, value=None):
    """Minimize ``f`` over ``{x : A x <= b}`` from a strictly feasible ``x0``.

    ``fun(x)`` returns ``(f, grad, hess)``; ``value(x)``, if given, returns
    just ``f`` and is used inside the line search.  The centering problems
    ``t f(x) - sum log(b - A x)`` are solved by damped Newton steps; the
    loop stops once the duality-gap bound ``m / t`` falls below ``tol`` or the
    Newton budget ``max_iter`` is spent.  The iterate stays strictly feasible.
    """
    x = np.array(x0, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    m = len(b)
    if np.any(b - A @ x <= 0.0):
        raise ValueError("barrier_minimize: x0 is not strictly feasible")
    t = t0
    steps = 0
    if value is None:
        def value(z):
            return fun(z)[0]

    def phi(z, t):
        r = b - A @ z
        if (r <= 0.0).any():
            return np.inf
        return t * value(z) - np.log(r).sum()

    while True:
        while steps < max_iter:
            f, g, H = fun(x)
            r = b - A @ x
            inv = 1.0 / r
            grad = t * g + A.T @ inv
            hess = t * H + (A.T * inv ** 2) @ A
            try:
                dx = np.linalg.solve(hess, -grad)
            except np.linalg.LinAlgError:
                dx = np.linalg.lstsq(hess, -grad, rcond=None)[0]
            lam2 = float(-grad @ dx)
            if lam2 <= 1e-9 or not np.isfinite(lam2):
                break
            # largest step that keeps strict feasibility, then backtracking
            Adx = A @ dx
            pos = Adx > 0
            s = 1.0 if not np.any(pos) else min(1.0, 0.99 * float(np.min(r[pos] / Adx[pos])))
            base = t * f - np.log(r).sum()
            while phi(x + s * dx, t) > base - 0.25 * s * lam2:
                s *= 0.5
                if s < 1e-14:
                    break
            steps += 1
            if s < 1e-14:
                break
            x = x + s * dx
        gap = m / t
        if gap < tol or steps >= max_iter:
            return BarrierResult(x, float(value(x)), gap, steps, gap < tol)
        t *= mu
