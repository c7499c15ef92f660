"""Dense primal-dual interior-point method for small smooth convex programs.

Solves ``min c.x  s.t.  g_k(x) <= 0`` where every ``g_k`` is smooth and
convex with an available gradient and Hessian.  Slack variables make the
method infeasible-start capable, which matters here because the convex
subproblems are anchored at points sitting exactly on several constraint
boundaries.  Problems are tiny (tens of variables), so everything is dense.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = ["IpmResult", "SubproblemSolveError", "minimize"]

_FRACTION_TO_BOUNDARY = 0.995


class SubproblemSolveError(RuntimeError):
    """The interior-point iteration failed to reach an acceptable tolerance."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass
class IpmResult:
    x: np.ndarray
    multipliers: np.ndarray
    iterations: int
    primal_residual: float
    dual_residual: float
    gap: float
    converged: bool


def _factor_kkt(K, scale):
    """Factor the condensed Newton system with diagonal preconditioning."""
    Ks = K * scale[:, None] * scale[None, :]
    reg = 1e-12 * max(1.0, float(np.trace(Ks)) / Ks.shape[0])
    for _ in range(6):
        try:
            factor = scipy.linalg.cho_factor(Ks + reg * np.eye(Ks.shape[0]), check_finite=False)
            return factor, reg
        except np.linalg.LinAlgError:
            reg *= 100.0
    raise SubproblemSolveError("Newton system is numerically singular", {"reg": reg})


def minimize(
    c,
    value_fn,
    jac_fn,
    hess_fn,
    x0,
    domain_fn=None,
    var_scale=None,
    max_iter: int = 120,
    tol_primal: float = 1e-11,
    tol_dual: float = 1e-8,
    tol_gap: float = 1e-11,
    accept_primal: float = 1e-8,
    accept_gap: float = 1e-8,
) -> IpmResult:
    """Minimize ``c.x`` over ``{x : g(x) <= 0}`` starting near-feasibly at ``x0``.

    ``value_fn``/``jac_fn`` evaluate the constraint vector and Jacobian;
    ``hess_fn(x, w)`` returns ``sum_k w_k * hess(g_k)(x)``.  ``domain_fn``
    guards evaluation domains (e.g. strictly positive denominators) during
    the line search.  Constraints are rescaled by their gradient norms at
    ``x0``; ``var_scale`` preconditions the Newton systems.

    Raises :class:`SubproblemSolveError` with diagnostics when neither the
    target nor the acceptance tolerances are met within ``max_iter``.
    """
    c = np.asarray(c, dtype=float)
    x = np.asarray(x0, dtype=float).copy()
    n = x.size
    scale = np.ones(n) if var_scale is None else np.asarray(var_scale, dtype=float)

    J0 = np.asarray(jac_fn(x), dtype=float)
    m = J0.shape[0]
    rho = np.maximum(1.0, np.sqrt(np.einsum("ij,ij->i", J0, J0)))
    c_norm = max(1.0, float(np.abs(c).max()))

    def residuals(x, s, mu, g=None, J=None):
        if g is None:
            g = value_fn(x) / rho
        if J is None:
            J = jac_fn(x) / rho[:, None]
        r_dual = c + J.T @ mu
        r_prim = g + s
        return g, J, r_dual, r_prim

    g = value_fn(x) / rho
    s = np.maximum(-g, 1e-3)
    mu = np.clip(1e-2 / s, 1e-8, 1e8)

    best = None
    for iteration in range(1, max_iter + 1):
        g, J, r_dual, r_prim = residuals(x, s, mu)
        comp = mu * s
        gap = float(comp.mean())
        pr = float(np.abs(r_prim).max())
        dr = float(np.abs(r_dual).max()) / c_norm

        if best is None or pr + gap < best[0]:
            best = (pr + gap, x.copy(), mu.copy(), iteration, pr, dr, gap)

        if pr <= tol_primal and dr <= tol_dual and gap <= tol_gap:
            return IpmResult(x, mu / rho, iteration, pr, dr, gap, True)

        H = hess_fn(x, mu / rho)
        D = mu / s
        K = H + (J * D[:, None]).T @ J

        factor, _ = _factor_kkt(K, scale)

        def newton_step(r_cent):
            rhs = -r_dual - J.T @ ((mu * r_prim - r_cent) / s)
            dx = scale * scipy.linalg.cho_solve(factor, scale * rhs, check_finite=False)
            ds = -r_prim - J @ dx
            dmu = -(r_cent + mu * ds) / s
            return dx, ds, dmu

        def boundary_step(ds, dmu):
            alpha = 1.0
            neg = ds < 0
            if neg.any():
                alpha = min(alpha, float((-s[neg] / ds[neg]).min()))
            neg = dmu < 0
            if neg.any():
                alpha = min(alpha, float((-mu[neg] / dmu[neg]).min()))
            return alpha

        # predictor (affine scaling) step sets the centering weight
        dx_a, ds_a, dmu_a = newton_step(comp)
        alpha_a = _FRACTION_TO_BOUNDARY * boundary_step(ds_a, dmu_a)
        alpha_a = min(1.0, alpha_a)
        gap_a = float(((s + alpha_a * ds_a) * (mu + alpha_a * dmu_a)).mean())
        sigma = float(np.clip((max(gap_a, 0.0) / max(gap, 1e-300)) ** 3, 0.01, 0.8))
        tau = sigma * gap

        dx, ds, dmu = newton_step(comp + ds_a * dmu_a - tau)
        alpha = min(1.0, _FRACTION_TO_BOUNDARY * boundary_step(ds, dmu))

        merit0 = float(
            np.linalg.norm(r_dual) + np.linalg.norm(r_prim) + np.linalg.norm(comp - tau)
        )
        accepted = False
        for _ in range(40):
            x_new = x + alpha * dx
            s_new = s + alpha * ds
            mu_new = mu + alpha * dmu
            if (
                np.all(s_new > 0)
                and np.all(mu_new > 0)
                and (domain_fn is None or domain_fn(x_new))
            ):
                g_new, J_new, rd_new, rp_new = residuals(x_new, s_new, mu_new)
                merit = float(
                    np.linalg.norm(rd_new)
                    + np.linalg.norm(rp_new)
                    + np.linalg.norm(mu_new * s_new - tau)
                )
                if merit <= (1.0 - 1e-4 * alpha) * merit0 or merit <= 1e-14:
                    x, s, mu = x_new, s_new, mu_new
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            break

    # target tolerances not met; accept a best iterate that is still sound
    _, bx, bmu, bit, bpr, bdr, bgap = best
    if bpr <= accept_primal and bgap <= accept_gap:
        return IpmResult(bx, bmu / rho, bit, bpr, bdr, bgap, False)
    raise SubproblemSolveError(
        "interior-point solve did not converge "
        f"(primal {bpr:.2e}, dual {bdr:.2e}, gap {bgap:.2e} after {bit} iterations)",
        {"primal": bpr, "dual": bdr, "gap": bgap, "iterations": bit},
    )
