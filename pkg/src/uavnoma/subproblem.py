"""Convex inner approximation of the joint deployment + power-control problem.

The relaxed problem keeps the UAV position, per-user powers, the [0, 1]
decoding-order matrix and a set of auxiliary variables (log-domain SNR and
interference terms, squared-distance and interference-product relaxations,
binariness penalties).  Every nonconvex constraint is replaced by a convex
restriction obtained from a first-order expansion at a feasible anchor, so
the anchor itself is always feasible for the subproblem it generates and any
subproblem-feasible point satisfies the original constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import channel, ipm
from .scenario import Scenario

__all__ = ["ScaState", "ConvexSubproblem", "AnchorError", "build_subproblem", "solve_subproblem"]

_LN2 = math.log(2.0)


class AnchorError(ValueError):
    """The proposed anchor violates an original-problem constraint."""


@dataclass
class ScaState:
    """Full variable set of the relaxed problem at one iterate.

    ``alpha`` holds a relaxed decoding order in [0, 1] with zero diagonal and
    ``alpha + alpha.T`` equal to one off the diagonal.  ``s`` relaxes squared
    distances, ``z``/``v`` are log-domain signal and interference-plus-one
    terms, ``y`` relaxes the per-pair interference products, ``phi`` collects
    the binariness penalties, and ``lam`` is the current penalty weight.
    """

    q: np.ndarray          # (2,) UAV position, meters
    alpha: np.ndarray      # (M, M) relaxed decoding order
    p: np.ndarray          # (M,) transmit powers, watts
    s: np.ndarray          # (M,) squared-distance auxiliaries, meters^2
    u: np.ndarray          # (M,) per-user rate lower bounds, bits/s/Hz
    v: np.ndarray          # (M,) log(1 + interference) auxiliaries
    y: np.ndarray          # (M, M) interference-term auxiliaries
    z: np.ndarray          # (M,) log(signal) auxiliaries
    phi: np.ndarray        # (M, M) binariness penalties
    lam: float             # penalty weight

    @property
    def num_users(self) -> int:
        return self.p.size

    def objective(self) -> float:
        """Penalized objective ``sum u - lam * sum phi``."""
        return float(self.u.sum() - self.lam * self.phi.sum())

    def max_phi(self) -> float:
        return float(self.phi.max()) if self.phi.size else 0.0


class _Layout:
    """Flat vector layout; the order matrix is reduced to its upper triangle."""

    def __init__(self, m: int):
        self.m = m
        self.pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
        self.ordered = [(i, j) for i in range(m) for j in range(m) if i != j]
        pair_index = {p: k for k, p in enumerate(self.pairs)}
        # alpha_ij = offset + sign * t(pair); the lower triangle mirrors the upper
        self.alpha_col = np.array(
            [pair_index[(i, j) if i < j else (j, i)] for (i, j) in self.ordered], dtype=int
        )
        self.alpha_sign = np.array([1.0 if i < j else -1.0 for (i, j) in self.ordered])
        self.alpha_off = np.array([0.0 if i < j else 1.0 for (i, j) in self.ordered])

        sizes = {
            "q": 2,
            "p": m,
            "u": m,
            "s": m,
            "v": m,
            "z": m,
            "t": len(self.pairs),
            "y": len(self.ordered),
            "phi": len(self.ordered),
        }
        start = 0
        self.slices = {}
        for name, size in sizes.items():
            self.slices[name] = slice(start, start + size)
            start += size
        self.n = start

    def pack(self, state: ScaState) -> np.ndarray:
        x = np.empty(self.n)
        sl = self.slices
        x[sl["q"]] = state.q
        x[sl["p"]] = state.p
        x[sl["u"]] = state.u
        x[sl["s"]] = state.s
        x[sl["v"]] = state.v
        x[sl["z"]] = state.z
        x[sl["t"]] = [state.alpha[i, j] for (i, j) in self.pairs]
        x[sl["y"]] = [state.y[i, j] for (i, j) in self.ordered]
        x[sl["phi"]] = [state.phi[i, j] for (i, j) in self.ordered]
        return x

    def unpack(self, x: np.ndarray, lam: float) -> ScaState:
        sl = self.slices
        m = self.m
        alpha = np.zeros((m, m))
        t = x[sl["t"]]
        for e, (i, j) in enumerate(self.ordered):
            alpha[i, j] = self.alpha_off[e] + self.alpha_sign[e] * t[self.alpha_col[e]]
        y = np.zeros((m, m))
        phi = np.zeros((m, m))
        for e, (i, j) in enumerate(self.ordered):
            y[i, j] = x[sl["y"]][e]
            phi[i, j] = x[sl["phi"]][e]
        return ScaState(
            q=x[sl["q"]].copy(),
            alpha=alpha,
            p=x[sl["p"]].copy(),
            s=x[sl["s"]].copy(),
            u=x[sl["u"]].copy(),
            v=x[sl["v"]].copy(),
            y=y,
            z=x[sl["z"]].copy(),
            phi=phi,
            lam=lam,
        )

    def alpha_vector(self, x: np.ndarray) -> np.ndarray:
        return self.alpha_off + self.alpha_sign * x[self.slices["t"]][self.alpha_col]


def check_anchor(scenario: Scenario, state: ScaState, tol: float = 1e-6) -> None:
    """Verify the anchor against the original (nonconvex) constraint set.

    Raises :class:`AnchorError` naming the first violated constraint; the
    expansion point of a trust-free inner approximation must itself be
    feasible or the restriction property is lost.
    """
    m = state.num_users
    users = scenario.users
    h2 = scenario.altitude_h**2
    g0 = scenario.gamma0
    d2 = channel.squared_distances(scenario, state.q)
    geo = float(d2.max())

    def fail(name, detail):
        raise AnchorError(f"anchor violates {name}: {detail}")

    a = state.alpha
    if np.any(np.abs(np.diag(a)) > tol):
        fail("zero-diagonal order", f"max |alpha_ii| = {np.abs(np.diag(a)).max():.2e}")
    off = ~np.eye(m, dtype=bool)
    if np.any(a[off] < -tol) or np.any(a[off] > 1.0 + tol):
        fail("order box", "alpha entries outside [0, 1]")
    pairsum = a + a.T
    if np.any(np.abs(pairsum[off] - 1.0) > tol):
        fail("order pair completeness", "alpha_ij + alpha_ji != 1")
    lhs = a * d2[:, None]
    rhs = d2[None, :]
    if np.any((lhs - rhs)[off] > tol * geo):
        fail("order-distance consistency", "alpha_ij * d_i^2 > d_j^2")

    if np.any(state.p < -tol):
        fail("power nonnegativity", f"min p = {state.p.min():.2e}")
    if state.p.sum() > scenario.p_max + tol:
        fail("power budget", f"sum p = {state.p.sum():.6g} > {scenario.p_max}")
    if np.any(state.u < scenario.r_star - tol):
        fail("rate floor", f"min u = {state.u.min():.9g} < r_star = {scenario.r_star}")
    if np.any(state.phi[off] < -tol):
        fail("penalty nonnegativity", f"min phi = {state.phi[off].min():.2e}")
    binviol = a - a * a - state.phi
    if np.any(binviol[off] > tol):
        fail("binary relaxation", f"alpha - alpha^2 > phi by {binviol[off].max():.2e}")

    if np.any(state.s - d2 > tol * geo):
        fail("distance cap", "s_i > H^2 + ||q - q_i||^2")
    if np.any(state.y[off] < -tol):
        fail("interference-term nonnegativity", f"min y = {state.y[off].min():.2e}")
    prod = g0 * a * state.p[None, :] - state.y * state.s[None, :]
    if np.any(prod[off] > tol * g0 * max(scenario.p_max, 1.0)):
        fail("interference product", "gamma0 * alpha_ij * p_j > y_ij * s_j")
    interference = state.y.sum(axis=1) - np.diag(state.y)
    if np.any(1.0 + interference > np.exp(state.v) * (1.0 + tol)):
        fail("interference cap", "1 + sum_j y_ij > e^{v_i}")
    if np.any(state.p <= 0.0) and np.any(state.u > tol):
        fail("signal positivity", "zero power with positive rate bound")
    signal = g0 * state.p / np.maximum(state.s, 1e-300)
    if np.any(np.exp(state.z) > signal * (1.0 + tol) + tol):
        fail("signal bound", "e^{z_i} > gamma0 p_i / s_i")
    rate_bound = np.log2(1.0 + np.exp(state.z - state.v))
    if np.any(state.u - rate_bound > tol):
        fail("rate bound", f"u_i above log2(1 + e^{{z-v}}) by {(state.u - rate_bound).max():.2e}")


class ConvexSubproblem:
    """Linearized constraint set and penalized objective at a fixed anchor.

    Exposes the constraint vector, Jacobian and weighted Hessian over the
    flattened variable vector; :func:`solve_subproblem` feeds these to the
    interior-point solver.
    """

    def __init__(self, scenario: Scenario, anchor: ScaState):
        self.scenario = scenario
        self.anchor = anchor
        self.lam = float(anchor.lam)
        m = scenario.num_users
        self.layout = _Layout(m)
        lay = self.layout
        sl = lay.slices

        users = scenario.users
        self.h2 = scenario.altitude_h**2
        self.g0 = scenario.gamma0

        qbar = anchor.q
        self.dbar = channel.squared_distances(scenario, qbar)          # (M,)
        self.bvec = 2.0 * (qbar[None, :] - users)                      # (M, 2) gradient of d_i^2
        self.lconst = self.dbar - self.bvec @ qbar                     # L_i(q) = lconst + bvec.q

        zv = anchor.z - anchor.v
        self.exp_zv = np.exp(zv)
        self.f25 = np.log2(1.0 + self.exp_zv)
        self.c25 = self.exp_zv / ((1.0 + self.exp_zv) * _LN2)          # tangent slope of log2(1+e^t)
        self.exp_negz = np.exp(-anchor.z)
        self.exp_v = np.exp(anchor.v)

        E = len(lay.ordered)
        self.row_i = np.array([i for (i, j) in lay.ordered], dtype=int)
        self.row_j = np.array([j for (i, j) in lay.ordered], dtype=int)
        abar = np.array([anchor.alpha[i, j] for (i, j) in lay.ordered])
        pbar_j = anchor.p[self.row_j]
        ybar = np.array([anchor.y[i, j] for (i, j) in lay.ordered])
        sbar_j = anchor.s[self.row_j]
        self.abar = abar
        self.coef22 = self.dbar[self.row_i] - abar                     # >= 0 since d^2 >= H^2 >= 1
        self.const22 = self.coef22**2 / 4.0
        self.ap32 = abar - pbar_j                                      # anchor alpha_ij - p_j
        self.ys32 = ybar + sbar_j                                      # anchor y_ij + s_j

        # ---- affine rows: A x + a0 <= 0, assembled once ----
        rows, consts, labels = [], [], []

        def add_row(label, const, entries):
            row = np.zeros(lay.n)
            for idx, coeff in entries:
                row[idx] += coeff
            rows.append(row)
            consts.append(const)
            labels.append(label)

        r_star, p_max = scenario.r_star, scenario.p_max
        u0, p0, s0 = sl["u"].start, sl["p"].start, sl["s"].start
        v0, z0, t0 = sl["v"].start, sl["z"].start, sl["t"].start
        y0, f0 = sl["y"].start, sl["phi"].start
        qx, qy = sl["q"].start, sl["q"].start + 1

        for i in range(m):
            add_row(f"qos_floor[{i}]", r_star, [(u0 + i, -1.0)])
        for i in range(m):
            add_row(f"power_nonneg[{i}]", 0.0, [(p0 + i, -1.0)])
        add_row("power_budget", -p_max, [(p0 + i, 1.0) for i in range(m)])
        for k in range(len(lay.pairs)):
            add_row(f"alpha_box_lo[{k}]", 0.0, [(t0 + k, -1.0)])
            add_row(f"alpha_box_hi[{k}]", -1.0, [(t0 + k, 1.0)])
        for e in range(E):
            add_row(f"penalty_nonneg[{e}]", 0.0, [(f0 + e, -1.0)])
        for e in range(E):
            add_row(f"interference_aux_nonneg[{e}]", 0.0, [(y0 + e, -1.0)])
        xmin, ymin, xmax, ymax = scenario.area
        add_row("position_box_xlo", xmin, [(qx, -1.0)])
        add_row("position_box_xhi", -xmax, [(qx, 1.0)])
        add_row("position_box_ylo", ymin, [(qy, -1.0)])
        add_row("position_box_yhi", -ymax, [(qy, 1.0)])

        # binariness: alpha - tangent(alpha^2) <= phi
        for e in range(E):
            ab = abar[e]
            col = t0 + lay.alpha_col[e]
            sign = lay.alpha_sign[e]
            offs = lay.alpha_off[e]
            add_row(
                f"binary_relaxation[{e}]",
                offs * (1.0 - 2.0 * ab) + ab * ab,
                [(col, sign * (1.0 - 2.0 * ab)), (f0 + e, -1.0)],
            )
        # rate tangent: u_i <= f25 + c25 * ((z - v) - (zbar - vbar))
        for i in range(m):
            add_row(
                f"rate_tangent[{i}]",
                -self.f25[i] + self.c25[i] * (anchor.z[i] - anchor.v[i]),
                [(u0 + i, 1.0), (z0 + i, -self.c25[i]), (v0 + i, self.c25[i])],
            )
        # distance cap: s_i <= L_i(q)
        for i in range(m):
            add_row(
                f"distance_cap[{i}]",
                -self.lconst[i],
                [(s0 + i, 1.0), (qx, -self.bvec[i, 0]), (qy, -self.bvec[i, 1])],
            )
        # interference cap: 1 + sum_j y_ij <= e^{vbar} (v - vbar + 1)
        for i in range(m):
            entries = [(v0 + i, -self.exp_v[i])]
            for e in range(E):
                if self.row_i[e] == i:
                    entries.append((y0 + e, 1.0))
            add_row(
                f"interference_cap[{i}]",
                1.0 + self.exp_v[i] * (anchor.v[i] - 1.0),
                entries,
            )

        self._A = np.array(rows)
        self._a0 = np.array(consts)
        self._affine_labels = labels
        self._nl_labels = (
            [f"order_consistency[{e}]" for e in range(E)]
            + [f"snr_tangent[{i}]" for i in range(m)]
            + [f"interference_product[{e}]" for e in range(E)]
        )
        self.m_total = len(labels) + len(self._nl_labels)

    # ------------------------------------------------------------------
    @property
    def family_counts(self) -> dict:
        counts: dict[str, int] = {}
        for label in self.constraint_labels():
            counts[label.split("[")[0]] = counts.get(label.split("[")[0], 0) + 1
        return counts

    def constraint_labels(self) -> list[str]:
        return list(self._affine_labels) + list(self._nl_labels)

    def objective_coefficients(self) -> np.ndarray:
        """Coefficients of the minimized objective ``-(sum u - lam sum phi)``."""
        c = np.zeros(self.layout.n)
        c[self.layout.slices["u"]] = -1.0
        c[self.layout.slices["phi"]] = self.lam
        return c

    def objective_value(self, state: ScaState) -> float:
        return float(state.u.sum() - self.lam * state.phi.sum())

    # ------------------------------------------------------------------
    def _nl_pieces(self, x: np.ndarray):
        lay = self.layout
        sl = lay.slices
        q = x[sl["q"]]
        offsets = q[None, :] - self.scenario.users
        d2 = self.h2 + np.einsum("ij,ij->i", offsets, offsets)
        lvals = self.lconst + self.bvec @ q
        alpha = lay.alpha_vector(x)
        return q, offsets, d2, lvals, alpha

    def constraint_values(self, x: np.ndarray) -> np.ndarray:
        lay = self.layout
        sl = lay.slices
        q, offsets, d2, lvals, alpha = self._nl_pieces(x)
        p, s, y, z = x[sl["p"]], x[sl["s"]], x[sl["y"]], x[sl["z"]]
        i_idx, j_idx = self.row_i, self.row_j

        g_aff = self._A @ x + self._a0

        w = d2[i_idx] + alpha
        g22 = (
            w * w / 4.0
            + self.const22
            - 0.5 * self.coef22 * (lvals[i_idx] - alpha)
            - lvals[j_idx]
        )

        g27 = d2 / (self.g0 * p) + self.exp_negz * z - self.exp_negz * (1.0 + self.anchor.z)

        ap = alpha + p[j_idx]
        ys = y - s[j_idx]
        g32 = (
            self.g0 * ap * ap
            + ys * ys
            - 2.0 * self.ys32 * (y + s[j_idx])
            + self.ys32**2
            - self.g0 * (2.0 * self.ap32 * (alpha - p[j_idx]) - self.ap32**2)
        )
        return np.concatenate([g_aff, g22, g27, g32])

    def constraint_jacobian(self, x: np.ndarray) -> np.ndarray:
        lay = self.layout
        sl = lay.slices
        m = lay.m
        E = len(lay.ordered)
        q, offsets, d2, lvals, alpha = self._nl_pieces(x)
        p, s, y = x[sl["p"]], x[sl["s"]], x[sl["y"]]
        i_idx, j_idx = self.row_i, self.row_j
        qs, ps, ss, zs, ts, ys_s = (
            sl["q"].start,
            sl["p"].start,
            sl["s"].start,
            sl["z"].start,
            sl["t"].start,
            sl["y"].start,
        )

        J = np.zeros((self.m_total, lay.n))
        n_aff = self._A.shape[0]
        J[:n_aff] = self._A
        r22 = n_aff
        r27 = r22 + E
        r32 = r27 + m

        w = d2[i_idx] + alpha
        # order consistency rows: quadratic in (q, alpha)
        grad_q = w[:, None] * offsets[i_idx] - 0.5 * self.coef22[:, None] * self.bvec[i_idx] - self.bvec[j_idx]
        J[r22 : r22 + E, qs : qs + 2] = grad_q
        np.add.at(
            J[r22 : r22 + E],
            (np.arange(E), ts + lay.alpha_col),
            lay.alpha_sign * (0.5 * w + 0.5 * self.coef22),
        )

        # SNR tangent rows: quadratic-over-linear in (q, p) plus affine z
        inv = 1.0 / (self.g0 * p)
        J[r27 : r27 + m, qs : qs + 2] = 2.0 * offsets * inv[:, None]
        J[np.arange(r27, r27 + m), ps + np.arange(m)] = -d2 * inv / p
        J[np.arange(r27, r27 + m), zs + np.arange(m)] = self.exp_negz

        # interference product rows: convex quadratic minus affine tangent
        ap = alpha + p[j_idx]
        ym = y - s[j_idx]
        np.add.at(
            J[r32 : r32 + E],
            (np.arange(E), ts + lay.alpha_col),
            lay.alpha_sign * (2.0 * self.g0 * ap - 2.0 * self.g0 * self.ap32),
        )
        np.add.at(
            J[r32 : r32 + E],
            (np.arange(E), ps + j_idx),
            2.0 * self.g0 * ap + 2.0 * self.g0 * self.ap32,
        )
        J[np.arange(r32, r32 + E), ys_s + np.arange(E)] = 2.0 * ym - 2.0 * self.ys32
        np.add.at(
            J[r32 : r32 + E],
            (np.arange(E), ss + j_idx),
            -2.0 * ym - 2.0 * self.ys32,
        )
        return J

    def weighted_constraint_hessian(self, x: np.ndarray, weights: np.ndarray) -> np.ndarray:
        lay = self.layout
        sl = lay.slices
        m = lay.m
        E = len(lay.ordered)
        q, offsets, d2, lvals, alpha = self._nl_pieces(x)
        p = x[sl["p"]]
        i_idx, j_idx = self.row_i, self.row_j
        qs, ps, ss, ts, ys_s = (
            sl["q"].start,
            sl["p"].start,
            sl["s"].start,
            sl["t"].start,
            sl["y"].start,
        )
        n_aff = self._A.shape[0]
        w22 = weights[n_aff : n_aff + E]
        w27 = weights[n_aff + E : n_aff + E + m]
        w32 = weights[n_aff + E + m :]

        H = np.zeros((lay.n, lay.n))

        # order consistency: 0.5 * grad(w) grad(w)^T + w * I on the position block
        wvals = d2[i_idx] + alpha
        for e in range(E):
            we = w22[e]
            if we == 0.0:
                continue
            gw = np.zeros(3)
            gw[:2] = 2.0 * offsets[i_idx[e]]
            gw[2] = lay.alpha_sign[e]
            idx = [qs, qs + 1, ts + lay.alpha_col[e]]
            block = 0.5 * np.outer(gw, gw)
            block[0, 0] += wvals[e]
            block[1, 1] += wvals[e]
            H[np.ix_(idx, idx)] += we * block

        # SNR tangent: quadratic-over-linear Hessian in (q, p_i)
        for i in range(m):
            wi = w27[i]
            if wi == 0.0:
                continue
            gp = self.g0 * p[i]
            idx = [qs, qs + 1, ps + i]
            block = np.empty((3, 3))
            block[0, 0] = 2.0 / gp
            block[1, 1] = 2.0 / gp
            block[0, 1] = block[1, 0] = 0.0
            block[0, 2] = block[2, 0] = -2.0 * offsets[i, 0] / (gp * p[i])
            block[1, 2] = block[2, 1] = -2.0 * offsets[i, 1] / (gp * p[i])
            block[2, 2] = 2.0 * d2[i] / (gp * p[i] * p[i])
            H[np.ix_(idx, idx)] += wi * block

        # interference product: constant quadratic form in (alpha, p_j, y, s_j)
        for e in range(E):
            we = w32[e]
            if we == 0.0:
                continue
            sign = lay.alpha_sign[e]
            idx = [ts + lay.alpha_col[e], ps + j_idx[e], ys_s + e, ss + j_idx[e]]
            block = np.array(
                [
                    [2.0 * self.g0, 2.0 * self.g0 * sign, 0.0, 0.0],
                    [2.0 * self.g0 * sign, 2.0 * self.g0, 0.0, 0.0],
                    [0.0, 0.0, 2.0, -2.0],
                    [0.0, 0.0, -2.0, 2.0],
                ]
            )
            H[np.ix_(idx, idx)] += we * block
        return H

    # ------------------------------------------------------------------
    def variable_scale(self) -> np.ndarray:
        lay = self.layout
        sl = lay.slices
        scn = self.scenario
        scale = np.ones(lay.n)
        xmin, ymin, xmax, ymax = scn.area
        scale[sl["q"]] = max(1.0, xmax - xmin, ymax - ymin) / 4.0
        scale[sl["p"]] = max(scn.p_max, 1e-9)
        scale[sl["u"]] = max(1.0, scn.r_star)
        scale[sl["s"]] = max(1.0, float(self.anchor.s.max()))
        scale[sl["v"]] = max(1.0, float(np.abs(self.anchor.v).max()))
        scale[sl["z"]] = max(1.0, float(np.abs(self.anchor.z).max()))
        if len(lay.ordered):
            scale[sl["y"]] = max(1.0, float(self.anchor.y.max()))
        return scale

    def domain_ok(self, x: np.ndarray) -> bool:
        return bool(np.all(x[self.layout.slices["p"]] > 0.0))


def build_subproblem(scenario: Scenario, anchor: ScaState) -> ConvexSubproblem:
    """Validate the anchor against the original constraints and linearize there."""
    check_anchor(scenario, anchor)
    return ConvexSubproblem(scenario, anchor)


def solve_subproblem(sub: ConvexSubproblem) -> ScaState:
    """Solve the convex restriction to its optimum with the embedded solver.

    Returns the optimizing :class:`ScaState`; constraint satisfaction is
    within 1e-6 and the objective within 1e-4 of the subproblem optimum
    (typically far tighter).  Numerical failure raises
    :class:`~uavnoma.ipm.SubproblemSolveError` with diagnostics.
    """
    x0 = sub.layout.pack(sub.anchor)
    result = ipm.minimize(
        sub.objective_coefficients(),
        sub.constraint_values,
        sub.constraint_jacobian,
        sub.weighted_constraint_hessian,
        x0,
        domain_fn=sub.domain_ok,
        var_scale=sub.variable_scale(),
    )
    return sub.layout.unpack(result.x, sub.lam)
