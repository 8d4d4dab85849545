"""Design of the spline pair (b, s) by constrained minimization.

The criterion is xi_tilde * (e(0; s) - 1) + (1 - xi_tilde) * int (e - 1) dgamma
subject to min over gamma of coverage >= 1 - alpha.  Decision variables
are the b values at interior knots (b is pinned to 0 at 0 and d) and
the s values at all knots except s(d) = t(m).

The gamma integral of e - 1 has a closed form: integrating the SEL
correction over the real line makes the Gaussian factor integrate to
one and leaves E[W^2] = 1, giving
2 * int_0^d (s(x) - t(m)) dx / (t(m) E[W]), evaluated exactly from the
spline.

The constraint is enforced by a sequential quadratic penalty on the
coverage shortfall over a finite gamma grid (inner solver L-BFGS-B with
central finite-difference gradients).  The penalty target is exactly
1 - alpha: a padded target would move the mu -> infinity limit away
from the true constrained optimum, whereas with the exact target the
equilibrium shortfall shrinks like 1/mu and the iterates converge to
it.  Every returned design is re-verified on a 10x denser grid.  The
whole procedure is deterministic (finite-difference evaluations may run
on a thread pool, but each is independent and results are combined
positionally).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize

from interval_lab.kg_core import (
    GammaGrid,
    SplinePair,
    coverage_and_sel_grid,
    expected_w,
    scaled_expected_length,
    _max_workers,
    _w_rule,
    _x_rule_cached,
)
from interval_lab.special_fn import t_two_sided

__all__ = ["DesignConfig", "design", "objective"]


def _default_grid() -> GammaGrid:
    return GammaGrid.regular(20.0, 0.5)


@dataclass(frozen=True)
class DesignConfig:
    """Problem data plus optimizer tuning for the spline-pair design."""

    m: int = 4
    rho: float = -1.0 / math.sqrt(2.0)
    alpha: float = 0.05
    xi_tilde: float = 1.0 / 1.2
    d: float = 12.0
    knots: tuple = (0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0)
    gamma_constraint_grid: GammaGrid = field(default_factory=_default_grid)
    coverage_pad: float = 0.0
    fd_step: float = 1e-4
    penalty_init: float = 1e4
    penalty_growth: float = math.sqrt(10.0)
    penalty_stages: int = 12
    max_iter: int = 150
    obj_tol: float = 1e-7
    constraint_tol: float = 1e-6
    order_x: int = 8
    order_w: int = 10

    def __post_init__(self) -> None:
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "knots", tuple(float(x) for x in self.knots))
        if not 0.0 <= self.xi_tilde <= 1.0:
            raise ValueError(f"xi_tilde must lie in [0, 1], got {self.xi_tilde!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie strictly in (0, 1), got {self.alpha!r}")
        if not abs(self.rho) < 1.0:
            raise ValueError(f"|rho| must be < 1, got {self.rho!r}")
        if self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        k = np.asarray(self.knots)
        if k.size < 3 or np.any(np.diff(k) <= 0.0):
            raise ValueError("knots must be at least three strictly ascending values")
        if k[0] != 0.0 or k[-1] != float(self.d):
            raise ValueError("knots must start at 0 and end at d")
        if self.coverage_pad < 0.0:
            raise ValueError(f"coverage_pad must be nonnegative, got {self.coverage_pad!r}")
        self.gamma_constraint_grid.require_span(float(self.d) + 8.0)

    @property
    def t_crit(self) -> float:
        return t_two_sided(self.alpha, self.m)


def _sel_integral(spline_s: CubicSpline, d: float, crit: float, e_w: float) -> float:
    """Exact value of int over the real line of (e(gamma) - 1) dgamma."""
    return 2.0 * (float(spline_s.integrate(0.0, d)) - crit * d) / (crit * e_w)


def objective(sp: SplinePair, cfg: DesignConfig) -> float:
    """Weighted SEL criterion: xi_tilde*(e(0)-1) + (1-xi_tilde)*int(e-1)dgamma."""
    if (
        sp.m != cfg.m
        or sp.alpha != cfg.alpha
        or sp.rho != cfg.rho
        or sp.d != float(cfg.d)
        or sp.knots != cfg.knots
    ):
        raise ValueError("spline pair is inconsistent with the design configuration")
    e0 = scaled_expected_length(0.0, sp, tol=1e-9)
    integral = _sel_integral(sp._spline_s, sp.d, sp.t_crit, expected_w(cfg.m))
    return cfg.xi_tilde * (e0 - 1.0) + (1.0 - cfg.xi_tilde) * integral


class _PenaltyModel:
    """Fixed-order quadrature evaluator with the variable-independent parts cached.

    For a fixed cfg, the Gaussian factor phi(w x - gamma), the quadrature
    weights, and the standard-pair coverage baseline do not depend on the
    decision variables, so each evaluation costs only two normal-CDF array
    calls and a weighted sum.
    """

    def __init__(self, cfg: DesignConfig):
        self.cfg = cfg
        self.crit = cfg.t_crit
        self.knots = np.asarray(cfg.knots)
        self.n_b = self.knots.size - 2
        self.target = 1.0 - cfg.alpha + cfg.coverage_pad
        self.e_w = expected_w(cfg.m)
        root = math.sqrt(1.0 - cfg.rho * cfg.rho)
        self.w_over_root = None

        xg, xw = _x_rule_cached(cfg.knots, cfg.order_x)
        wg, ww = _w_rule(cfg.m, cfg.order_w)
        gammas = cfg.gamma_constraint_grid.as_array()
        z = wg[None, :, None] * xg[None, None, :] - gammas[:, None, None]
        phi = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        self.phiw = ww[None, :, None] * phi * xw[None, None, :]
        self.zr = (cfg.rho / root) * z
        q = (self.crit / root) * wg[None, :, None]
        base = special.ndtr(q - self.zr) - special.ndtr(-q - self.zr)
        self.base_cov = np.einsum("gij,gij->g", self.phiw, base)
        self.sel_w = ((ww * wg) @ phi[0]) * xw
        self.abs_xg = np.abs(xg)
        self.sgn_xg = np.sign(xg)
        self.w_over_root = wg[:, None] / root

    def splines(self, v: np.ndarray):
        b_full = np.concatenate(([0.0], v[: self.n_b], [0.0]))
        s_full = np.concatenate((v[self.n_b :], [self.crit]))
        return (
            CubicSpline(self.knots, b_full, bc_type="natural"),
            CubicSpline(self.knots, s_full, bc_type="natural"),
        )

    def terms(self, v: np.ndarray):
        spline_b, spline_s = self.splines(v)
        bs = self.sgn_xg * spline_b(self.abs_xg)
        ss = spline_s(self.abs_xg)
        p_hi = self.w_over_root * (bs + ss)[None, :]
        p_lo = self.w_over_root * (bs - ss)[None, :]
        psi = special.ndtr(p_hi[None, :, :] - self.zr) - special.ndtr(
            p_lo[None, :, :] - self.zr
        )
        cov = (
            (1.0 - self.cfg.alpha)
            + np.einsum("gij,gij->g", self.phiw, psi)
            - self.base_cov
        )
        e0 = 1.0 + float(self.sel_w @ (ss - self.crit)) / (self.crit * self.e_w)
        integral = _sel_integral(spline_s, self.cfg.d, self.crit, self.e_w)
        obj = self.cfg.xi_tilde * (e0 - 1.0) + (1.0 - self.cfg.xi_tilde) * integral
        shortfall = np.clip(self.target - cov, 0.0, None)
        return obj, float(shortfall @ shortfall), cov

    def penalized(self, v: np.ndarray, mu: float) -> float:
        obj, pen, _ = self.terms(v)
        return obj + mu * pen

    def value_and_grad(self, v: np.ndarray, mu: float):
        h = self.cfg.fd_step
        points = [v]
        for i in range(v.size):
            vp = v.copy()
            vm = v.copy()
            vp[i] += h
            vm[i] -= h
            points.extend((vp, vm))
        workers = _max_workers()
        if workers == 1:
            vals = [self.penalized(u, mu) for u in points]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                vals = list(pool.map(lambda u: self.penalized(u, mu), points))
        grad = (np.asarray(vals[1::2]) - np.asarray(vals[2::2])) / (2.0 * h)
        return vals[0], grad

    def to_pair(self, v: np.ndarray) -> SplinePair:
        return SplinePair(
            d=self.cfg.d,
            knots=self.cfg.knots,
            b_values=(0.0, *v[: self.n_b], 0.0),
            s_values=(*v[self.n_b :], self.crit),
            m=self.cfg.m,
            alpha=self.cfg.alpha,
            rho=self.cfg.rho,
        )


def _densify(grid: GammaGrid, factor: int = 10) -> np.ndarray:
    pts = grid.as_array()
    pieces = [
        np.linspace(pts[i], pts[i + 1], factor + 1)[:-1] for i in range(pts.size - 1)
    ]
    return np.concatenate(pieces + [pts[-1:]])


def design(cfg: DesignConfig) -> SplinePair:
    """Minimize the weighted SEL criterion subject to minimum coverage 1 - alpha.

    Sequential quadratic penalty with an L-BFGS-B inner solver and
    central finite-difference gradients, started from the standard pair
    (b = 0, s = t(m)).  Stops once the stage-to-stage objective change
    drops below obj_tol with grid constraint violation below
    constraint_tol, then re-verifies coverage on a 10x denser grid.
    """
    model = _PenaltyModel(cfg)
    crit = cfg.t_crit
    n_b = model.n_b
    n_s = model.knots.size - 1
    v = np.concatenate([np.zeros(n_b), np.full(n_s, crit)])
    bounds = [(-2.0 * crit, 2.0 * crit)] * n_b + [(0.2 * crit, 2.5 * crit)] * n_s

    mu = cfg.penalty_init
    obj_prev = None
    for _stage in range(cfg.penalty_stages):
        res = minimize(
            model.value_and_grad,
            v,
            args=(mu,),
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={
                "maxiter": cfg.max_iter,
                "ftol": 1e-12,
                "gtol": 1e-9,
                "maxls": 30,
                "maxcor": 20,
            },
        )
        v = res.x
        obj, _, cov = model.terms(v)
        violation = max(0.0, (1.0 - cfg.alpha) - float(cov.min()))
        if (
            obj_prev is not None
            and abs(obj_prev - obj) < cfg.obj_tol
            and violation < cfg.constraint_tol
        ):
            break
        obj_prev = obj
        mu *= cfg.penalty_growth

    obj, _, cov = model.terms(v)
    violation = max(0.0, (1.0 - cfg.alpha) - float(cov.min()))
    if violation >= cfg.constraint_tol:
        raise RuntimeError(
            "design optimizer stalled with constraint violation "
            f"{violation:.3e}; last iterate objective={obj:.6e}, "
            f"min grid coverage={float(cov.min()):.6f}, values={v.tolist()}"
        )

    sp = model.to_pair(v)
    grid_cov, _ = coverage_and_sel_grid(
        sp, cfg.gamma_constraint_grid.as_array(), tol=1e-7
    )
    dense_cov, _ = coverage_and_sel_grid(sp, _densify(cfg.gamma_constraint_grid), tol=1e-7)
    floor_grid = 1.0 - cfg.alpha - 1e-4
    floor_dense = 1.0 - cfg.alpha - 5e-4
    if float(grid_cov.min()) < floor_grid or float(dense_cov.min()) < floor_dense:
        raise RuntimeError(
            "designed pair failed coverage verification: "
            f"min grid coverage={float(grid_cov.min()):.6f} (floor {floor_grid}), "
            f"min dense coverage={float(dense_cov.min()):.6f} (floor {floor_dense}); "
            f"values={v.tolist()}"
        )
    return sp
