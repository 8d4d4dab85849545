"""Exact two-component t-mixture marginal posterior of theta.

Two slab-and-spike prior families on (tau, sigma^2) are supported, both
placing prior mass xi on the spike "tau = 0":

* ``SLAB_SPIKE_VARIANCE``: pi(theta, tau, sigma^2) = (xi delta(tau)
  + (1 - xi)) sigma^-2.  The posterior mixes a t with m+1 degrees of
  freedom (spike component) and one with m (slab component); the
  mixture weight depends on sigma_hat as well as tau_hat/sigma_hat.
* ``SLAB_SPIKE_SCALE``: pi(theta, tau, sigma^2) = xi delta(tau)
  sigma^-g + (1 - xi) sigma^-(g+1).  Both components have m+g-1
  degrees of freedom and the weight is a function of tau_hat/sigma_hat
  alone, which makes the scaled interval summaries scale invariant.

In both cases the spike component is centered at
mu_1 = theta_hat - rho * tau_hat and the slab component at theta_hat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

from interval_lab.model_prep import SufficientStats
from interval_lab.special_fn import t_cdf, t_pdf

__all__ = [
    "PriorFamily",
    "PriorSpec",
    "TComponent",
    "PosteriorMixture",
    "weight_slab_spike",
    "weight_scaled",
    "build_posterior",
    "posterior_pdf",
    "posterior_cdf",
]


class PriorFamily(Enum):
    """Slab-and-spike prior family selector (values double as CLI codes)."""

    SLAB_SPIKE_VARIANCE = "s3"
    SLAB_SPIKE_SCALE = "s4"


@dataclass(frozen=True)
class PriorSpec:
    """Prior family, spike mass xi, and scale exponent g (second family only)."""

    family: PriorFamily
    xi: float
    g: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "xi", float(self.xi))
        object.__setattr__(self, "g", float(self.g))
        if not isinstance(self.family, PriorFamily):
            raise TypeError(f"family must be a PriorFamily, got {self.family!r}")
        if not 0.0 <= self.xi <= 1.0:
            raise ValueError(f"xi must lie in [0, 1], got {self.xi!r}")
        if not math.isfinite(self.g):
            raise ValueError(f"g must be finite, got {self.g!r}")


@dataclass(frozen=True)
class TComponent:
    """Location-scale t component f_dof(x; loc, scale^2)."""

    loc: float
    scale: float
    dof: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "loc", float(self.loc))
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "dof", float(self.dof))
        if not self.scale > 0.0:
            raise ValueError(f"component scale must be positive, got {self.scale!r}")
        if not self.dof > 0.0:
            raise ValueError(f"component dof must be positive, got {self.dof!r}")

    def pdf(self, x):
        return t_pdf((np.asarray(x, dtype=float) - self.loc) / self.scale, self.dof) / self.scale

    def cdf(self, x):
        return t_cdf((np.asarray(x, dtype=float) - self.loc) / self.scale, self.dof)


@dataclass(frozen=True)
class PosteriorMixture:
    """Two-component t mixture: weight_spike on comp_spike, rest on comp_slab.

    theta_hat and sigma_hat are carried along so interval solvers can
    work in the standardized coordinate w = (v - theta_hat) / sigma_hat.
    """

    weight_spike: float
    comp_spike: TComponent
    comp_slab: TComponent
    theta_hat: float
    sigma_hat: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "weight_spike", float(self.weight_spike))
        object.__setattr__(self, "theta_hat", float(self.theta_hat))
        object.__setattr__(self, "sigma_hat", float(self.sigma_hat))
        if not 0.0 <= self.weight_spike <= 1.0:
            raise ValueError(f"weight_spike must lie in [0, 1], got {self.weight_spike!r}")
        if not self.sigma_hat > 0.0:
            raise ValueError(f"sigma_hat must be positive, got {self.sigma_hat!r}")

    def pdf(self, x):
        return posterior_pdf(self, x)

    def cdf(self, x):
        return posterior_cdf(self, x)


def weight_slab_spike(sigma_hat: float, r: float, xi: float, m: float) -> float:
    """Posterior spike weight lambda for the variance-flat family.

    lambda = 1 / (1 + k sigma_hat (m + r^2)^((m+1)/2)) with
    k = (1 - xi) sqrt(pi) Gamma(m/2) / (xi m^(m/2) Gamma((m+1)/2)).
    Evaluated in log space; xi in {0, 1} is short-circuited because k is
    a limit, not an evaluable expression, at the endpoints.

    Parameters
    ----------
    sigma_hat : float
        Residual scale estimate, > 0.
    r : float
        tau_hat / sigma_hat.
    xi : float
        Prior spike mass in [0, 1].
    m : float
        Residual degrees of freedom, >= 1.

    Returns
    -------
    float
        lambda in [0, 1], strictly decreasing in |r| and sigma_hat for
        xi strictly inside (0, 1).
    """
    sigma_hat = float(sigma_hat)
    r = float(r)
    xi = float(xi)
    m = float(m)
    if not sigma_hat > 0.0:
        raise ValueError(f"sigma_hat must be positive, got {sigma_hat!r}")
    if m < 1.0:
        raise ValueError(f"m must be at least 1, got {m!r}")
    if not 0.0 <= xi <= 1.0:
        raise ValueError(f"xi must lie in [0, 1], got {xi!r}")
    if xi == 0.0:
        return 0.0
    if xi == 1.0:
        return 1.0
    log_k = (
        math.log1p(-xi)
        - math.log(xi)
        + 0.5 * math.log(math.pi)
        + special.gammaln(m / 2.0)
        - special.gammaln((m + 1.0) / 2.0)
        - 0.5 * m * math.log(m)
    )
    log_odds = log_k + math.log(sigma_hat) + 0.5 * (m + 1.0) * math.log(m + r * r)
    return float(special.expit(-log_odds))


def weight_scaled(r: float, xi: float, m: float, g: float) -> float:
    """Posterior spike weight for the scale-graded family.

    lambda = 1 / (1 + k(g) (m + r^2)^((m+g-1)/2)) with
    k(g) = sqrt(2 pi) (1 - xi) / (xi m^((m+g-1)/2)).  No sigma_hat
    argument: the weight is a function of r = tau_hat / sigma_hat only.
    """
    r = float(r)
    xi = float(xi)
    m = float(m)
    g = float(g)
    if m < 1.0:
        raise ValueError(f"m must be at least 1, got {m!r}")
    if m + g <= 0.0:
        raise ValueError(f"prior family requires m + g > 0, got m={m!r}, g={g!r}")
    if not 0.0 <= xi <= 1.0:
        raise ValueError(f"xi must lie in [0, 1], got {xi!r}")
    if xi == 0.0:
        return 0.0
    if xi == 1.0:
        return 1.0
    half_exp = 0.5 * (m + g - 1.0)
    log_k = 0.5 * math.log(2.0 * math.pi) + math.log1p(-xi) - math.log(xi) - half_exp * math.log(m)
    log_odds = log_k + half_exp * math.log(m + r * r)
    return float(special.expit(-log_odds))


def build_posterior(stats: SufficientStats, prior: PriorSpec) -> PosteriorMixture:
    """Marginal posterior of theta as an explicit two-component t mixture.

    For the variance-flat family the components are
    f_{m+1}(theta; mu_1, sigma_1^2(2)) and f_m(theta; theta_hat,
    sigma_hat^2).  For the scale-graded family with exponent g both
    components have m+g-1 degrees of freedom, with scales sigma_1(g)
    and sigma_2(g+1) = sqrt(m/(m+g-1)) sigma_hat.
    """
    theta_hat = stats.theta_hat
    tau_hat = stats.tau_hat
    sigma_hat = stats.sigma_hat
    m = float(stats.m)
    rho = stats.rho
    r = tau_hat / sigma_hat
    mu1 = theta_hat - rho * tau_hat
    one_minus_rho2 = 1.0 - rho * rho

    if prior.family is PriorFamily.SLAB_SPIKE_VARIANCE:
        lam = weight_slab_spike(sigma_hat, r, prior.xi, m)
        scale_spike = math.sqrt(
            (m * sigma_hat**2 + tau_hat**2) * one_minus_rho2 / (m + 1.0)
        )
        spike = TComponent(loc=mu1, scale=scale_spike, dof=m + 1.0)
        slab = TComponent(loc=theta_hat, scale=sigma_hat, dof=m)
    else:
        g = prior.g
        if m + g <= 0.0:
            raise ValueError(f"prior family requires m + g > 0, got m={m!r}, g={g!r}")
        dof = m + g - 1.0
        if dof <= 0.0:
            raise ValueError(
                f"posterior t degrees of freedom m + g - 1 = {dof!r} must be positive"
            )
        lam = weight_scaled(r, prior.xi, m, g)
        scale_spike = math.sqrt((m * sigma_hat**2 + tau_hat**2) * one_minus_rho2 / dof)
        scale_slab = math.sqrt(m / dof) * sigma_hat
        spike = TComponent(loc=mu1, scale=scale_spike, dof=dof)
        slab = TComponent(loc=theta_hat, scale=scale_slab, dof=dof)

    return PosteriorMixture(
        weight_spike=lam,
        comp_spike=spike,
        comp_slab=slab,
        theta_hat=theta_hat,
        sigma_hat=sigma_hat,
    )


def posterior_pdf(mix: PosteriorMixture, theta):
    """Mixture density at theta (scalar or array)."""
    lam = mix.weight_spike
    out = lam * mix.comp_spike.pdf(theta) + (1.0 - lam) * mix.comp_slab.pdf(theta)
    return out if np.ndim(out) else float(out)


def posterior_cdf(mix: PosteriorMixture, theta):
    """Mixture CDF at theta (scalar or array)."""
    lam = mix.weight_spike
    out = lam * mix.comp_spike.cdf(theta) + (1.0 - lam) * mix.comp_slab.cdf(theta)
    return out if np.ndim(out) else float(out)
