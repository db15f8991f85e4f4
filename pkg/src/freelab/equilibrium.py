"""Equilibrium measures, free pressure, and the moment map.

The one-cut solver works in the angle variable of the support interval
[m - r, m + r]: writing x = m + r cos(theta), every equilibrium quantity
reduces to the Chebyshev moments tau_k of the solved measure.  The CDF is

    G(theta) = theta/pi + (2/pi) sum_k (tau_k / k) sin(k theta)

measured from the right edge, the density in theta is
(1 + 2 sum tau_k cos(k theta))/pi, and the logarithmic energy is
log(r/2) - 2 sum tau_k^2 / k.  Soft edges determine (m, r) through the two
endpoint conditions of u'; hard edges pin an endpoint at the domain wall and
the one remaining soft-edge condition (if any) is solved by bracketing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dct, dst
from scipy.optimize import brentq

from ._grids import DEFAULT_NODES, chebyshev_angles
from .errors import InvalidInputError, MultiCutError, SolverError
from .logpotential import (
    HALF_LOG_2PI,
    chi,
    euler_lagrange_residual,
    integrate_potential,
    schwinger_dyson_residual,
)
from .measures import GridMeasure, from_quantile_table, ks_distance, pushforward_monotone
from .potentials import Potential, table_potential, tilt_linear

__all__ = [
    "SolverSettings",
    "EquilibriumResult",
    "CenteringShift",
    "solve_equilibrium",
    "free_pressure",
    "entropy_duality_check",
    "moment_map",
    "find_centering_shift",
]

_CDF_GRID = 32768
_NEGATIVITY_SLACK = 5e-3


@dataclass(frozen=True)
class SolverSettings:
    nodes: int = DEFAULT_NODES      # Chebyshev angles per solve
    tol: float = 1e-11              # endpoint-condition residual target
    max_iter: int = 60
    allow_nonconvex: bool = False   # accept possible non-uniqueness
    map_iterations: int = 48        # moment-map fixed-point budget
    map_tolerance: float = 1e-5     # moment-map pushforward KS target


@dataclass(frozen=True)
class EquilibriumResult:
    measure: GridMeasure
    support_lo: float
    support_hi: float
    el_constant: float
    el_residual: float
    sd_residual: float
    pressure: float
    iterations: int
    method: str
    converged: bool
    energy: float            # log-energy of the measure, from the tau series
    potential_moment: float  # int u d(nu)


@dataclass(frozen=True)
class CenteringShift:
    found: bool
    lam: float | None
    curve: tuple  # sampled (lambda, barycenter) pairs


def _tau_soft(u: Potential, m: float, r: float, theta: np.ndarray):
    """Chebyshev moments for two soft edges, plus the endpoint residuals."""
    k = theta.size
    f = u.d(m + r * np.cos(theta))
    y = dct(f, type=2)
    c = y / k
    c[0] = 0.0  # the constant mode never enters the density
    res1 = y[0] / (2.0 * k)           # mean of u' against the angle grid
    res2 = c[1] - 4.0 / r
    tau = np.zeros(k)
    tau[1:k - 1] = (r / 8.0) * (c[2:] - c[:k - 2])
    return tau, res1, res2


def _tau_wall(u: Potential, m: float, r: float, theta: np.ndarray):
    """Chebyshev moments when the edges are pinned at walls."""
    k = theta.size
    f = u.d(m + r * np.cos(theta))
    e = dst(f * np.sin(theta), type=2) / k
    tau = np.zeros(k)
    tau[1:] = -(r / 4.0) * e[:k - 1]
    return tau


def _edge_values(tau: np.ndarray):
    """Density bracket 1 + 2 sum tau_k cos(k theta) at theta = 0 and pi."""
    signs = np.ones(tau.size)
    signs[1::2] = -1.0
    right = 1.0 + 2.0 * float(np.sum(tau[1:]))
    left = 1.0 + 2.0 * float(np.sum(tau[1:] * signs[1:]))
    return left, right


def _theta_density(tau: np.ndarray) -> np.ndarray:
    """G'(theta) at the Chebyshev angles."""
    x = tau.copy()
    x[0] = 1.0
    return dct(x, type=3) / np.pi


def _cdf_table(m: float, r: float, tau: np.ndarray):
    """Quantile table (ps ascending, xs ascending) from the tau series."""
    mm = _CDF_GRID
    coeff = np.zeros(mm - 1)
    kk = min(tau.size - 1, mm - 1)
    ks = np.arange(1, kk + 1, dtype=float)
    coeff[:kk] = tau[1:kk + 1] / ks
    series = dst(coeff, type=1) / 2.0
    j = np.arange(1, mm)
    g = j / mm + (2.0 / np.pi) * series
    theta = np.linspace(0.0, np.pi, mm + 1)

    # the uniform grid underresolves the CDF within the outermost panels
    # when an edge is hard; splice in quadratically clustered points there
    edge = 8.0 * np.pi / mm * (0.5 * (1.0 - np.cos(np.linspace(0.0, np.pi, 257))))
    t_extra = np.concatenate([edge[1:-1], np.pi - edge[1:-1]])
    g_extra = t_extra / np.pi + (2.0 / np.pi) * (
        np.sin(np.outer(t_extra, ks)) @ coeff[:kk])
    theta = np.concatenate([theta, t_extra])
    g = np.concatenate([[0.0], g, [1.0], g_extra])
    order = np.argsort(theta)
    theta, g = theta[order], g[order]

    g = np.maximum.accumulate(np.clip(g, 0.0, 1.0))
    g[-1] = 1.0
    xs = m + r * np.cos(theta)
    ps = (1.0 - g)[::-1]
    xs = xs[::-1]
    ps = np.maximum.accumulate(ps)
    ps[0], ps[-1] = 0.0, 1.0
    # series wiggles near a kink can clip whole runs to 0 or 1; keep one
    # row per quantile so calls downstream see a strictly increasing table
    i0 = int(np.searchsorted(ps, 0.0, side="right")) - 1
    i1 = int(np.searchsorted(ps, 1.0, side="left"))
    ps, xs = ps[i0:i1 + 1], xs[i0:i1 + 1]
    keep = np.concatenate([[True], np.diff(ps) > 0.0])
    return ps[keep], xs[keep]


def _laplace_seed(u: Potential):
    lo = max(u.domain_lo, -32.0)
    hi = min(u.domain_hi, 32.0)
    xs = np.linspace(lo, hi, 8193)
    vs = u.value(xs)
    i = int(np.argmin(vs))
    x0 = xs[i]
    h = xs[1] - xs[0]
    if 0 < i < xs.size - 1:
        curv = (vs[i - 1] - 2.0 * vs[i] + vs[i + 1]) / (h * h)
    else:
        curv = 1.0
    curv = max(curv, 1e-6)
    r0 = float(np.clip(2.0 / np.sqrt(curv), 1e-3, 30.0))
    return float(x0), r0


def _fits_inside(u: Potential, m: float, r: float) -> bool:
    margin = 1e-7 * (1.0 + r)
    return (m - r) > u.domain_lo + margin and (m + r) < u.domain_hi - margin


def _newton_soft(u: Potential, theta: np.ndarray, cfg: SolverSettings):
    m, r = _laplace_seed(u)

    def residual(mv, rv):
        if rv <= 0 or mv - rv <= u.domain_lo or mv + rv >= u.domain_hi:
            return None
        _, r1, r2 = _tau_soft(u, mv, rv, theta)
        return np.array([r1, r2])

    res = residual(m, r)
    if res is None:
        raise SolverError("soft-edge seed escapes the potential domain")
    for it in range(1, cfg.max_iter + 1):
        nrm = np.max(np.abs(res))
        if nrm < cfg.tol:
            return m, r, it
        hm = 1e-7 * (1.0 + abs(m))
        hr = 1e-7 * (1.0 + r)
        jm = residual(m + hm, r)
        jr = residual(m, r + hr)
        if jm is None or jr is None:
            raise SolverError("soft-edge iteration escaped the potential domain")
        jac = np.column_stack([(jm - res) / hm, (jr - res) / hr])
        # lstsq instead of solve: piecewise-constant u' (kinks) zeroes the
        # m-column of the finite-difference Jacobian
        step = np.linalg.lstsq(jac, -res, rcond=None)[0]
        moved = np.all(np.isfinite(step)) and np.max(np.abs(step)) >= 1e-16
        if moved:
            scale = 1.0
            for _ in range(30):
                cand = residual(m + scale * step[0], r + scale * step[1])
                if cand is not None and np.max(np.abs(cand)) < nrm:
                    m, r = m + scale * step[0], r + scale * step[1]
                    res = cand
                    break
                scale *= 0.5
            else:
                moved = False
        if not moved:
            # scanned or tabulated potentials carry ~1e-9 derivative noise;
            # stalling inside that floor is convergence for any practical
            # tolerance, stalling above it is a genuine failure
            if nrm < max(1e3 * cfg.tol, 1e-8):
                return m, r, it
            raise SolverError("endpoint Newton stalled")
    raise SolverError("endpoint Newton did not converge")


def _bracket_root(fn, lo: float, hi: float, samples: int = 48):
    ts = np.linspace(lo, hi, samples)
    vals = [fn(t) for t in ts]
    for a, b, va, vb in zip(ts[:-1], ts[1:], vals[:-1], vals[1:]):
        if np.isfinite(va) and np.isfinite(vb) and va * vb <= 0.0:
            return float(brentq(fn, a, b, xtol=1e-13, rtol=8.9e-16))
    return None


def _assemble(u, m, r, tau, method, iterations, cfg) -> EquilibriumResult:
    dens = _theta_density(tau)
    if dens.min() < -_NEGATIVITY_SLACK * dens.max():
        raise MultiCutError(
            "equilibrium density is negative on the one-cut ansatz; "
            "the support is likely disconnected")
    ps, xs = _cdf_table(m, r, tau)
    measure = from_quantile_table(ps, xs, label=f"equilibrium({u.label})")
    ks = np.arange(1, tau.size)
    energy = float(np.log(r / 2.0) - 2.0 * np.sum(tau[1:] ** 2 / ks))
    theta = chebyshev_angles(tau.size)
    pot_vals = u.value(m + r * np.cos(theta))
    pot_moment = float((np.pi / tau.size) * np.sum(pot_vals * dens))
    pressure = energy + 0.75 + HALF_LOG_2PI - pot_moment
    el_constant = pot_moment - 2.0 * energy
    el_res = euler_lagrange_residual(measure, u)
    sd_res = schwinger_dyson_residual(measure, u)
    return EquilibriumResult(
        measure=measure, support_lo=float(m - r), support_hi=float(m + r),
        el_constant=el_constant, el_residual=float(el_res),
        sd_residual=float(sd_res), pressure=float(pressure),
        iterations=iterations, method=method, converged=True,
        energy=energy, potential_moment=pot_moment)


def solve_equilibrium(u: Potential, cfg: SolverSettings | None = None) -> EquilibriumResult:
    """Equilibrium measure of the potential u on its domain.

    Soft edges are tried first; when the domain is an interval and the soft
    support would cross a wall, the walled configurations are solved
    instead.  A one-cut density that still comes out negative raises
    :class:`MultiCutError`.
    """
    cfg = cfg or SolverSettings()
    if not u.growth_ok:
        raise InvalidInputError(
            f"potential {u.label} lacks the confinement growth certificate")
    if not u.is_convex and not cfg.allow_nonconvex:
        raise InvalidInputError(
            "non-convex potential: set allow_nonconvex to accept "
            "possible non-uniqueness of the one-cut solution")
    theta = chebyshev_angles(cfg.nodes)

    soft_error = None
    try:
        m, r, iters = _newton_soft(u, theta, cfg)
        if _fits_inside(u, m, r):
            tau, _, _ = _tau_soft(u, m, r, theta)
            return _assemble(u, m, r, tau, "soft", iters, cfg)
    except SolverError as exc:
        soft_error = exc

    if not (np.isfinite(u.domain_lo) or np.isfinite(u.domain_hi)):
        raise soft_error or SolverError("one-cut ansatz failed")

    scale = 1.0 + abs(u.domain_lo if np.isfinite(u.domain_lo) else 0.0) \
        + abs(u.domain_hi if np.isfinite(u.domain_hi) else 0.0)
    eps = 1e-9 * scale

    # one wall pinned, the other edge soft: the free endpoint solves the
    # remaining bracket condition
    if np.isfinite(u.domain_lo):
        a = u.domain_lo

        def right_soft(b):
            mv, rv = 0.5 * (a + b), 0.5 * (b - a)
            tau = _tau_wall(u, mv, rv, theta)
            return _edge_values(tau)[1]

        hi = u.domain_hi if np.isfinite(u.domain_hi) else a + 8.0 * (
            _laplace_seed(u)[1] + 1.0) + 64.0
        b = _bracket_root(right_soft, a + eps + 1e-4, hi)
        if b is not None and (not np.isfinite(u.domain_hi) or b < u.domain_hi - eps):
            mv, rv = 0.5 * (a + b), 0.5 * (b - a)
            tau = _tau_wall(u, mv, rv, theta)
            left, _ = _edge_values(tau)
            if left > -_NEGATIVITY_SLACK:
                return _assemble(u, mv, rv, tau, "wall-left", 1, cfg)

    if np.isfinite(u.domain_hi):
        b = u.domain_hi

        def left_soft(a):
            mv, rv = 0.5 * (a + b), 0.5 * (b - a)
            tau = _tau_wall(u, mv, rv, theta)
            return _edge_values(tau)[0]

        lo = u.domain_lo if np.isfinite(u.domain_lo) else b - 8.0 * (
            _laplace_seed(u)[1] + 1.0) - 64.0
        a = _bracket_root(left_soft, lo, b - eps - 1e-4)
        if a is not None and (not np.isfinite(u.domain_lo) or a > u.domain_lo + eps):
            mv, rv = 0.5 * (a + b), 0.5 * (b - a)
            tau = _tau_wall(u, mv, rv, theta)
            _, right = _edge_values(tau)
            if right > -_NEGATIVITY_SLACK:
                return _assemble(u, mv, rv, tau, "wall-right", 1, cfg)

    if np.isfinite(u.domain_lo) and np.isfinite(u.domain_hi):
        mv = 0.5 * (u.domain_lo + u.domain_hi)
        rv = 0.5 * (u.domain_hi - u.domain_lo)
        tau = _tau_wall(u, mv, rv, theta)
        left, right = _edge_values(tau)
        if left > -_NEGATIVITY_SLACK and right > -_NEGATIVITY_SLACK:
            return _assemble(u, mv, rv, tau, "wall-both", 1, cfg)

    raise soft_error or SolverError(
        "no edge configuration yields a nonnegative one-cut density")


def free_pressure(u: Potential, cfg: SolverSettings | None = None) -> float:
    """chi_u at the equilibrium of u; invariant under shifting the potential."""
    return solve_equilibrium(u, cfg).pressure


def entropy_duality_check(mu: GridMeasure, potential_family, cfg: SolverSettings | None = None) -> float:
    """min over the family of mu(h) + pressure(h), minus chi(mu).

    Nonnegative up to tolerance, and near zero when the family contains the
    potential whose equilibrium is mu.
    """
    best = np.inf
    for h in potential_family:
        val = integrate_potential(mu, h) + free_pressure(h, cfg)
        best = min(best, val)
    return float(best - chi(mu).value)


def moment_map(mu: GridMeasure, cfg: SolverSettings | None = None):
    """Convex potential u with mu = (u')# nu_u, and the solved nu_u.

    Fixed-point iteration on u' = Q_mu o F_nu; the additive constant of u is
    set by u(barycenter of nu_u) = 0.
    """
    cfg = cfg or SolverSettings()
    bar = mu.barycenter()
    if abs(bar) > 1e-8:
        raise InvalidInputError("moment map needs a centered measure")
    if mu.support_hi - mu.support_lo < 1e-10:
        raise InvalidInputError("moment map is undefined at a point mass")

    box = max(8.0, 2.0 * mu.radius + 4.0)
    grid = np.linspace(-box, box, 32769)

    nu_meas = None
    u = None
    defect = np.inf
    for _ in range(cfg.map_iterations):
        if nu_meas is None:
            slopes = np.clip(grid, mu.support_lo, mu.support_hi)  # start from identity transport
        else:
            slopes = mu.quantile(nu_meas.cdf(grid))
        slopes = np.maximum.accumulate(slopes)
        us = np.concatenate([[0.0], np.cumsum(
            0.5 * (slopes[1:] + slopes[:-1]) * np.diff(grid))])
        u = table_potential(grid, us, label="moment-map")
        result = solve_equilibrium(u, cfg)
        nu_meas = result.measure
        push = pushforward_monotone(
            nu_meas, lambda x: np.interp(x, grid, slopes), label="u'#nu")
        defect = ks_distance(push, mu)
        if defect < cfg.map_tolerance:
            break
    else:
        raise SolverError(
            f"moment-map iteration stalled at pushforward defect {defect:.3g}")

    # re-anchor u(bar nu) = 0
    shift = np.interp(nu_meas.barycenter(), grid, us)
    u = table_potential(grid, us - shift, label=f"moment-map({mu.label})")
    result = solve_equilibrium(u, cfg)
    return u, result


def find_centering_shift(f: Potential, search_box=(-8.0, 8.0),
                         cfg: SolverSettings | None = None) -> CenteringShift:
    """lambda making the equilibrium of f + lambda id centered, if the
    barycenter changes sign inside the box."""
    if not f.growth_ok:
        raise InvalidInputError("centering shift needs the growth certificate")
    cfg = cfg or SolverSettings()
    curve = []

    def bar(lam: float) -> float:
        val = solve_equilibrium(tilt_linear(f, lam), cfg).measure.barycenter()
        curve.append((float(lam), float(val)))
        return val

    lo, hi = float(search_box[0]), float(search_box[1])
    ts = np.linspace(lo, hi, 9)
    vals = [bar(t) for t in ts]
    for a, b, va, vb in zip(ts[:-1], ts[1:], vals[:-1], vals[1:]):
        if va * vb <= 0.0:
            lam = float(brentq(bar, a, b, xtol=1e-10))
            return CenteringShift(found=True, lam=lam, curve=tuple(curve))
    return CenteringShift(found=False, lam=None, curve=tuple(curve))
