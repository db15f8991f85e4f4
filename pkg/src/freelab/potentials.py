"""External-field potentials and convex-duality operations.

A :class:`Potential` is a vectorized scalar field on an interval domain,
extended by +infinity outside.  Factories certify convexity and confinement
growth; combinators (shift, tilt, Moreau-Yosida, Legendre transform) carry
the certificates along analytically where possible and re-probe otherwise.

The numerical Legendre transform walks a monotone argmax pointer along a
fixed evaluation grid and then polishes the maximizer inside the bracketing
cell by golden-section search, so conjugate values are accurate far beyond
grid resolution and the envelope derivative comes for free.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "Potential",
    "quadratic",
    "quartic",
    "polynomial_even",
    "abs_potential",
    "arcsine_indicator",
    "linear_halfline",
    "table_potential",
    "shift_potential",
    "tilt_linear",
    "moreau_yosida",
    "legendre_transform",
    "fenchel_young_gap",
]

SCAN_BOX = 64.0
SCAN_POINTS = 16385
_FD_STEP = 1e-6


@dataclass(frozen=True, eq=False)
class Potential:
    """Scalar potential with convexity and growth certificates.

    Attributes
    ----------
    fn : callable
        Vectorized evaluation on the domain; +inf outside.
    deriv : callable or None
        Vectorized derivative where available; finite differences otherwise.
    is_convex : bool
        Certificate that the potential is convex on its domain.
    growth_ok : bool
        Certificate that ``u(x) - 2 log|x|`` diverges, so the associated
        variational problems are well posed.
    """

    fn: Callable
    deriv: Callable | None
    domain_lo: float
    domain_hi: float
    is_convex: bool
    growth_ok: bool
    label: str

    def value(self, x):
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        inside = (arr >= self.domain_lo) & (arr <= self.domain_hi)
        out = np.full(arr.shape, np.inf)
        if np.any(inside):
            out[inside] = np.asarray(self.fn(arr[inside]), dtype=float)
        return out if np.ndim(x) else float(out[0])

    def d(self, x):
        """Derivative, by finite differences when no closed form exists."""
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        if self.deriv is not None:
            out = np.asarray(self.deriv(arr), dtype=float)
        else:
            h = _FD_STEP * (1.0 + np.abs(arr))
            lo = np.maximum(arr - h, self.domain_lo)
            hi = np.minimum(arr + h, self.domain_hi)
            width = np.maximum(hi - lo, 1e-300)
            out = (self.value(hi) - self.value(lo)) / width
        return out if np.ndim(x) else float(out[0])

    @property
    def bounded_domain(self) -> bool:
        return np.isfinite(self.domain_lo) and np.isfinite(self.domain_hi)


def _certify(fn, dlo, dhi):
    """Probe convexity and confinement growth on a deterministic grid."""
    lo = max(dlo, -32.0)
    hi = min(dhi, 32.0)
    if not hi > lo:
        raise InvalidInputError("potential domain too small to certify")
    xs = np.linspace(lo, hi, 4097)
    vs = np.asarray(fn(xs), dtype=float)
    if not np.all(np.isfinite(vs)):
        raise InvalidInputError("potential must be finite on its domain")
    d2 = vs[:-2] - 2.0 * vs[1:-1] + vs[2:]
    scale = 1.0 + np.max(np.abs(vs))
    convex = bool(d2.min() >= -1e-8 * scale)
    if np.isfinite(dlo) and np.isfinite(dhi):
        growth = True  # compact domain confines by itself
    else:
        ts = np.array([50.0, 500.0, 5000.0])
        vals = []
        for t in ts:
            cand = [fn(np.array([s]))[0] for s in (t, -t)
                    if dlo <= s <= dhi]
            vals.append(min(cand) - 2.0 * np.log(t))
        growth = bool(vals[0] < vals[1] < vals[2] and vals[2] > vs.min() + 20.0)
    return convex, growth


def quadratic(c: float = 1.0) -> Potential:
    """u(x) = c x^2 / 2."""
    return Potential(
        fn=lambda x: 0.5 * c * x * x,
        deriv=lambda x: c * x,
        domain_lo=-np.inf, domain_hi=np.inf,
        is_convex=c >= 0, growth_ok=c > 0,
        label=f"quadratic(c={c:g})",
    )


def quartic(g: float = 0.25) -> Potential:
    """u(x) = g x^4."""
    return Potential(
        fn=lambda x: g * x ** 4,
        deriv=lambda x: 4.0 * g * x ** 3,
        domain_lo=-np.inf, domain_hi=np.inf,
        is_convex=g >= 0, growth_ok=g > 0,
        label=f"quartic(g={g:g})",
    )


def polynomial_even(c2: float, c4: float) -> Potential:
    """u(x) = c2 x^2 + c4 x^4."""
    return Potential(
        fn=lambda x: c2 * x * x + c4 * x ** 4,
        deriv=lambda x: 2.0 * c2 * x + 4.0 * c4 * x ** 3,
        domain_lo=-np.inf, domain_hi=np.inf,
        is_convex=c2 >= 0 and c4 >= 0,
        growth_ok=c4 > 0 or (c4 == 0 and c2 > 0),
        label=f"poly(c2={c2:g},c4={c4:g})",
    )


def abs_potential() -> Potential:
    """u(x) = |x|."""
    return Potential(
        fn=np.abs,
        deriv=np.sign,
        domain_lo=-np.inf, domain_hi=np.inf,
        is_convex=True, growth_ok=True,
        label="abs",
    )


def arcsine_indicator(radius: float = 1.0) -> Potential:
    """Flat well: log(2/radius) on [-radius, radius], +inf outside.

    The constant makes the well its own variational ground level, matching
    the convention used for the hard-wall equilibrium examples.
    """
    if radius <= 0:
        raise InvalidInputError("radius must be positive")
    level = float(np.log(2.0 / radius))
    return Potential(
        fn=lambda x: np.full(np.shape(x), level),
        deriv=lambda x: np.zeros(np.shape(x)),
        domain_lo=-radius, domain_hi=radius,
        is_convex=True, growth_ok=True,
        label=f"arcsine(radius={radius:g})",
    )


def linear_halfline(slope: float = 1.0) -> Potential:
    """u(x) = slope * x confined to [0, inf)."""
    if slope <= 0:
        raise InvalidInputError("halfline slope must be positive")
    return Potential(
        fn=lambda x: slope * np.asarray(x, dtype=float),
        deriv=lambda x: np.full(np.shape(x), float(slope)),
        domain_lo=0.0, domain_hi=np.inf,
        is_convex=True, growth_ok=True,
        label=f"halfline(slope={slope:g})",
    )


def table_potential(xs, us, label: str = "table") -> Potential:
    """Piecewise-linear potential from samples; +inf outside the table range."""
    xs = np.asarray(xs, dtype=float)
    us = np.asarray(us, dtype=float)
    if xs.ndim != 1 or xs.shape != us.shape or xs.size < 3:
        raise InvalidInputError("potential table needs matching 1-d arrays")
    if np.any(np.diff(xs) <= 0):
        raise InvalidInputError("potential table grid must be ascending")
    slopes = np.diff(us) / np.diff(xs)
    mids = 0.5 * (xs[1:] + xs[:-1])
    fn = lambda x: np.interp(x, xs, us)
    deriv = lambda x: np.interp(x, mids, slopes)
    convex, growth = _certify(fn, xs[0], xs[-1])
    return Potential(fn, deriv, float(xs[0]), float(xs[-1]), convex, growth, label)


def shift_potential(u: Potential, z: float) -> Potential:
    """x -> u(x - z): the graph moves right by z."""
    return Potential(
        fn=lambda x: u.fn(np.asarray(x) - z),
        deriv=None if u.deriv is None else (lambda x: u.deriv(np.asarray(x) - z)),
        domain_lo=u.domain_lo + z, domain_hi=u.domain_hi + z,
        is_convex=u.is_convex, growth_ok=u.growth_ok,
        label=f"shifted({u.label},z={z:g})",
    )


def tilt_linear(u: Potential, lam: float) -> Potential:
    """x -> u(x) + lam x.  Convexity survives; growth is re-probed."""
    fn = lambda x: u.fn(x) + lam * np.asarray(x)
    if u.bounded_domain:
        growth = True
    else:
        # the tilt can destroy confinement (e.g. |x| - x); re-check
        try:
            _, growth = _certify(lambda x: u.value(x) + lam * np.asarray(x),
                                 u.domain_lo, u.domain_hi)
        except InvalidInputError:
            growth = False
    return Potential(
        fn=fn,
        deriv=None if u.deriv is None else (lambda x: u.deriv(x) + lam),
        domain_lo=u.domain_lo, domain_hi=u.domain_hi,
        is_convex=u.is_convex, growth_ok=growth,
        label=f"tilted({u.label},lam={lam:g})",
    )


def _eval_grid(u: Potential, box: float = SCAN_BOX, n: int = SCAN_POINTS):
    lo = max(u.domain_lo, -box)
    hi = min(u.domain_hi, box)
    if not hi > lo:
        raise InvalidInputError("potential domain does not meet the scan box")
    xs = np.linspace(lo, hi, n)
    us = np.asarray(u.value(xs), dtype=float)
    keep = np.isfinite(us)
    if keep.sum() < 8:
        raise InvalidInputError("potential is almost nowhere finite in the scan box")
    return xs[keep], us[keep]


def _golden(fn, lo, hi, iters: int = 48, mode: str = "max"):
    """Vectorized golden-section optimization on per-component brackets."""
    ratio = (np.sqrt(5.0) - 1.0) / 2.0
    sign = 1.0 if mode == "max" else -1.0
    a = lo.astype(float).copy()
    b = hi.astype(float).copy()
    for _ in range(iters):
        c = b - ratio * (b - a)
        d = a + ratio * (b - a)
        right = sign * fn(d) > sign * fn(c)
        a = np.where(right, c, a)
        b = np.where(right, b, d)
    x = 0.5 * (a + b)
    return x, fn(x)


def _monotone_argmax(ys: np.ndarray, xs: np.ndarray, us: np.ndarray) -> np.ndarray:
    """Argmax indices of x*y - u(x) for ascending y, single left-to-right pass.

    Relies on the maximizer being nondecreasing in y, which holds whenever u
    is convex.  Ties resolve to the smallest maximizer.
    """
    idx = np.empty(ys.size, dtype=np.intp)
    j = 0
    m = xs.size
    for k in range(ys.size):
        y = ys[k]
        best = xs[j] * y - us[j]
        while j + 1 < m:
            cand = xs[j + 1] * y - us[j + 1]
            if cand > best:
                best = cand
                j += 1
            else:
                break
        idx[k] = j
    return idx


def _conjugate_eval(u: Potential, ys, xs, us):
    """Value and maximizer of the conjugate at ys (any shape)."""
    ys = np.asarray(ys, dtype=float)
    flat = ys.ravel()
    order = np.argsort(flat, kind="stable")
    sorted_ys = flat[order]
    if u.is_convex:
        idx = _monotone_argmax(sorted_ys, xs, us)
    else:
        idx = np.empty(sorted_ys.size, dtype=np.intp)
        chunk = 2048
        for s in range(0, sorted_ys.size, chunk):
            block = sorted_ys[s:s + chunk, None]
            idx[s:s + chunk] = np.argmax(block * xs[None, :] - us[None, :], axis=1)
    lo = xs[np.maximum(idx - 1, 0)]
    hi = xs[np.minimum(idx + 1, xs.size - 1)]
    score = lambda x: x * sorted_ys - u.value(x)
    arg, val = _golden(score, lo, hi, mode="max")
    # keep the grid point when the polish landed on a wall plateau
    grid_val = xs[idx] * sorted_ys - us[idx]
    take_grid = grid_val >= val
    arg = np.where(take_grid, xs[idx], arg)
    val = np.maximum(val, grid_val)
    out_val = np.empty_like(flat)
    out_arg = np.empty_like(flat)
    out_val[order] = val
    out_arg[order] = arg
    return out_val.reshape(ys.shape), out_arg.reshape(ys.shape)


def legendre_transform(u: Potential) -> Potential:
    """Convex conjugate u*(y) = sup_x [x y - u(x)].

    The supremum is scanned over a fixed grid on the domain intersected with
    ``[-SCAN_BOX, SCAN_BOX]`` and polished inside the bracketing cell.  When
    the domain of u is unbounded the conjugate is only finite for slopes u
    actually attains; outside the attained-slope window the supremum escapes
    the scan box and the conjugate reports +inf.
    """
    xs, us = _eval_grid(u)
    if u.bounded_domain:
        conj_lo, conj_hi = -np.inf, np.inf
    else:
        s_lo = (us[1] - us[0]) / (xs[1] - xs[0])
        s_hi = (us[-1] - us[-2]) / (xs[-1] - xs[-2])
        pad = 1e-9 * (1.0 + abs(s_lo) + abs(s_hi))
        conj_lo, conj_hi = s_lo - pad, s_hi + pad

    def fn(y):
        return _conjugate_eval(u, y, xs, us)[0]

    def deriv(y):
        return _conjugate_eval(u, y, xs, us)[1]

    probe = Potential(fn, deriv, conj_lo, conj_hi, True, False, "probe")
    lo = max(conj_lo, -32.0)
    hi = min(conj_hi, 32.0)
    if hi > lo:
        _, growth = _certify(lambda t: probe.value(t), conj_lo, conj_hi)
    else:
        growth = False
    return Potential(fn, deriv, conj_lo, conj_hi, True, growth,
                     label=f"legendre({u.label})")


def moreau_yosida(u: Potential, lam: float) -> Potential:
    """Moreau-Yosida regularization with parameter lam > 0.

    value(x) = min_y [ u(y) + (y - x)^2 / (2 lam) ]; the derivative is the
    proximal displacement (x - prox(x)) / lam.
    """
    if lam <= 0:
        raise InvalidInputError("moreau_yosida parameter must be positive")
    xs, us = _eval_grid(u)

    def _prox(ts):
        ts = np.asarray(ts, dtype=float)
        flat = ts.ravel()
        order = np.argsort(flat, kind="stable")
        st = flat[order]
        idx = np.empty(st.size, dtype=np.intp)
        j = 0
        for k in range(st.size):
            t = st[k]
            best = us[j] + (xs[j] - t) ** 2 / (2.0 * lam)
            while j + 1 < xs.size:
                cand = us[j + 1] + (xs[j + 1] - t) ** 2 / (2.0 * lam)
                if cand < best:
                    best = cand
                    j += 1
                else:
                    break
            idx[k] = j
        lo = xs[np.maximum(idx - 1, 0)]
        hi = xs[np.minimum(idx + 1, xs.size - 1)]
        score = lambda x: u.value(x) + (x - st) ** 2 / (2.0 * lam)
        arg, val = _golden(score, lo, hi, mode="min")
        grid_val = us[idx] + (xs[idx] - st) ** 2 / (2.0 * lam)
        take_grid = grid_val <= val
        arg = np.where(take_grid, xs[idx], arg)
        val = np.minimum(val, grid_val)
        o_arg = np.empty_like(flat)
        o_val = np.empty_like(flat)
        o_arg[order] = arg
        o_val[order] = val
        return o_arg.reshape(ts.shape), o_val.reshape(ts.shape)

    fn = lambda x: _prox(x)[1]
    deriv = lambda x: (np.asarray(x, dtype=float) - _prox(x)[0]) / lam
    convex = u.is_convex
    _, growth = _certify(fn, -np.inf, np.inf)
    return Potential(fn, deriv, -np.inf, np.inf, convex, growth,
                     label=f"my({u.label},lam={lam:g})")


def fenchel_young_gap(f: Potential, g: Potential, box: float, n: int = 256) -> float:
    """Minimum of f(x) + g(y) - x y over an n-by-n lattice on [-box, box]^2.

    Lattice points outside either domain contribute +inf and never win the
    minimum; a nonnegative result certifies the duality hypothesis at lattice
    resolution.
    """
    xs = np.linspace(max(f.domain_lo, -box), min(f.domain_hi, box), n)
    ys = np.linspace(max(g.domain_lo, -box), min(g.domain_hi, box), n)
    if xs[-1] <= xs[0] or ys[-1] <= ys[0]:
        raise InvalidInputError("lattice does not meet the potential domains")
    fv = f.value(xs)
    gv = g.value(ys)
    gap = fv[:, None] + gv[None, :] - xs[:, None] * ys[None, :]
    return float(np.min(gap))
