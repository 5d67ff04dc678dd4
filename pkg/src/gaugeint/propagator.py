"""Quantum propagators built on the oscillatory gauge-integration engine.

Closed-form free and harmonic kernels, time-sliced kernels with a
potential (iterated one-step damped Fresnel convolutions on a spatial
grid, Toeplitz structure contracted by FFT), the perturbation expansion
in interaction vertices (an exact complex-Gaussian bridge recursion on
polynomial envelopes), and an independent Crank-Nicolson reference
solver.  Units hbar = 1; the particle mass enters every kernel and
defaults to 1.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as _cheb
from numpy.polynomial import polynomial as _poly
from scipy.linalg import solve_banded

from .errors import (
    GridTooCoarseError,
    IntegrandError,
    NoConvergenceError,
)
from .integrate import _neville_at_zero

__all__ = [
    "Potential",
    "PropagatorQuery",
    "SliceGrid",
    "free_kernel",
    "psi0_closed",
    "harmonic_kernel_closed",
    "dispersive_gaussian",
    "psi0_sliced",
    "psi_sliced",
    "perturbation_term",
    "perturbation_partial_sum",
    "free_kernel_semigroup_residual",
    "schrodinger_reference",
    "reference_grid",
]


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Potential:
    """A real potential V(x, t) with a tag naming its analytic family.

    The tag lets oracles use closed forms (zero, constant, harmonic);
    custom potentials carry only their evaluator.  evaluate must accept a
    float ndarray of positions and a single time.
    """

    evaluate: Callable[[np.ndarray, float], np.ndarray]
    analytic_tag: str = "custom"
    constant: float = 0.0
    omega: float = 0.0

    def __post_init__(self) -> None:
        if self.analytic_tag not in ("zero", "constant", "harmonic", "custom"):
            raise ValueError(f"unknown analytic tag {self.analytic_tag!r}")

    @staticmethod
    def zero() -> "Potential":
        return Potential(lambda x, _t: np.zeros_like(np.asarray(x, float)),
                         analytic_tag="zero")

    @staticmethod
    def constant_potential(c: float) -> "Potential":
        c = float(c)
        return Potential(
            lambda x, _t, _c=c: np.full_like(np.asarray(x, float), _c),
            analytic_tag="constant",
            constant=c,
        )

    @staticmethod
    def harmonic(omega: float) -> "Potential":
        omega = float(omega)
        if not omega > 0.0:
            raise ValueError("harmonic frequency must be positive")
        return Potential(
            lambda x, _t, _w=omega: 0.5 * _w * _w * np.square(
                np.asarray(x, float)
            ),
            analytic_tag="harmonic",
            omega=omega,
        )

    @staticmethod
    def custom(func: Callable[[np.ndarray, float], np.ndarray]) -> "Potential":
        return Potential(func, analytic_tag="custom")

    def values(self, x: np.ndarray, t: float) -> np.ndarray:
        xa = np.asarray(x, dtype=float)
        try:
            out = np.asarray(self.evaluate(xa, float(t)), dtype=float)
        except (AssertionError, KeyboardInterrupt, SystemExit):
            raise
        except Exception:
            out = np.array(
                [float(self.evaluate(float(v), float(t))) for v in xa.ravel()]
            ).reshape(xa.shape)
        if out.shape != xa.shape:
            out = np.broadcast_to(out, xa.shape).astype(float)
        if not np.all(np.isfinite(out)):
            raise IntegrandError("potential returned a non-finite value")
        return out


@dataclass(frozen=True)
class PropagatorQuery:
    """A transition-amplitude query from (xi_prime, tau_prime) to (xi, tau)."""

    xi_prime: float
    tau_prime: float
    xi: float
    tau: float
    slices: int = 1
    potential: Potential = field(default_factory=Potential.zero)

    def __post_init__(self) -> None:
        for name in ("xi_prime", "tau_prime", "xi", "tau"):
            v = float(getattr(self, name))
            object.__setattr__(self, name, v)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
        if not self.tau > self.tau_prime:
            raise ValueError("tau must exceed tau_prime")
        if not (isinstance(self.slices, int) and self.slices >= 1):
            raise ValueError("slices must be an integer >= 1")

    @property
    def duration(self) -> float:
        return self.tau - self.tau_prime


@dataclass(frozen=True)
class SliceGrid:
    """Discretization controls for sliced kernels.

    extent: half-width R of the spatial window per intermediate slice;
    points: grid points per slice (even, >= 8); damping: the smallest
    increment-damping epsilon (the extrapolation ladder uses eps, 2 eps,
    4 eps so the most weakly damped member is exactly this value).
    """

    extent: float
    points: int
    damping: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.extent) and self.extent > 0.0):
            raise ValueError("extent must be a positive real")
        if not (isinstance(self.points, int) and self.points >= 8):
            raise ValueError("points must be an integer >= 8")
        if self.points % 2:
            raise ValueError("points must be even")
        if not (math.isfinite(self.damping) and self.damping > 0.0):
            raise ValueError("damping must be a positive real")


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def free_kernel(displacement, dt: float, *, mass: float = 1.0) -> complex:
    """Free one-step kernel sqrt(m/(2 pi i dt)) e^{i m u^2 / (2 dt)}.

    Vectorized over the displacement; principal square root.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    if not mass > 0.0:
        raise ValueError("mass must be positive")
    u = np.asarray(displacement, dtype=float)
    pref = np.sqrt(mass / (2j * math.pi * dt))
    out = pref * np.exp(0.5j * mass * np.square(u) / dt)
    if out.shape == ():
        return complex(out)
    return out


def psi0_closed(q: PropagatorQuery, *, mass: float = 1.0) -> complex:
    """Free propagator between the query endpoints, closed form."""
    return complex(free_kernel(q.xi - q.xi_prime, q.duration, mass=mass))


def harmonic_kernel_closed(
    q: PropagatorQuery, omega: float, *, mass: float = 1.0
) -> complex:
    """Harmonic-oscillator kernel for 0 < omega * duration < pi.

    sqrt(m w / (2 pi i sin w T)) * exp(i m w ((xi^2 + xi'^2) cos wT
    - 2 xi xi') / (2 sin wT)), principal branch.
    """
    omega = float(omega)
    if not omega > 0.0:
        raise ValueError("omega must be positive")
    wt = omega * q.duration
    if not 0.0 < wt < math.pi:
        raise ValueError("queries are restricted to 0 < omega*duration < pi")
    s, c = math.sin(wt), math.cos(wt)
    pref = np.sqrt(mass * omega / (2j * math.pi * s))
    phase = (
        0.5j * mass * omega
        * ((q.xi**2 + q.xi_prime**2) * c - 2.0 * q.xi * q.xi_prime)
        / s
    )
    return complex(pref * np.exp(phase))


def dispersive_gaussian(
    x, t: float, sigma: float, *, mass: float = 1.0
):
    """Free evolution of the unit-norm Gaussian (2 pi s^2)^{-1/4} e^{-x^2/(4 s^2)}.

    Closed form obtained by completing the square against the free
    kernel; reduces to the initial packet at t = 0.
    """
    if not sigma > 0.0:
        raise ValueError("sigma must be positive")
    xa = np.asarray(x, dtype=float)
    norm = (2.0 * math.pi * sigma * sigma) ** -0.25
    if t == 0.0:
        out = norm * np.exp(-np.square(xa) / (4.0 * sigma * sigma))
    else:
        a = 0.25 / sigma**2 - 0.5j * mass / t
        pref = np.sqrt(mass / (2j * math.pi * t)) * norm * np.sqrt(math.pi / a)
        expo = 0.5j * mass * np.square(xa) / t - np.square(
            mass * xa / t
        ) / (4.0 * a)
        out = pref * np.exp(expo)
    if out.shape == ():
        return complex(out)
    return out


# ---------------------------------------------------------------------------
# time-sliced kernels
# ---------------------------------------------------------------------------


_ROW_CHUNK = 256  # output rows per moment block (bounds peak memory)


def _bridge_rows(alpha: complex, centers: np.ndarray, edges: np.ndarray):
    """Filon weight rows for Int e^{alpha (z - c_q)^2} g(z) dz, one row per c_q.

    Same cubic-through-4-nodes construction as damped_chirp_filon_weights,
    vectorized over many kernel centers against one shared cell mesh.
    The integral over the two unbounded tails beyond the mesh is added in
    closed form (complex erfc) with the envelope continued as a constant,
    folded into the extreme nodes.  Returns (rows, nodes): rows[q] @
    g(nodes) approximates the full-line integral for center centers[q].
    """
    from scipy.special import erfc as _cerfc

    from .oscquad import _FILON_VINV, _damped_raw_moments

    ncell = edges.size - 1
    nnode = 3 * ncell + 1
    nodes = np.linspace(edges[0], edges[-1], nnode)
    s = np.sqrt(-alpha)  # principal branch, Re s >= 0
    tail_pref = math.sqrt(math.pi) / (2.0 * s)
    rows = np.empty((centers.size, nnode), dtype=complex)
    for start in range(0, centers.size, _ROW_CHUNK):
        cs = centers[start : start + _ROW_CHUNK, None]
        wa = edges[None, :-1] - cs
        wb = edges[None, 1:] - cs
        um = 0.5 * (wa + wb)
        hw = 0.5 * (wb - wa)
        raw = _damped_raw_moments(alpha, wa, wb)
        mu0 = raw[0]
        mu1 = raw[1] - um * raw[0]
        mu2 = raw[2] - 2.0 * um * raw[1] + um * um * raw[0]
        mu3 = raw[3] - 3.0 * um * raw[2] + 3.0 * um**2 * raw[1] - um**3 * raw[0]
        mu = np.stack([mu0, mu1 / hw, mu2 / (hw * hw), mu3 / hw**3])
        cellw = np.einsum("kqc,kj->jqc", mu, _FILON_VINV)
        block = np.zeros((cs.size, nnode), dtype=complex)
        idx = np.arange(ncell) * 3
        for j in range(4):
            np.add.at(block, (slice(None), idx + j), cellw[j])
        block[:, 0] += tail_pref * _cerfc(s * (cs[:, 0] - edges[0]))
        block[:, -1] += tail_pref * _cerfc(s * (edges[-1] - cs[:, 0]))
        rows[start : start + _ROW_CHUNK] = block
    return rows, nodes


def _sliced_member(
    q: PropagatorQuery,
    extent: float,
    points: int,
    eps: float,
    mass: float,
    sampling: str,
    mode: str,
) -> complex:
    """One damped sliced-kernel evaluation.

    The wavefront is carried as a slow envelope against the exact free
    kernel from the start point (bridge factoring): each intermediate
    integration is a complex-Gaussian bridge contracted with exact
    damped-chirp cell moments plus analytic constant-continuation tails,
    so no grid oscillation is ever sampled pointwise.
    """
    n = q.slices
    dt = q.duration / n
    pot = q.potential

    if sampling not in ("left", "midpoint"):
        raise ValueError("sampling must be 'left' or 'midpoint'")

    if n == 1:
        # single increment: no intermediate integration, no damping needed
        if sampling == "left":
            v = float(pot.values(np.array([q.xi_prime]), q.tau_prime)[0])
        else:
            mid = 0.5 * (q.xi_prime + q.xi)
            v = float(pot.values(np.array([mid]), q.tau_prime)[0])
        return complex(np.exp(-1j * v * dt)) * psi0_closed(q, mass=mass)

    c = 0.5 * (q.xi + q.xi_prime)
    times = q.tau_prime + dt * np.arange(n)

    if mode == "raw":
        if n != 2:
            raise ValueError("raw mode is limited to slices <= 2")
        # the definitional Riemann sum over the single intermediate point,
        # on a window wide enough that the damped tails are negligible and
        # a division fine enough to resolve the fastest oscillation
        ext_raw = max(extent, math.sqrt(4.5 / max(eps, 1e-12)))
        slope = 2.0 * mass * ext_raw * (1.0 / dt + 1.0 / dt)
        m_raw = max(points, int(math.ceil(16.0 * ext_raw * slope)))
        m_raw = min(m_raw, 1 << 23)
        h = 2.0 * ext_raw / m_raw
        x = c - ext_raw + h * (np.arange(m_raw) + 0.5)
        pref = complex(np.sqrt(mass / (2j * math.pi * dt)))
        alpha = complex(-eps, 0.5 * mass / dt)
        if sampling == "left":
            v0 = pot.values(np.array([q.xi_prime]), times[0])[0]
            v1 = pot.values(x, times[1])
        else:
            v0 = pot.values(0.5 * (q.xi_prime + x), times[0])
            v1 = pot.values(0.5 * (x + q.xi), times[1])
        g = (
            pref * np.exp(alpha * np.square(x - q.xi_prime))
            * np.exp(-1j * v0 * dt)
            * pref * np.exp(alpha * np.square(q.xi - x))
            * np.exp(-1j * v1 * dt)
        )
        return complex(h * np.sum(g))

    ncell = max(4, (points - 1) // 3)
    edges = np.linspace(c - extent, c + extent, ncell + 1)
    nodes = np.linspace(c - extent, c + extent, 3 * ncell + 1)

    # envelope after slice 1: phi_1(z) = K(z - xi'; dt) * chi(z)
    if sampling == "left":
        v0 = float(pot.values(np.array([q.xi_prime]), times[0])[0])
        chi = np.full(nodes.size, np.exp(-1j * v0 * dt), dtype=complex)
    else:
        v0 = pot.values(0.5 * (q.xi_prime + nodes), times[0])
        chi = np.exp(-1j * v0 * dt).astype(complex)

    for j in range(1, n - 1):
        a = times[j] - q.tau_prime
        big_a = 1.0 / dt + 1.0 / a
        lam = a / (a + dt)
        alpha = complex(-eps, 0.5 * mass * big_a)
        pref_b = complex(np.sqrt(mass * big_a / (2j * math.pi)))
        centers = lam * nodes + (1.0 - lam) * q.xi_prime
        rows, _ = _bridge_rows(alpha, centers, edges)
        if sampling == "left":
            g = np.exp(-1j * pot.values(nodes, times[j]) * dt) * chi
            chi = pref_b * (rows @ g)
        else:
            vmid = pot.values(
                0.5 * (nodes[None, :] + nodes[:, None]), times[j]
            )
            g = np.exp(-1j * vmid * dt) * chi[None, :]
            chi = pref_b * np.einsum("qn,qn->q", rows, g)

    # final intermediate: bridge to the exact end point
    a = times[n - 1] - q.tau_prime
    big_a = 1.0 / dt + 1.0 / a
    lam = a / (a + dt)
    alpha = complex(-eps, 0.5 * mass * big_a)
    pref_b = complex(np.sqrt(mass * big_a / (2j * math.pi)))
    center = lam * q.xi + (1.0 - lam) * q.xi_prime
    rows, _ = _bridge_rows(alpha, np.array([center]), edges)
    wrow = rows[0]
    if sampling == "left":
        g = np.exp(-1j * pot.values(nodes, times[n - 1]) * dt) * chi
    else:
        vmid = pot.values(0.5 * (nodes + q.xi), times[n - 1])
        g = np.exp(-1j * vmid * dt) * chi
    core = complex(pref_b * np.sum(wrow * g))
    return psi0_closed(q, mass=mass) * core


def psi_sliced(
    q: PropagatorQuery,
    grid: SliceGrid,
    *,
    mass: float = 1.0,
    rtol: float = 1e-3,
    sampling: str = "left",
    mode: str = "convolution",
) -> complex:
    """Time-sliced propagator with the query's potential.

    Iterated one-step damped Fresnel convolutions over the query's
    slices; per-slice potential weight e^{-i V(x_{j-1}) dt} at the LEFT
    increment endpoint (midpoint behind the sampling flag, for
    convergence experiments).  The damping ladder (eps, 2 eps, 4 eps) is
    extrapolated polynomially to zero; the result must be stable under
    dropping the widest member (else NoConvergenceError), under halving
    the mesh, and under shrinking the window to three quarters (else
    GridTooCoarseError) — three independent failure probes.
    """
    if mode not in ("convolution", "raw"):
        raise ValueError("mode must be 'convolution' or 'raw'")
    if not rtol > 0.0:
        raise ValueError("rtol must be positive")
    if q.slices == 1:
        return _sliced_member(
            q, grid.extent, grid.points, 0.0, mass, sampling, mode
        )

    eps_members = [grid.damping, 2.0 * grid.damping, 4.0 * grid.damping]
    vals = [
        _sliced_member(q, grid.extent, grid.points, eps, mass, sampling, mode)
        for eps in eps_members
    ]
    extrap = _neville_at_zero(eps_members, vals)
    partial = _neville_at_zero(eps_members[:2], vals[:2])
    scale = max(abs(extrap), 1e-300)
    if abs(extrap - partial) > 0.5 * rtol * scale:
        raise NoConvergenceError(
            f"damping extrapolation moved {abs(extrap - partial):.3e} "
            f"(relative {abs(extrap - partial) / scale:.3e}) when adding "
            f"the third member; tighten the grid or damping"
        )
    # resolution probe: halve the mesh for the most weakly damped member
    half_points = (grid.points // 2) & ~1
    if mode == "convolution" and half_points >= 8:
        v_half = _sliced_member(
            q, grid.extent, half_points, eps_members[0], mass, sampling, mode
        )
        if abs(v_half - vals[0]) > 2.0 * rtol * scale:
            raise GridTooCoarseError(
                f"halving the mesh moved the weakest member by "
                f"{abs(v_half - vals[0]) / scale:.3e} relative; "
                f"increase points per slice"
            )
    # truncation probe: shrink the window to 3/4 at similar resolution
    small_points = max(8, (3 * grid.points // 4) & ~1)
    v_small = _sliced_member(
        q, 0.75 * grid.extent, small_points, eps_members[0], mass,
        sampling, mode,
    )
    if abs(v_small - vals[0]) > 2.0 * rtol * scale:
        raise GridTooCoarseError(
            f"shrinking the window to three quarters moved the weakest "
            f"member by {abs(v_small - vals[0]) / scale:.3e} relative; "
            f"increase the spatial extent"
        )
    return complex(extrap)


def psi0_sliced(
    q: PropagatorQuery,
    grid: SliceGrid,
    *,
    mass: float = 1.0,
    rtol: float = 1e-3,
    mode: str = "convolution",
) -> complex:
    """Time-sliced FREE propagator (the query's potential is ignored)."""
    free_q = PropagatorQuery(
        xi_prime=q.xi_prime,
        tau_prime=q.tau_prime,
        xi=q.xi,
        tau=q.tau,
        slices=q.slices,
        potential=Potential.zero(),
    )
    return psi_sliced(free_q, grid, mass=mass, rtol=rtol, mode=mode)


# ---------------------------------------------------------------------------
# semigroup / Chapman-Kolmogorov residual
# ---------------------------------------------------------------------------


def free_kernel_semigroup_residual(
    xi_prime: float,
    xi: float,
    s: float,
    t: float,
    *,
    mass: float = 1.0,
    tol: float = 1e-6,
) -> float:
    """|numeric int K(z - xi'; s) K(xi - z; t) dz  -  K(xi - xi'; s+t)|.

    The product of kernels is a pure quadratic-phase line integral; it is
    evaluated with the package's own improper oscillatory engine (two
    half-lines about the stationary point), independently of the closed
    form it is compared against.
    """
    from .integrate import OscillatoryTailSpec, oscillatory_improper

    if not (s > 0.0 and t > 0.0):
        raise ValueError("time steps must be positive")
    a = 0.5 * mass * (1.0 / s + 1.0 / t)
    z0 = (t * xi_prime + s * xi) / (s + t)
    const_phase = 0.5 * mass * (xi - xi_prime) ** 2 / (s + t)
    pref = complex(
        np.sqrt(mass / (2j * math.pi * s)) * np.sqrt(mass / (2j * math.pi * t))
    )
    half = oscillatory_improper(
        OscillatoryTailSpec(
            phase_quadratic_coefficient=2j * a, lower_limit=0.0, direction=+1
        ),
        tol=tol,
    )
    numeric = pref * np.exp(1j * const_phase) * 2.0 * half
    closed = free_kernel(xi - xi_prime, s + t, mass=mass)
    return abs(complex(numeric) - complex(closed))


# ---------------------------------------------------------------------------
# perturbation expansion: complex-Gaussian bridge recursion
# ---------------------------------------------------------------------------
#
# Write psi_r(z, s) = K0(z - xi'; s - tau') * chi_r(z, s).  The Dyson
# recursion psi_r = -i int_{tau'}^{tau} ds int dz K0(xi - z; tau - s)
# V(z, s) psi_{r-1}(z, s) factorizes through the kernel product
# K0(xi - z; b) K0(z - xi'; a) = K0(xi - xi'; a + b) * B(z), with B a
# normalized complex-Gaussian bridge centered on the straight line.  For
# chi_{r-1} polynomial in z the bridge expectation is an EXACT moment
# computation, so for polynomial potentials the whole tower is exact in
# space; the remaining s-integral is Gauss-Legendre on a Chebyshev time
# grid with barycentric interpolation between levels.

_TIME_NODES = 33
_GL_NODES = 33
_CUSTOM_FIT_DEGREE = 24

_DOUBLE_FACTORIAL = [1.0]
for _k in range(1, 90):
    _DOUBLE_FACTORIAL.append(_DOUBLE_FACTORIAL[-1] * (2 * _k - 1))


def _bridge_expectation(pv: np.ndarray, lam: float, v: complex) -> np.ndarray:
    """E[(lam*u + W)^j] coefficients: poly in z - xi' -> poly in u = y - xi'.

    W is the centered complex Gaussian with second moment v (the bridge
    fluctuation); odd moments vanish, E[W^{2m}] = v^m (2m-1)!!.
    """
    L = pv.size
    out = np.zeros(L, dtype=complex)
    for j in range(L):
        cj = pv[j]
        if cj == 0.0:
            continue
        for q in range(j % 2, j + 1, 2) if v == 0.0 else range(j + 1):
            m2 = j - q
            if m2 % 2:
                continue
            m = m2 // 2
            out[q] += (
                cj
                * math.comb(j, q)
                * (lam ** q)
                * (v ** m)
                * _DOUBLE_FACTORIAL[m]
            )
    return out


def _potential_coefficients(
    pot: Potential,
    s: float,
    xi_prime: float,
    window: float,
) -> np.ndarray:
    """V(., s) as power-series coefficients in u = z - xi_prime."""
    tag = pot.analytic_tag
    if tag == "zero":
        return np.zeros(1)
    if tag == "constant":
        return np.array([pot.constant], dtype=float)
    if tag == "harmonic":
        w2 = 0.5 * pot.omega * pot.omega
        return np.array(
            [w2 * xi_prime * xi_prime, 2.0 * w2 * xi_prime, w2], dtype=float
        )
    lo, hi = xi_prime - window, xi_prime + window
    zs = np.cos(np.linspace(0.0, math.pi, 4 * _CUSTOM_FIT_DEGREE + 1))
    zs = 0.5 * (lo + hi) + 0.5 * (hi - lo) * zs
    vals = pot.values(zs, s)
    ch = _cheb.Chebyshev.fit(zs, vals, _CUSTOM_FIT_DEGREE, domain=[lo, hi])
    p = ch.convert(kind=_poly.Polynomial)
    shifted = p(_poly.Polynomial([xi_prime, 1.0]))
    return np.asarray(shifted.coef, dtype=float)


def _chi_levels(
    q: PropagatorQuery,
    rmax: int,
    *,
    mass: float,
    window: float,
) -> list[np.ndarray]:
    """chi_r coefficient tables on the Chebyshev-Lobatto time grid.

    Entry r is an (nt, r*degV + 1) array: chi_r(u, t_i) = sum_k
    coeffs[i, k] u^k with u the displacement from the start point.
    """
    nt = _TIME_NODES
    t0, t1 = q.tau_prime, q.tau
    theta = np.linspace(0.0, math.pi, nt)
    tnodes = t0 + 0.5 * (t1 - t0) * (1.0 - np.cos(theta))
    bary = np.where(np.arange(nt) % 2 == 0, 1.0, -1.0)
    bary[0] *= 0.5
    bary[-1] *= 0.5

    glx, glw = np.polynomial.legendre.leggauss(_GL_NODES)

    pot = q.potential
    time_dependent = pot.analytic_tag == "custom"
    vcoef_cache: dict[float, np.ndarray] = {}

    def vcoef(s: float) -> np.ndarray:
        key = float(s) if time_dependent else 0.0
        if key not in vcoef_cache:
            vcoef_cache[key] = _potential_coefficients(
                pot, s if time_dependent else t0, q.xi_prime, window
            )
        return vcoef_cache[key]

    levels = [np.ones((nt, 1), dtype=complex)]
    for r in range(1, rmax + 1):
        prev = levels[-1]
        degv = max(vcoef(t0).size - 1, 0)
        width = prev.shape[1] + degv
        cur = np.zeros((nt, width), dtype=complex)
        for i in range(nt):
            ti = tnodes[i]
            span = ti - t0
            if span <= 0.0:
                continue  # chi_r(., tau') = 0 for r >= 1
            snodes = t0 + 0.5 * span * (glx + 1.0)
            sweights = 0.5 * span * glw
            acc = np.zeros(width, dtype=complex)
            for s, wgt in zip(snodes, sweights):
                # barycentric interpolation of the previous level at s
                diffs = s - tnodes
                exact = np.nonzero(np.abs(diffs) < 1e-14 * max(1.0, abs(s)))[0]
                if exact.size:
                    prev_coef = prev[exact[0]]
                else:
                    wts = bary / diffs
                    prev_coef = (wts @ prev) / np.sum(wts)
                pv = np.convolve(vcoef(s), prev_coef)
                lam = (s - t0) / span
                var = 1j * (ti - s) * (s - t0) / (span * mass)
                acc += wgt * _bridge_expectation(pv, lam, var)[:width]
            cur[i] = -1j * acc
        levels.append(cur)
    return levels


def perturbation_term(
    r: int,
    q: PropagatorQuery,
    grid: SliceGrid | None = None,
    *,
    mass: float = 1.0,
) -> complex:
    """The r-th term of the propagator's expansion in interaction vertices.

    r = 0 is the free propagator; r >= 1 integrates r time-ordered
    vertices, each weighted by the potential at the vertex, over free
    propagation between vertices.  Exact in space for polynomial
    potentials; custom potentials are fitted on a window whose half-width
    comes from the grid extent (default 8).
    """
    if not (isinstance(r, int) and r >= 0):
        raise ValueError("r must be a nonnegative integer")
    base = psi0_closed(q, mass=mass)
    if r == 0:
        return base
    window = grid.extent if grid is not None else 8.0
    levels = _chi_levels(q, r, mass=mass, window=window)
    u = q.xi - q.xi_prime
    coef = levels[r][-1]  # last time node is exactly tau
    chi = complex(_poly.polyval(u, coef))
    return base * chi


def perturbation_partial_sum(
    m: int,
    q: PropagatorQuery,
    grid: SliceGrid | None = None,
    *,
    mass: float = 1.0,
) -> complex:
    """Sum of the expansion terms through order m."""
    if not (isinstance(m, int) and m >= 0):
        raise ValueError("m must be a nonnegative integer")
    base = psi0_closed(q, mass=mass)
    window = grid.extent if grid is not None else 8.0
    levels = _chi_levels(q, m, mass=mass, window=window)
    u = q.xi - q.xi_prime
    total = 0.0 + 0.0j
    for r in range(m + 1):
        total += complex(_poly.polyval(u, levels[r][-1]))
    return base * total


# ---------------------------------------------------------------------------
# Crank-Nicolson reference solver
# ---------------------------------------------------------------------------


def reference_grid(grid: SliceGrid) -> np.ndarray:
    """The spatial points used by schrodinger_reference for this grid."""
    h = 2.0 * grid.extent / grid.points
    return -grid.extent + h * (np.arange(grid.points) + 0.5)


def schrodinger_reference(
    potential: Potential,
    initial: np.ndarray,
    tau: float,
    grid: SliceGrid,
    *,
    mass: float = 1.0,
    steps: int | None = None,
) -> np.ndarray:
    """Evolve a grid wavefunction by i d(psi)/dt = [-(1/2m) d^2/dx^2 + V] psi.

    Crank-Nicolson with Dirichlet walls at +-extent: unconditionally
    stable, norm-conserving, second order in both steps.  The default
    step count enforces dt <= dx^2.  Raises GridTooCoarseError when the
    initial state carries visible mass at the walls (the walls would
    reflect it) .
    """
    if not tau > 0.0:
        raise ValueError("tau must be positive")
    x = reference_grid(grid)
    h = x[1] - x[0]
    psi = np.asarray(initial, dtype=complex)
    if psi.shape != x.shape:
        raise ValueError(
            f"initial state has shape {psi.shape}, grid has {x.shape}"
        )
    edge = max(2, grid.points // 50)
    interior_peak = float(np.max(np.abs(psi)))
    if interior_peak == 0.0:
        return psi.copy()
    if float(np.max(np.abs(psi[:edge]))) > 1e-8 * interior_peak or float(
        np.max(np.abs(psi[-edge:]))
    ) > 1e-8 * interior_peak:
        raise GridTooCoarseError(
            "initial state touches the window walls; enlarge the extent"
        )
    if steps is None:
        steps = max(8, int(math.ceil(tau / (h * h))))
    dt = tau / steps
    if dt > h * h * (1.0 + 1e-12):
        raise GridTooCoarseError(
            f"time step {dt:.3e} exceeds dx^2 = {h * h:.3e}; increase steps"
        )

    kin = 1.0 / (2.0 * mass * h * h)
    m_pts = grid.points
    off = np.full(m_pts - 1, -kin)
    for k in range(steps):
        t_mid = (k + 0.5) * dt
        diag = 2.0 * kin + potential.values(x, t_mid)
        # (1 + i dt H / 2) psi_next = (1 - i dt H / 2) psi
        rhs = (
            psi
            - 0.5j * dt * (diag * psi)
            - 0.5j
            * dt
            * (-kin)
            * (
                np.concatenate(([0.0 + 0j], psi[:-1]))
                + np.concatenate((psi[1:], [0.0 + 0j]))
            )
        )
        ab = np.zeros((3, m_pts), dtype=complex)
        ab[0, 1:] = 0.5j * dt * off
        ab[1, :] = 1.0 + 0.5j * dt * diag
        ab[2, :-1] = 0.5j * dt * off
        psi = solve_banded((1, 1), ab, rhs)
    return psi
