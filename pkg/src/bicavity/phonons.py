"""Phonon bath: spectral density, polaron propagator, correlation kernels, rates.

All frequencies are expressed in units of the first QD-cavity coupling g1.
The single physical scale is hbar*g1 in meV (default 0.05 meV), which fixes
both the phonon cutoff (1 meV -> 20 g1) and the kelvin-to-beta conversion.

Conventions
-----------
J(w)     = alpha_p * w^3 * exp(-w^2 / (2 w_b^2))          (super-ohmic)
<B>      = exp[-1/2 int_0^inf dw J(w)/w^2 coth(beta hbar w / 2)]
phi(tau) = int_0^inf dw J(w)/w^2 [coth(beta hbar w/2) cos(w tau) - i sin(w tau)]
G_g(tau) = <B>^2 (cosh(phi(tau)) - 1)
G_u(tau) = <B>^2 sinh(phi(tau))
G_pm     = <B>^2 (exp(+-phi(tau)) - 1),  so G_g = (G_+ + G_-)/2 and
           G_u = (G_+ - G_-)/2.

The displacement correlator ordering behind these formulas pairs with the
backward-evolved system operator in the scattering integrals; the one-sided
transforms used everywhere are K(w) = int_0^inf G(tau) exp(i w tau) dtau.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import dawsn

HBAR_MEV_PS = 0.6582119569
KB_MEV_PER_K = 0.08617333262

DECAY_TOL = 1e-6


class KernelNotDecayedError(RuntimeError):
    """Correlation functions have not decayed at the end of the tau grid."""


@dataclass(frozen=True)
class BathParams:
    """Deformation-coupling bath parameters, frequencies in g1 units."""

    alpha_p: float            # coupling strength, 1/g1^2
    omega_b: float = 10.0     # cutoff, g1 units (1 meV at the default scale)
    temperature: float = 5.0  # kelvin
    g1_mev: float = 0.1       # hbar*g1 in meV; sets the kelvin conversion

    def __post_init__(self):
        if self.alpha_p < 0:
            raise ValueError("alpha_p must be >= 0")
        if self.omega_b <= 0:
            raise ValueError("omega_b must be > 0")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    @property
    def hbar_over_kb(self) -> float:
        """beta*hbar*w = hbar_over_kb * w / T for w in g1 units, T in kelvin."""
        return self.g1_mev / KB_MEV_PER_K


def spectral_density(omega, p: BathParams):
    """Super-ohmic J(w) = alpha_p w^3 exp(-w^2/2w_b^2), for w >= 0."""
    w = np.asarray(omega, dtype=float)
    return p.alpha_p * w**3 * np.exp(-(w**2) / (2.0 * p.omega_b**2))


def _thermal_weight(omega: np.ndarray, p: BathParams) -> np.ndarray:
    """(J(w)/w^2) coth(beta hbar w/2), with the finite w->0 limit filled in."""
    w = np.asarray(omega, dtype=float)
    base = p.alpha_p * w * np.exp(-(w**2) / (2.0 * p.omega_b**2))
    if p.temperature == 0:
        return base
    x = p.hbar_over_kb * w / (2.0 * p.temperature)
    out = np.empty_like(base)
    small = x < 1e-12
    out[~small] = base[~small] / np.tanh(x[~small])
    # J/w^2 * coth -> alpha_p * 2T/(hbar/kB) as w -> 0
    out[small] = p.alpha_p * 2.0 * p.temperature / p.hbar_over_kb
    return out


def _simpson_weights(n: int, h: float) -> np.ndarray:
    if n % 2 == 0:
        raise ValueError("composite Simpson needs an odd number of points")
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


def _omega_grid(p: BathParams, tau_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Frequency grid resolving both the Gaussian cutoff and exp(i w tau_max)."""
    w_hi = 8.0 * p.omega_b
    n = max(2001, int(24 * w_hi * tau_max / (2 * np.pi)) | 1)
    w = np.linspace(0.0, w_hi, n)
    return w, _simpson_weights(n, w[1] - w[0])


def mean_displacement(p: BathParams) -> float:
    """Thermal expectation of the phonon displacement operator, in (0, 1]."""
    if p.alpha_p == 0:
        return 1.0
    w, wts = _omega_grid(p, tau_max=0.0)
    return float(np.exp(-0.5 * np.sum(wts * _thermal_weight(w, p))))


def _thermal_excess(omega: np.ndarray, p: BathParams) -> np.ndarray:
    """(J(w)/w^2) (coth(beta hbar w/2) - 1); vanishes identically at T = 0."""
    w = np.asarray(omega, dtype=float)
    base = p.alpha_p * w * np.exp(-(w**2) / (2.0 * p.omega_b**2))
    if p.temperature == 0:
        return np.zeros_like(base)
    x = p.hbar_over_kb * w / (2.0 * p.temperature)
    out = np.empty_like(base)
    small = x < 1e-12
    out[~small] = base[~small] * (1.0 / np.tanh(x[~small]) - 1.0)
    out[small] = p.alpha_p * 2.0 * p.temperature / p.hbar_over_kb
    return out


def phi(tau, p: BathParams):
    """Polaron propagator phi(tau); phi(0) = -2 ln<B> and phi -> 0 at large tau.

    The zero-temperature piece of the super-ohmic integral is closed-form
    (Dawson function and a Gaussian); the thermal excess, whose integrand
    carries coth - 1, is integrated numerically.
    """
    t = np.atleast_1d(np.asarray(tau, dtype=float))
    if p.alpha_p == 0:
        out = np.zeros_like(t, dtype=complex)
        return out if np.ndim(tau) else complex(out[0])
    s = p.omega_b
    z = s * t / np.sqrt(2.0)
    out = (p.alpha_p * s**2 * (1.0 - np.sqrt(2.0) * s * t * dawsn(z))
           - 1j * p.alpha_p * np.sqrt(np.pi / 2.0) * s**3 * t
           * np.exp(-(s * t) ** 2 / 2.0)).astype(complex)
    if p.temperature > 0:
        w, wts = _omega_grid(p, tau_max=float(t.max()) if t.size else 0.0)
        therm = wts * _thermal_excess(w, p)
        for lo in range(0, t.size, 256):
            ts = t[lo:lo + 256, None]
            out[lo:lo + 256] += np.sum(therm * np.cos(w * ts), axis=1)
    return out if np.ndim(tau) else complex(out[0])


@dataclass
class PhononKernel:
    """Tabulated bath correlation functions and their Simpson quadrature.

    Built once per BathParams and read-only afterwards; safe to share.
    """

    params: BathParams
    tau: np.ndarray
    weights: np.ndarray           # Simpson weights on the tau grid
    phi_tab: np.ndarray
    g_g: np.ndarray
    g_u: np.ndarray
    g_plus: np.ndarray
    g_minus: np.ndarray
    mean_displacement: float
    decay_tol: float = DECAY_TOL

    @cached_property
    def _splines(self):
        mk = lambda y: (CubicSpline(self.tau, y.real), CubicSpline(self.tau, y.imag))
        return {"g": mk(self.g_g), "u": mk(self.g_u),
                "plus": mk(self.g_plus), "minus": mk(self.g_minus)}

    def _eval(self, which: str, tau):
        re, im = self._splines[which]
        t = np.asarray(tau, dtype=float)
        out = np.where(t <= self.tau[-1], re(t) + 1j * im(t), 0.0 + 0.0j)
        return out if np.ndim(tau) else complex(out)

    def correlation_g(self, tau):
        return self._eval("g", tau)

    def correlation_u(self, tau):
        return self._eval("u", tau)

    def assert_decayed(self):
        ref = max(abs(self.g_g[0]), abs(self.g_u[0]), 1e-300)
        tail = max(abs(self.g_g[-1]), abs(self.g_u[-1]))
        if tail > self.decay_tol * ref:
            raise KernelNotDecayedError(
                f"|G(tau_max)|/|G(0)| = {tail / ref:.2e} > {self.decay_tol:.0e}; "
                "re-tabulate with a larger tau_max"
            )

    @cached_property
    def _ft_cache(self) -> dict:
        return {}

    def one_sided_ft(self, which: str, omegas) -> np.ndarray:
        """K(w) = int_0^tau_max G(tau) exp(i w tau) dtau on the Simpson grid.

        Scalar evaluations are memoized; the scattering integrals revisit the
        same handful of detunings many times.
        """
        self.assert_decayed()
        if np.ndim(omegas) == 0:
            key = (which, float(omegas))
            hit = self._ft_cache.get(key)
            if hit is None:
                hit = complex(self.one_sided_ft(which, np.array([float(omegas)]))[0])
                self._ft_cache[key] = hit
            return hit
        g = {"g": self.g_g, "u": self.g_u, "plus": self.g_plus, "minus": self.g_minus}[which]
        wg = self.weights * g
        om = np.atleast_1d(np.asarray(omegas, dtype=float))
        out = np.empty(om.shape, dtype=complex)
        for lo in range(0, om.size, 1024):
            out[lo:lo + 1024] = np.exp(1j * np.outer(om[lo:lo + 1024], self.tau)) @ wg
        return out


def tabulate_kernel(p: BathParams, n_points: int = 2001, tau_max: float | None = None,
                    decay_tol: float = DECAY_TOL, _max_doublings: int = 8) -> PhononKernel:
    """Tabulate phi, G_g, G_u on a uniform tau grid; tau_max grows until decayed.

    At low temperature the one-sided kernels have 1/tau^2 tails, so the grid
    doubles in span (and in points, to keep the step resolving fast phase
    factors in the rate integrals) until the decay criterion holds.
    """
    if n_points % 2 == 0:
        n_points += 1
    B = mean_displacement(p)
    if tau_max is None:
        tau_max = 12.0 / p.omega_b
    base_points = n_points
    for doubling in range(_max_doublings + 1):
        n_points = min(base_points * 2 ** doubling, 65536) | 1
        tau = np.linspace(0.0, tau_max, n_points)
        ph = np.atleast_1d(phi(tau, p))
        g_plus = B**2 * (np.exp(ph) - 1.0)
        g_minus = B**2 * (np.exp(-ph) - 1.0)
        kernel = PhononKernel(
            params=p, tau=tau, weights=_simpson_weights(n_points, tau[1] - tau[0]),
            phi_tab=ph, g_g=0.5 * (g_plus + g_minus), g_u=0.5 * (g_plus - g_minus),
            g_plus=g_plus, g_minus=g_minus, mean_displacement=B, decay_tol=decay_tol,
        )
        if p.alpha_p == 0:
            return kernel
        try:
            kernel.assert_decayed()
            return kernel
        except KernelNotDecayedError:
            tau_max *= 2.0
    kernel.assert_decayed()  # raises with the final ratio
    return kernel


@dataclass(frozen=True)
class ScatteringRates:
    """The five one-sided scattering integrals for one (k, l) mode pair."""

    omega_plus: complex
    omega_minus: complex
    omega_mm: complex
    gamma_plus: complex
    gamma_minus: complex
    gamma_mm: complex
    gamma_pp: complex


def scattering_rates(kernel: PhononKernel, delta_k: float, delta_l: float,
                     g_k: float, g_l: float) -> ScatteringRates:
    """Phonon-assisted rates for operators on mode k paired with mode l.

    K_pm(w) below is the one-sided transform of G_pm; detunings in g1 units.
    """
    if kernel.params.alpha_p == 0:
        z = 0j
        return ScatteringRates(z, z, z, z, z, z, z)
    kernel.assert_decayed()
    kp = lambda w: kernel.one_sided_ft("plus", w)
    km = lambda w: kernel.one_sided_ft("minus", w)
    # conj(int G exp(-i w tau)) = int conj(G) exp(+i w tau)
    km_conj = lambda w: np.conj(km(-w))
    gg = g_k * g_l
    omega_plus = 0.5 * gg * (kp(delta_k) - km_conj(-delta_l))
    omega_minus = 0.5 * gg * (kp(-delta_k) - km_conj(delta_l))
    omega_mm = 0.5 * gg * (km(delta_k) - km_conj(delta_l))
    kp_conj = lambda w: np.conj(kp(-w))
    gamma_plus = gg * (kp(delta_k) + kp_conj(-delta_l))
    gamma_minus = gg * (kp(-delta_k) + kp_conj(delta_l))
    gamma_mm = gg * (km(delta_k) + km_conj(delta_l))
    gamma_pp = gg * (km(-delta_k) + km_conj(-delta_l))
    return ScatteringRates(
        omega_plus=complex(omega_plus), omega_minus=complex(omega_minus),
        omega_mm=complex(omega_mm), gamma_plus=complex(gamma_plus),
        gamma_minus=complex(gamma_minus), gamma_mm=complex(gamma_mm),
        gamma_pp=complex(gamma_pp),
    )


def calibrate_alpha_p(omega_b: float = 10.0, g1_mev: float = 0.1,
                      anchor_temperature: float = 5.0, target: float = 0.90) -> float:
    """alpha_p giving <B>(anchor_temperature) == target at fixed omega_b.

    <B> = exp(-alpha_p * I / 2) is strictly monotone in alpha_p, so the root
    is available in closed form from the unit-coupling integral I.
    """
    if not (0 < target <= 1):
        raise ValueError("target must lie in (0, 1]")
    probe = BathParams(alpha_p=1.0, omega_b=omega_b, temperature=anchor_temperature,
                       g1_mev=g1_mev)
    w, wts = _omega_grid(probe, tau_max=0.0)
    unit_integral = float(np.sum(wts * _thermal_weight(w, probe)))
    return -2.0 * np.log(target) / unit_integral


def calibration_report(alpha_p: float, omega_b: float = 10.0, g1_mev: float = 0.1,
                       temperatures=(5.0, 10.0, 20.0)) -> dict:
    """<B> at the reference temperatures for a calibrated bath (residual check)."""
    return {
        T: mean_displacement(BathParams(alpha_p=alpha_p, omega_b=omega_b,
                                        temperature=T, g1_mev=g1_mev))
        for T in temperatures
    }
