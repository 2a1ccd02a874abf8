"""Generalized inverse Gaussian random variates.

Density of GIG(lam, chi, psi)::

    f(x) ~ x**(lam - 1) * exp(-(chi / x + psi * x) / 2),  x > 0

The interior case is reduced to the two-parameter form with
``omega = sqrt(chi * psi)`` and scale ``sqrt(chi / psi)`` and sampled with
one of three rejection schemes (Hormann & Leydold, 2014):

* ratio-of-uniforms with mode shift, for ``lam > 2`` or ``omega > 3``
* ratio-of-uniforms without shift, for moderate parameters
* a piecewise hat for the non-T-concave region (small ``omega``)

Boundary cases ``chi == 0`` and ``psi == 0`` are the gamma and inverse
gamma distributions. All functions broadcast over array parameters and
draw with a ``numpy.random.Generator``.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError


def _mode(lam, omega):
    # both branches are evaluated; the unused one may cancel to zero
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(
            lam >= 1.0,
            (np.sqrt((lam - 1.0) ** 2 + omega**2) + (lam - 1.0)) / omega,
            omega / (np.sqrt((1.0 - lam) ** 2 + omega**2) + (1.0 - lam)),
        )


def _rou_shift(lam, omega, rng):
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _mode(lam, omega)
    nc = t * np.log(xm) - s * (xm + 1.0 / xm)
    a = -(2.0 * (lam + 1.0) / omega + xm)
    b = 2.0 * (lam - 1.0) * xm / omega - 1.0
    c = xm
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    fi = np.arccos(np.clip(-q / (2.0 * np.sqrt(-(p**3) / 27.0)), -1.0, 1.0))
    fak = 2.0 * np.sqrt(-p / 3.0)
    y1 = fak * np.cos(fi / 3.0) - a / 3.0
    y2 = fak * np.cos(fi / 3.0 + 4.0 / 3.0 * np.pi) - a / 3.0
    uplus = (y1 - xm) * np.exp(t * np.log(y1) - s * (y1 + 1.0 / y1) - nc)
    uminus = (y2 - xm) * np.exp(t * np.log(y2) - s * (y2 + 1.0 / y2) - nc)

    out = np.empty_like(lam)
    todo = np.arange(lam.shape[0])
    while todo.size:
        u = uminus[todo] + rng.random(todo.size) * (uplus[todo] - uminus[todo])
        v = rng.random(todo.size)
        x = u / v + xm[todo]
        with np.errstate(invalid="ignore", divide="ignore"):
            ok = (x > 0) & (
                np.log(v) <= t[todo] * np.log(x) - s[todo] * (x + 1.0 / x) - nc[todo]
            )
        out[todo[ok]] = x[ok]
        todo = todo[~ok]
    return out


def _rou_noshift(lam, omega, rng):
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _mode(lam, omega)
    nc = t * np.log(xm) - s * (xm + 1.0 / xm)
    ym = ((lam + 1.0) + np.sqrt((lam + 1.0) ** 2 + omega**2)) / omega
    um = np.exp(0.5 * (lam + 1.0) * np.log(ym) - s * (ym + 1.0 / ym) - nc)

    out = np.empty_like(lam)
    todo = np.arange(lam.shape[0])
    while todo.size:
        u = um[todo] * rng.random(todo.size)
        v = rng.random(todo.size)
        x = u / v
        with np.errstate(invalid="ignore", divide="ignore"):
            ok = np.log(v) <= t[todo] * np.log(x) - s[todo] * (x + 1.0 / x) - nc[todo]
        out[todo[ok]] = x[ok]
        todo = todo[~ok]
    return out


def _non_t_concave(lam, omega, rng):
    # valid for 0 <= lam < 1 and small omega
    xm = _mode(lam, omega)
    x0 = omega / (1.0 - lam)
    k0 = np.exp((lam - 1.0) * np.log(xm) - 0.5 * omega * (xm + 1.0 / xm))
    a1 = k0 * x0
    two_over = 2.0 / omega
    far = x0 >= two_over
    lam_zero = lam == 0.0

    k1 = np.where(far, 0.0, np.exp(-omega))
    with np.errstate(divide="ignore", invalid="ignore"):
        a2_lam = k1 / lam * (two_over**lam - x0**lam)
        a2_zero = k1 * np.log(2.0 / (omega * omega))
    a2 = np.where(far, 0.0, np.where(lam_zero, a2_zero, a2_lam))
    k2 = np.where(far, x0 ** (lam - 1.0), two_over ** (lam - 1.0))
    a3 = np.where(far, k2 * 2.0 * np.exp(-omega * x0 / 2.0) / omega, k2 * 2.0 * np.exp(-1.0) / omega)
    atot = a1 + a2 + a3
    amax = np.maximum(x0, two_over)

    out = np.empty_like(lam)
    todo = np.arange(lam.shape[0])
    while todo.size:
        L, W = lam[todo], omega[todo]
        v = atot[todo] * rng.random(todo.size)
        x = np.empty(todo.size)
        hx = np.empty(todo.size)

        r1 = v <= a1[todo]
        x[r1] = x0[todo][r1] * v[r1] / a1[todo][r1]
        hx[r1] = k0[todo][r1]

        v2 = v - a1[todo]
        r2 = ~r1 & (v2 <= a2[todo])
        z = r2 & lam_zero[todo]
        x[z] = W[z] * np.exp(np.exp(W[z]) * v2[z])
        hx[z] = k1[todo][z] / x[z]
        nz = r2 & ~lam_zero[todo]
        x[nz] = (x0[todo][nz] ** L[nz] + L[nz] / k1[todo][nz] * v2[nz]) ** (1.0 / L[nz])
        hx[nz] = k1[todo][nz] * x[nz] ** (L[nz] - 1.0)

        r3 = ~r1 & ~r2
        v3 = v2 - a2[todo]
        arg = np.exp(-W[r3] / 2.0 * amax[todo][r3]) - W[r3] / (2.0 * k2[todo][r3]) * v3[r3]
        with np.errstate(divide="ignore", invalid="ignore"):
            x[r3] = -2.0 / W[r3] * np.log(arg)
        hx[r3] = k2[todo][r3] * np.exp(-W[r3] / 2.0 * x[r3])

        u = rng.random(todo.size) * hx
        with np.errstate(divide="ignore", invalid="ignore"):
            ok = (
                np.isfinite(x)
                & (x > 0)
                & (np.log(u) <= (L - 1.0) * np.log(x) - W / 2.0 * (x + 1.0 / x))
            )
        out[todo[ok]] = x[ok]
        todo = todo[~ok]
    return out


def _standard_gig(lam, omega, rng):
    """Draw from density ~ x**(lam-1) exp(-omega (x + 1/x) / 2) for lam >= 0."""
    out = np.empty_like(lam)
    shift = (lam > 2.0) | (omega > 3.0)
    noshift = ~shift & ((lam >= 1.0 - 2.25 * omega * omega) | (omega > 0.2))
    rest = ~shift & ~noshift
    if shift.any():
        out[shift] = _rou_shift(lam[shift], omega[shift], rng)
    if noshift.any():
        out[noshift] = _rou_noshift(lam[noshift], omega[noshift], rng)
    if rest.any():
        out[rest] = _non_t_concave(lam[rest], omega[rest], rng)
    return out


def sample_gig(lam, chi, psi, rng: np.random.Generator, size=None):
    """Draw GIG(lam, chi, psi) variates.

    Parameters broadcast against each other (and ``size`` if given).
    Returns a float when every input is scalar and ``size`` is None.

    Raises ``DomainError`` when ``chi`` or ``psi`` is negative, both are
    zero, ``chi == 0`` with ``lam <= 0`` or ``psi == 0`` with ``lam >= 0``.
    """
    scalar = size is None and all(np.ndim(a) == 0 for a in (lam, chi, psi))
    lam, chi, psi = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (lam, chi, psi))
    )
    if size is not None:
        lam, chi, psi = (np.broadcast_to(a, size) for a in (lam, chi, psi))
    shape = lam.shape
    lam, chi, psi = (np.ravel(a).copy() for a in (lam, chi, psi))

    if np.any(~np.isfinite(lam) | ~np.isfinite(chi) | ~np.isfinite(psi)):
        raise DomainError("GIG parameters must be finite")
    if np.any(chi < 0) or np.any(psi < 0):
        raise DomainError("GIG requires chi >= 0 and psi >= 0")
    gamma_case = chi == 0
    invgamma_case = psi == 0
    if np.any(gamma_case & invgamma_case):
        raise DomainError("GIG requires chi and psi not both zero")
    if np.any(gamma_case & (lam <= 0)):
        raise DomainError("GIG with chi = 0 requires lam > 0")
    if np.any(invgamma_case & (lam >= 0)):
        raise DomainError("GIG with psi = 0 requires lam < 0")

    out = np.empty(lam.shape[0])
    if gamma_case.any():
        g = gamma_case
        out[g] = rng.gamma(lam[g], 2.0 / psi[g])
    if invgamma_case.any():
        g = invgamma_case
        out[g] = 0.5 * chi[g] / rng.gamma(-lam[g], 1.0)
    interior = ~gamma_case & ~invgamma_case
    if interior.any():
        la = lam[interior]
        omega = np.sqrt(chi[interior] * psi[interior])
        scale = np.sqrt(chi[interior] / psi[interior])
        y = _standard_gig(np.abs(la), omega, rng)
        out[interior] = np.where(la < 0, scale / y, scale * y)

    out = out.reshape(shape)
    return float(out) if scalar else out


def gig_mean(lam: float, chi: float, psi: float) -> float:
    """Closed-form mean via modified Bessel functions of the second kind."""
    from scipy.special import kve

    omega = np.sqrt(chi * psi)
    return float(np.sqrt(chi / psi) * kve(lam + 1.0, omega) / kve(lam, omega))
