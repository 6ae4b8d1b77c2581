"""Hot stencil kernels: VFV flux divergence and the CFL signal speed.

Two interchangeable backends live here.  The numba backend JIT-compiles
tight face loops; the pure-numpy backend expresses the same arithmetic
with rolled/sliced arrays.  Selection is made once at import time from the
environment flag ``VFVLAB_NUMBA`` ("0"/"off"/"false" forces the numpy
path, "1"/"on" requires numba, anything else picks numba when available).
``benchmarks/bench_rhs.py`` compares the two.

Both backends evaluate the same face flux:

    F      = <U> <u>.n - (1/2) |<u>.n| [U] - h^eps [U]          (all four)
    F_m   += <p> n - h^(alpha-1) [u]                            (momentum)
    F_E   += pw - h^(alpha-1) [u].<u>                           (energy)

with pw = <p><u>.n for the "averaged" pressure-work form and
pw = ((<p><u> + <p u>).n)/2 for the "as printed" form; [.] is the jump
right minus left, <.> the face average, and cell velocities are m/rho
before averaging.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

_flag = os.environ.get("VFVLAB_NUMBA", "auto").strip().lower()
if _flag in ("0", "off", "false", "no"):
    NUMBA_ENABLED = False
elif _flag in ("1", "on", "true", "yes"):
    import numba  # noqa: F401  (hard requirement when forced on)

    NUMBA_ENABLED = True
else:
    try:
        import numba  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - exercised only without numba
        warnings.warn("numba unavailable; falling back to the numpy kernels")
        NUMBA_ENABLED = False


def backend() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------------------
# numpy backend


def _flux_arrays(rhoL, mxL, myL, enL, uxL, uyL, pL,
                 rhoR, mxR, myR, enR, uxR, uyR, pR,
                 nx, ny, heps, hal, as_printed):
    aux = 0.5 * (uxL + uxR)
    auy = 0.5 * (uyL + uyR)
    un = aux * nx + auy * ny
    absun = np.abs(un)
    jr = rhoR - rhoL
    jmx = mxR - mxL
    jmy = myR - myL
    je = enR - enL
    jux = uxR - uxL
    juy = uyR - uyL
    pav = 0.5 * (pL + pR)
    f_rho = 0.5 * (rhoL + rhoR) * un - 0.5 * absun * jr - heps * jr
    f_mx = 0.5 * (mxL + mxR) * un - 0.5 * absun * jmx - heps * jmx + pav * nx - hal * jux
    f_my = 0.5 * (myL + myR) * un - 0.5 * absun * jmy - heps * jmy + pav * ny - hal * juy
    if as_printed:
        pw = 0.5 * pav * un + 0.25 * ((pL * uxL + pR * uxR) * nx + (pL * uyL + pR * uyR) * ny)
    else:
        pw = pav * un
    f_en = 0.5 * (enL + enR) * un - 0.5 * absun * je - heps * je + pw - hal * (jux * aux + juy * auy)
    return f_rho, f_mx, f_my, f_en


def rhs_numpy(U, h, alpha, eps_visc, gamma, as_printed, periodic):
    """Flux-divergence tendency dU/dt, vectorized numpy path."""
    rho, mx, my, en = U[0], U[1], U[2], U[3]
    ux = mx / rho
    uy = my / rho
    p = (gamma - 1.0) * (en - 0.5 * (mx * mx + my * my) / rho)
    heps = h ** eps_visc
    hal = h ** (alpha - 1.0)
    inv_h = 1.0 / h
    out = np.zeros_like(U)
    for axis, (nx, ny) in ((0, (1.0, 0.0)), (1, (0.0, 1.0))):
        if periodic:
            sh = -1
            rl = lambda A: np.roll(A, sh, axis=axis)
            f = _flux_arrays(rho, mx, my, en, ux, uy, p,
                             rl(rho), rl(mx), rl(my), rl(en), rl(ux), rl(uy), rl(p),
                             nx, ny, heps, hal, as_printed)
            for c in range(4):
                out[c] += (np.roll(f[c], 1, axis=axis) - f[c]) * inv_h
        else:
            # mirror-ghost padding: normal momentum/velocity negated at walls
            def pad(A, flip):
                sgn = -1.0 if flip else 1.0
                first = sgn * (A[:1, :] if axis == 0 else A[:, :1])
                last = sgn * (A[-1:, :] if axis == 0 else A[:, -1:])
                return np.concatenate([first, A, last], axis=axis)

            flipn = axis == 0
            rhoP = pad(rho, False)
            mxP = pad(mx, flipn)
            myP = pad(my, not flipn)
            enP = pad(en, False)
            uxP = pad(ux, flipn)
            uyP = pad(uy, not flipn)
            pP = pad(p, False)
            if axis == 0:
                L = lambda A: A[:-1, :]
                R = lambda A: A[1:, :]
            else:
                L = lambda A: A[:, :-1]
                R = lambda A: A[:, 1:]
            f = _flux_arrays(L(rhoP), L(mxP), L(myP), L(enP), L(uxP), L(uyP), L(pP),
                             R(rhoP), R(mxP), R(myP), R(enP), R(uxP), R(uyP), R(pP),
                             nx, ny, heps, hal, as_printed)
            for c in range(4):
                if axis == 0:
                    out[c] += (f[c][:-1, :] - f[c][1:, :]) * inv_h
                else:
                    out[c] += (f[c][:, :-1] - f[c][:, 1:]) * inv_h
    return out


def max_signal_speed_numpy(U, gamma):
    rho, mx, my, en = U[0], U[1], U[2], U[3]
    usq = (mx * mx + my * my) / (rho * rho)
    p = (gamma - 1.0) * (en - 0.5 * rho * usq)
    return float(np.max(np.sqrt(usq) + np.sqrt(gamma * p / rho)))


# ---------------------------------------------------------------------------
# numba backend

if NUMBA_ENABLED:
    from numba import njit

    @njit(cache=True)
    def _face_flux(rhoL, mxL, myL, enL, uxL, uyL, pL,
                   rhoR, mxR, myR, enR, uxR, uyR, pR,
                   nx, ny, heps, hal, as_printed):
        aux = 0.5 * (uxL + uxR)
        auy = 0.5 * (uyL + uyR)
        un = aux * nx + auy * ny
        absun = abs(un)
        jr = rhoR - rhoL
        jmx = mxR - mxL
        jmy = myR - myL
        je = enR - enL
        jux = uxR - uxL
        juy = uyR - uyL
        pav = 0.5 * (pL + pR)
        f_rho = 0.5 * (rhoL + rhoR) * un - 0.5 * absun * jr - heps * jr
        f_mx = 0.5 * (mxL + mxR) * un - 0.5 * absun * jmx - heps * jmx + pav * nx - hal * jux
        f_my = 0.5 * (myL + myR) * un - 0.5 * absun * jmy - heps * jmy + pav * ny - hal * juy
        if as_printed:
            pw = 0.5 * pav * un + 0.25 * ((pL * uxL + pR * uxR) * nx + (pL * uyL + pR * uyR) * ny)
        else:
            pw = pav * un
        f_en = 0.5 * (enL + enR) * un - 0.5 * absun * je - heps * je + pw - hal * (jux * aux + juy * auy)
        return f_rho, f_mx, f_my, f_en

    @njit(cache=True)
    def rhs_numba(U, h, alpha, eps_visc, gamma, as_printed, periodic):
        # face fluxes are stored per face line and differenced pairwise per
        # cell, so constant states give an exactly zero tendency
        n = U.shape[1]
        ux = np.empty((n, n))
        uy = np.empty((n, n))
        p = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                r = U[0, i, j]
                ux[i, j] = U[1, i, j] / r
                uy[i, j] = U[2, i, j] / r
                p[i, j] = (gamma - 1.0) * (U[3, i, j]
                                           - 0.5 * (U[1, i, j] ** 2 + U[2, i, j] ** 2) / r)
        heps = h ** eps_visc
        hal = h ** (alpha - 1.0)
        inv_h = 1.0 / h
        nl = n if periodic else n + 1
        Fx = np.empty((4, nl, n))  # line l sits between cells l-1 and l
        Fy = np.empty((4, n, nl))
        for l in range(nl):
            for j in range(n):
                iL = l - 1 if l > 0 else n - 1
                iR = l if l < n else 0
                if periodic or 0 < l < n:
                    f = _face_flux(
                        U[0, iL, j], U[1, iL, j], U[2, iL, j], U[3, iL, j],
                        ux[iL, j], uy[iL, j], p[iL, j],
                        U[0, iR, j], U[1, iR, j], U[2, iR, j], U[3, iR, j],
                        ux[iR, j], uy[iR, j], p[iR, j],
                        1.0, 0.0, heps, hal, as_printed)
                elif l == 0:
                    # left wall: mirror ghost on the left
                    f = _face_flux(
                        U[0, 0, j], -U[1, 0, j], U[2, 0, j], U[3, 0, j],
                        -ux[0, j], uy[0, j], p[0, j],
                        U[0, 0, j], U[1, 0, j], U[2, 0, j], U[3, 0, j],
                        ux[0, j], uy[0, j], p[0, j],
                        1.0, 0.0, heps, hal, as_printed)
                else:
                    # right wall: mirror ghost on the right
                    f = _face_flux(
                        U[0, iL, j], U[1, iL, j], U[2, iL, j], U[3, iL, j],
                        ux[iL, j], uy[iL, j], p[iL, j],
                        U[0, iL, j], -U[1, iL, j], U[2, iL, j], U[3, iL, j],
                        -ux[iL, j], uy[iL, j], p[iL, j],
                        1.0, 0.0, heps, hal, as_printed)
                for c in range(4):
                    Fx[c, l, j] = f[c]
        for i in range(n):
            for m in range(nl):
                jL = m - 1 if m > 0 else n - 1
                jR = m if m < n else 0
                if periodic or 0 < m < n:
                    f = _face_flux(
                        U[0, i, jL], U[1, i, jL], U[2, i, jL], U[3, i, jL],
                        ux[i, jL], uy[i, jL], p[i, jL],
                        U[0, i, jR], U[1, i, jR], U[2, i, jR], U[3, i, jR],
                        ux[i, jR], uy[i, jR], p[i, jR],
                        0.0, 1.0, heps, hal, as_printed)
                elif m == 0:
                    f = _face_flux(
                        U[0, i, 0], U[1, i, 0], -U[2, i, 0], U[3, i, 0],
                        ux[i, 0], -uy[i, 0], p[i, 0],
                        U[0, i, 0], U[1, i, 0], U[2, i, 0], U[3, i, 0],
                        ux[i, 0], uy[i, 0], p[i, 0],
                        0.0, 1.0, heps, hal, as_printed)
                else:
                    f = _face_flux(
                        U[0, i, jL], U[1, i, jL], U[2, i, jL], U[3, i, jL],
                        ux[i, jL], uy[i, jL], p[i, jL],
                        U[0, i, jL], U[1, i, jL], -U[2, i, jL], U[3, i, jL],
                        ux[i, jL], -uy[i, jL], p[i, jL],
                        0.0, 1.0, heps, hal, as_printed)
                for c in range(4):
                    Fy[c, i, m] = f[c]
        out = np.empty_like(U)
        for c in range(4):
            for i in range(n):
                ip = i + 1 if i + 1 < nl else 0
                for j in range(n):
                    jp = j + 1 if j + 1 < nl else 0
                    out[c, i, j] = ((Fx[c, i, j] - Fx[c, ip, j])
                                    + (Fy[c, i, j] - Fy[c, i, jp])) * inv_h
        return out

    @njit(cache=True)
    def max_signal_speed_numba(U, gamma):
        n = U.shape[1]
        worst = 0.0
        for i in range(n):
            for j in range(n):
                r = U[0, i, j]
                usq = (U[1, i, j] ** 2 + U[2, i, j] ** 2) / (r * r)
                p = (gamma - 1.0) * (U[3, i, j] - 0.5 * r * usq)
                s = np.sqrt(usq) + np.sqrt(gamma * p / r)
                if s > worst:
                    worst = s
        return worst


def rhs(U, h, alpha, eps_visc, gamma, as_printed, periodic):
    if NUMBA_ENABLED:
        return rhs_numba(U, h, alpha, eps_visc, gamma, as_printed, periodic)
    return rhs_numpy(U, h, alpha, eps_visc, gamma, as_printed, periodic)


def max_signal_speed(U, gamma):
    if NUMBA_ENABLED:
        return max_signal_speed_numba(U, gamma)
    return max_signal_speed_numpy(U, gamma)
