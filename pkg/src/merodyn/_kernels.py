"""Compiled scalar kernels shared by every module.

All family arithmetic lives here so that the orbit classifier, the renderer,
the parameter solvers and the ray tracer run exactly the same floating point
code.  Families are selected by an integer code plus a small complex parameter
vector; this keeps every kernel a plain top-level function that numba can
cache on disk.

Conventions
-----------
* Points with modulus above ``HUGE`` (or non-finite) are the point at infinity.
* ``log_deriv`` returns a complex logarithm of the derivative whose real part is
  accurate even when the derivative itself under- or overflows.  The imaginary
  part is only meaningful modulo 2*pi.
"""
from __future__ import annotations

import cmath
import math

import numpy as np
from numba import njit

EXP = 0
TAN = 1
F2RHO = 2
PI_SLICE = 3
TANH2 = 4
TANHZ2 = 5
PRECOMP = 6

EPS_POLE = 1e-13
HUGE = 1.0 / EPS_POLE
# orbit points closer than this to a pole are candidates for a pole hit
NEAR_POLE = 1e-3

# classifier status codes
UNDETERMINED = 0
CONVERGED = 1
CAPTURED = 2
POLE_HIT = 3
PARAM_SINGULAR = 4

_LOG2 = math.log(2.0)
_LOG4 = math.log(4.0)
_HALF_PI = 0.5 * math.pi

jit = njit(cache=True, nogil=True, error_model="numpy")


@jit
def is_inf(z):
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        return True
    return abs(z) > HUGE


@jit
def chord2(a, b):
    """Squared chordal distance on the Riemann sphere (diameter 2)."""
    ia = is_inf(a)
    ib = is_inf(b)
    if ia and ib:
        return 0.0
    if ia:
        return 4.0 / (1.0 + abs(b) ** 2)
    if ib:
        return 4.0 / (1.0 + abs(a) ** 2)
    d = abs(a - b)
    return 4.0 * d * d / ((1.0 + abs(a) ** 2) * (1.0 + abs(b) ** 2))


@jit
def cdiv(a, b):
    """a / b with a zero divisor sent to infinity instead of raising."""
    if b == 0.0:
        return complex(np.inf, 0.0)
    return a / b


# -- elementary functions, stable for large imaginary parts -------------------

@jit
def tan_(z):
    flip = z.imag < 0.0
    w = z.conjugate() if flip else z
    q = cmath.exp(2j * w)
    t = cdiv(1j * (1.0 - q), 1.0 + q)
    return t.conjugate() if flip else t


@jit
def sec2_(z):
    flip = z.imag < 0.0
    w = z.conjugate() if flip else z
    q = cmath.exp(2j * w)
    s = cdiv(4.0 * q, (1.0 + q) * (1.0 + q))
    return s.conjugate() if flip else s


@jit
def log_sec2_(z):
    flip = z.imag < 0.0
    w = z.conjugate() if flip else z
    q = cmath.exp(2j * w)
    s = _LOG4 + 2j * w - 2.0 * cmath.log(1.0 + q)
    return s.conjugate() if flip else s


@jit
def tanh_(z):
    return -1j * tan_(1j * z)


@jit
def sech2_(z):
    return sec2_(1j * z)


@jit
def log_sech2_(z):
    return log_sec2_(1j * z)


# -- the two-asymptotic-value core (e^w - e^-w) / (A e^w + B e^-w) ------------

@jit
def f2_(A, B, w):
    if w.real > 0.0:
        q = cmath.exp(-2.0 * w)
        return cdiv(1.0 - q, A + B * q)
    u = cmath.exp(2.0 * w)
    return cdiv(u - 1.0, A * u + B)


@jit
def f2_deriv_(A, B, w):
    if w.real > 0.0:
        q = cmath.exp(-2.0 * w)
        d = A + B * q
        return cdiv(2.0 * (A + B) * q, d * d)
    u = cmath.exp(2.0 * w)
    d = A * u + B
    return cdiv(2.0 * (A + B) * u, d * d)


@jit
def f2_log_deriv_(A, B, w):
    if w.real > 0.0:
        q = cmath.exp(-2.0 * w)
        return _LOG2 + cmath.log(A + B) - 2.0 * w - 2.0 * cmath.log(A + B * q)
    u = cmath.exp(2.0 * w)
    return _LOG2 + cmath.log(A + B) + 2.0 * w - 2.0 * cmath.log(A * u + B)


@jit
def f2_coeffs(code, prm, lam):
    A = cdiv(1.0 + 0j, lam)
    if code == F2RHO:
        rho0 = prm[0]
        B = cdiv(2.0 * lam - rho0, rho0 * lam)
    elif code == PI_SLICE:
        B = 1j / math.pi
    else:
        B = prm[0]
    return A, B


# -- family dispatch ---------------------------------------------------------

@jit
def free_av(code, prm, lam):
    if code == TAN:
        return 1j * lam
    return lam + 0j


@jit
def feval(code, prm, lam, z):
    if code == EXP:
        return cmath.exp(z) + lam
    if code == TAN:
        return lam * tan_(z)
    if code == F2RHO or code == PI_SLICE:
        A, B = f2_coeffs(code, prm, lam)
        return f2_(A, B, z)
    if code == TANH2:
        t = tanh_(z)
        return lam * t * t
    if code == TANHZ2:
        return lam * tanh_(z * z)
    A, B = f2_coeffs(code, prm, lam)
    return f2_(A, B, z * z)


@jit
def fderiv(code, prm, lam, z):
    if code == EXP:
        return cmath.exp(z)
    if code == TAN:
        return lam * sec2_(z)
    if code == F2RHO or code == PI_SLICE:
        A, B = f2_coeffs(code, prm, lam)
        return f2_deriv_(A, B, z)
    if code == TANH2:
        return 2.0 * lam * tanh_(z) * sech2_(z)
    if code == TANHZ2:
        return 2.0 * lam * z * sech2_(z * z)
    A, B = f2_coeffs(code, prm, lam)
    return 2.0 * z * f2_deriv_(A, B, z * z)


@jit
def flog_deriv(code, prm, lam, z):
    if code == EXP:
        return z
    if code == TAN:
        return cmath.log(lam) + log_sec2_(z)
    if code == F2RHO or code == PI_SLICE:
        A, B = f2_coeffs(code, prm, lam)
        return f2_log_deriv_(A, B, z)
    if code == TANH2:
        return cmath.log(2.0 * lam * tanh_(z)) + log_sech2_(z)
    if code == TANHZ2:
        return cmath.log(2.0 * lam * z) + log_sech2_(z * z)
    A, B = f2_coeffs(code, prm, lam)
    return cmath.log(2.0 * z) + f2_log_deriv_(A, B, z * z)


@jit
def has_poles(code):
    return code != EXP


@jit
def _lattice_log(code, prm, lam):
    # log of -B/A, the right hand side of e^{2w} = -B/A
    A, B = f2_coeffs(code, prm, lam)
    return cmath.log(-B / A)


@jit
def pole(code, prm, lam, k):
    """Pole number k of f_lam (closed form, branch integer k)."""
    if code == TAN:
        return _HALF_PI + k * math.pi + 0j
    if code == F2RHO or code == PI_SLICE:
        return 0.5 * (_lattice_log(code, prm, lam) + 2j * math.pi * k)
    if code == TANH2:
        return 1j * (_HALF_PI + k * math.pi)
    j = k // 2
    s = k % 2
    if code == TANHZ2:
        w = 1j * (_HALF_PI + j * math.pi)
    else:
        w = 0.5 * (_lattice_log(code, prm, lam) + 2j * math.pi * j)
    r = cmath.sqrt(w)
    return -r if s == 1 else r


@jit
def nearest_pole(code, prm, lam, z):
    """Return (pole, k) for the pole nearest to z in the Euclidean metric."""
    if code == TAN:
        k = int(math.floor((z.real - _HALF_PI) / math.pi + 0.5))
        return pole(code, prm, lam, k), k
    if code == F2RHO or code == PI_SLICE:
        L = _lattice_log(code, prm, lam)
        k = int(math.floor((2.0 * z.imag - L.imag) / (2.0 * math.pi) + 0.5))
        return pole(code, prm, lam, k), k
    if code == TANH2:
        k = int(math.floor((z.imag - _HALF_PI) / math.pi + 0.5))
        return pole(code, prm, lam, k), k
    w = z * z
    if code == TANHZ2:
        j0 = int(math.floor((w.imag - _HALF_PI) / math.pi + 0.5))
    else:
        L = _lattice_log(code, prm, lam)
        j0 = int(math.floor((2.0 * w.imag - L.imag) / (2.0 * math.pi) + 0.5))
    best = np.inf
    bp = 0j
    bk = 0
    for j in range(j0 - 2, j0 + 3):
        for s in range(2):
            k = 2 * j + s
            p = pole(code, prm, lam, k)
            d = abs(z - p)
            if d < best:
                best = d
                bp = p
                bk = k
    return bp, bk


@jit
def n_persistent(code):
    if code == F2RHO or code == TANH2 or code == TANHZ2 or code == PRECOMP:
        return 1
    return 0


@jit
def persistent_point(code, prm, lam, i):
    # every built-in persistent cycle is the fixed origin
    return 0j


# -- orbit and cycle kernels -------------------------------------------------

@jit
def orbit_point(code, prm, lam, z, n):
    for _ in range(n):
        z = feval(code, prm, lam, z)
    return z


@jit
def cycle_newton(code, prm, lam, x0, k, maxit, tol):
    """Newton on f^k(x) - x.  Returns (x, converged, residual, steps)."""
    x = x0
    res = np.inf
    for it in range(maxit + 1):
        y = x
        d = 1.0 + 0j
        for _ in range(k):
            d *= fderiv(code, prm, lam, y)
            y = feval(code, prm, lam, y)
        if is_inf(y) or is_inf(x):
            return x, False, np.inf, it
        F = y - x
        res = abs(F)
        if res <= tol * max(1.0, abs(x)):
            return x, True, res, it
        if it == maxit:
            break
        den = d - 1.0
        if den == 0.0 or not (math.isfinite(den.real) and math.isfinite(den.imag)):
            return x, False, res, it
        x = x - F / den
    return x, False, res, maxit


@jit
def minimal_period(code, prm, lam, x, k, tol):
    for d in range(1, k):
        if k % d != 0:
            continue
        y = orbit_point(code, prm, lam, x, d)
        if abs(y - x) < tol * max(1.0, abs(x)):
            return d
    return k


@jit
def cycle_log_multiplier(code, prm, lam, x, k):
    s = 0j
    y = x
    for _ in range(k):
        s += flog_deriv(code, prm, lam, y)
        y = feval(code, prm, lam, y)
    return s


@jit
def classify(code, prm, lam, max_iter, transient, max_period, eps_hit,
             eps_capture, capture_confirm, conv_tol, check_every,
             refine_maxit, refine_tol):
    """Fate of the free asymptotic value.

    Returns (status, iterations, period, base_point, log_multiplier,
    pole_order, capture_index, refined).
    """
    L = max_period + 1
    buf = np.empty(L, np.complex128)
    poles = has_poles(code)
    npers = n_persistent(code)
    hit2 = eps_hit * eps_hit
    cap2 = eps_capture * eps_capture
    conv2 = conv_tol * conv_tol
    need = capture_confirm  # every built-in persistent cycle has period 1
    cap = 0
    z = free_av(code, prm, lam)
    for n in range(max_iter + 1):
        if is_inf(z):
            return UNDETERMINED, n, 0, z, 0j, 0, -1, False
        if poles:
            p, _ = nearest_pole(code, prm, lam, z)
            if abs(z - p) < NEAR_POLE and chord2(z, p) < hit2:
                return POLE_HIT, n, 0, z, 0j, n + 1, -1, False
        if npers > 0:
            hit = -1
            for i in range(npers):
                if chord2(z, persistent_point(code, prm, lam, i)) < cap2:
                    hit = i
                    break
            if hit >= 0:
                cap += 1
                if cap >= need:
                    return CAPTURED, n, 0, z, 0j, 0, hit, False
            else:
                cap = 0
        buf[n % L] = z
        if n >= transient and (n - transient) % check_every == 0:
            found = 0
            for k in range(1, min(max_period, n) + 1):
                if chord2(z, buf[(n - k) % L]) < conv2:
                    found = k
                    break
            if found > 0:
                # refine from the smallest point of the detected cycle
                base = z
                for j in range(found):
                    c = buf[(n - j) % L]
                    if abs(c) < abs(base):
                        base = c
                x, ok, _, _ = cycle_newton(code, prm, lam, base, found,
                                           refine_maxit, refine_tol)
                if not ok:
                    x = base
                k = minimal_period(code, prm, lam, x, found, 1e-8)
                for i in range(npers):
                    q = persistent_point(code, prm, lam, i)
                    y = x
                    for _ in range(k):
                        if abs(y - q) < 1e-8:
                            return CAPTURED, n, 0, x, 0j, 0, i, ok
                        y = feval(code, prm, lam, y)
                lr = cycle_log_multiplier(code, prm, lam, x, k)
                if not (lr.real < 0.0):
                    return UNDETERMINED, n, 0, x, lr, 0, -1, ok
                return CONVERGED, n, k, x, lr, 0, -1, ok
        if n == max_iter:
            break
        z = feval(code, prm, lam, z)
    return UNDETERMINED, max_iter, 0, z, 0j, 0, -1, False


@jit
def classify_many(code, prm, lams, index, max_iter, transient, max_period,
                  eps_hit, eps_capture, capture_confirm, conv_tol, check_every,
                  refine_maxit, refine_tol, status, iters, period, base,
                  logmult, pole_order):
    """Classify lams[index[j]] for every j, writing into the output buffers."""
    for j in range(index.size):
        c = index[j]
        s, it, k, x, lr, po, _, _ = classify(
            code, prm, lams[c], max_iter, transient, max_period, eps_hit,
            eps_capture, capture_confirm, conv_tol, check_every,
            refine_maxit, refine_tol)
        status[c] = s
        iters[c] = it
        period[c] = k
        base[c] = x
        logmult[c] = lr
        pole_order[c] = po


@jit
def orbit_pole_distances(code, prm, lam, nmax, out_dist, out_k):
    """Euclidean distance of f^j(v) to its nearest pole for j < nmax."""
    z = free_av(code, prm, lam)
    for j in range(nmax):
        if is_inf(z):
            for i in range(j, nmax):
                out_dist[i] = np.inf
                out_k[i] = 0
            return
        p, k = nearest_pole(code, prm, lam, z)
        out_dist[j] = abs(z - p)
        out_k[j] = k
        z = feval(code, prm, lam, z)


@jit
def _same_cycle(code, prm, lamA, xA, lamB, xB, k, tol):
    x, ok, _, _ = cycle_newton(code, prm, lamB, xA, k, 40, 1e-12)
    if not ok:
        return False
    y = xB
    for _ in range(k):
        if abs(x - y) <= tol * max(1.0, abs(y)):
            return True
        y = feval(code, prm, lamB, y)
    return False


@jit
def cycle_links(code, prm, lams, base, period, same, tol, right, down):
    """Mark neighbouring cells whose attracting cycles continue into each other.

    ``right[iy, ix]`` links (ix, iy) with (ix + 1, iy); ``down`` links it with
    (ix, iy + 1).  Both directions of continuation must succeed.
    """
    ny, nx = same.shape
    for iy in range(ny):
        for ix in range(nx):
            if not same[iy, ix]:
                continue
            k = period[iy, ix]
            a, xa = lams[iy, ix], base[iy, ix]
            if ix + 1 < nx and same[iy, ix + 1]:
                b, xb = lams[iy, ix + 1], base[iy, ix + 1]
                right[iy, ix] = (_same_cycle(code, prm, a, xa, b, xb, k, tol)
                                 and _same_cycle(code, prm, b, xb, a, xa, k, tol))
            if iy + 1 < ny and same[iy + 1, ix]:
                b, xb = lams[iy + 1, ix], base[iy + 1, ix]
                down[iy, ix] = (_same_cycle(code, prm, a, xa, b, xb, k, tol)
                                and _same_cycle(code, prm, b, xb, a, xa, k, tol))


@jit
def scan_pole_distances(code, prm, lams, nmax, out_dist, out_k):
    """orbit_pole_distances for every parameter in lams (rows of the outputs)."""
    for i in range(lams.size):
        orbit_pole_distances(code, prm, lams[i], nmax, out_dist[i], out_k[i])
