#!/usr/bin/env python3
"""Reference values for the rank-2 moduli integrals and zeta function.

The rank-2 moduli space of semistable lattices of unit covolume is modeled by

    D1 = { tau = x + i y :  -1/2 <= x < 1/2,  sqrt(1 - x^2) <= y <= 1 },

with hyperbolic measure dmu = dx dy / y^2 and Gram matrix
H(tau) = (1/y) [[x^2 + y^2, x], [x, 1]] (unit determinant).  The squared
vector norms are |m tau + n|^2 / y and the minimum over D1 is attained at
(m, n) = (0, +-1) with value 1/y >= 1.

Produces, for freezing into crates/core tests:

  * vol(D1) = pi/3 - 1 (exact) and high-precision quadrature agreement,
  * theta anchors theta_tau(0, t) at spot points,
  * J2(t) = Int_D1 (theta_tau(0, t) - 1) dmu at spot points
    (numpy double precision, Gauss-Legendre 192 x 96, checked against a
    30-digit mpmath evaluation at t = 1),
  * zetahat_2(s) = vol/(s(s-1)) + Int_1^inf (t^s + t^(1-s)) J2(t) dt/t
    at anchor points, the s -> 1 residue, and
  * the ordinates of the zeros of zetahat_2(1/2 + i gamma) in [0, 20].

Run from the repository root:  python3 tools/reference/theta_moduli.py
"""

import numpy as np
import mpmath as mp

mp.mp.dps = 30

VOL = mp.pi / 3 - 1
T_MAX = 40.0
M_RANGE = 12  # lattice sum cutoff; exp(-pi * (0.866*12)^2) ~ 1e-147


def theta_minus_one(x, y, t):
    """theta_tau(0, t) - 1 for arrays x, y (same shape) and scalar t > 0."""
    total = np.zeros_like(x)
    for m in range(-M_RANGE, M_RANGE + 1):
        for n in range(-M_RANGE, M_RANGE + 1):
            if m == 0 and n == 0:
                continue
            q = ((m * x + n) ** 2 + (m * y) ** 2) / y
            total += np.exp(-np.pi * t * q)
    return total


def gauss_legendre(a, b, k):
    x, w = np.polynomial.legendre.leggauss(k)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


# Tensor quadrature over D1: x-panels split at 0 (the arc boundary kink in y
# range is at |x| = 1/2 only; splitting keeps panels well inside analyticity).
XN, YN = 192, 96
_xs, _xw = gauss_legendre(-0.5, 0.5, XN)


def j2(t):
    total = 0.0
    for xi, wx in zip(_xs, _xw):
        y0 = np.sqrt(1.0 - xi * xi)
        ys, yw = gauss_legendre(y0, 1.0, YN)
        vals = theta_minus_one(np.full_like(ys, xi), ys, t) / ys**2
        total += wx * np.dot(yw, vals)
    return total


def j2_mpmath(t):
    """Independent 30-digit evaluation (slow; used once as a cross-check)."""

    def inner(x):
        y0 = mp.sqrt(1 - x * x)

        def f(y):
            s = mp.mpf(0)
            for m in range(-8, 9):
                for n in range(-8, 9):
                    if m == 0 and n == 0:
                        continue
                    q = ((m * x + n) ** 2 + (m * y) ** 2) / y
                    s += mp.exp(-mp.pi * t * q)
            return s / y**2

        return mp.quad(f, [y0, 1])

    return mp.quad(inner, [mp.mpf("-0.5"), 0, mp.mpf("0.5")])


# J profile on Gauss-Legendre nodes in T = ln t, reused for every s.
PANELS, NODES = 24, 16
_tnodes = []
_tweights = []
_LN_TMAX = np.log(T_MAX)
for p in range(PANELS):
    a = _LN_TMAX * p / PANELS
    b = _LN_TMAX * (p + 1) / PANELS
    Ts, Tw = gauss_legendre(a, b, NODES)
    _tnodes.extend(Ts)
    _tweights.extend(Tw)
_tnodes = np.array(_tnodes)
_tweights = np.array(_tweights)
_jvals = None


def zetahat2(s):
    """zetahat_2(s) via the J profile (exponents +s, +(1-s); dt/t = dT)."""
    global _jvals
    if _jvals is None:
        _jvals = np.array([j2(np.exp(T)) for T in _tnodes])
    s = complex(s)
    kern = np.exp(s * _tnodes) + np.exp((1 - s) * _tnodes)
    return float(VOL) / (s * (s - 1)) + np.dot(_tweights, kern * _jvals)


def z_critical(g):
    """Real-valued zetahat_2(1/2 + i gamma)."""
    return zetahat2(complex(0.5, g)).real


def main():
    print("== vol(D1) ==")
    quad_vol = sum(
        wx * (1.0 / np.sqrt(1.0 - xi * xi) - 1.0) for xi, wx in zip(_xs, _xw)
    )
    print("  pi/3 - 1        = %s" % mp.nstr(VOL, 22))
    print("  quadrature      = %.16e   (diff %.2e)" % (quad_vol, abs(quad_vol - float(VOL))))

    print("\n== theta anchors ==")
    th_i = 1.0 + theta_minus_one(np.array(0.0), np.array(1.0), 1.0)
    print("  theta_{tau=i}(0,1)            = %.16e" % th_i)
    print("  square of 1-d theta(0,1)      = %s" % mp.nstr((1 + 2 * mp.nsum(lambda m: mp.exp(-mp.pi * m * m), [1, mp.inf])) ** 2, 17))
    rho = complex(-0.5, np.sqrt(3) / 2)  # corner point, y = sqrt(3)/2
    th_rho = 1.0 + theta_minus_one(np.array(rho.real), np.array(rho.imag), 1.0)
    print("  theta_rho(0,1) (x=-1/2)       = %.16e" % th_rho)
    th_g = 1.0 + theta_minus_one(np.array(0.2), np.array(0.99), 1.7)
    print("  theta_{0.2+0.99i}(0,1.7)      = %.16e" % th_g)

    print("\n== J2 spot values ==")
    for t in [1.0, 1.5, 2.5, 5.0]:
        print("  J2(%.1f) = %.16e" % (t, j2(t)))
    print("  J2(1) mpmath 30-digit:")
    ref = j2_mpmath(1)
    print("    = %s" % mp.nstr(ref, 22))
    print("    |numpy - mpmath| = %.2e" % abs(j2(1.0) - float(ref)))

    print("\n== zetahat_2 anchors ==")
    for s in [2.0, 3.0, complex(0.5, 0.0), complex(0.5, 5.0), complex(1.7, 3.3)]:
        v = zetahat2(s)
        print("  zetahat_2(%s) = %.16e %+.16e i" % (s, v.real, v.imag))

    print("\n== residue at s = 1 (Richardson over eps = 1e-2, 1e-3) ==")
    f = lambda e: (complex(1 + e) - 1) * zetahat2(complex(1 + e))
    e1, e2 = 1e-2, 1e-3
    r = (e1 * f(e2) - e2 * f(e1)) / (e1 - e2)
    print("  extrapolated    = %.16e %+.3e i" % (r.real, r.imag))
    print("  vol(D1)         = %.16e   (diff %.2e)" % (float(VOL), abs(r.real - float(VOL))))

    print("\n== functional equation spot check ==")
    for s in [complex(1.7, 3.3), complex(0.3, 11.0)]:
        d = abs(zetahat2(s) - zetahat2(1 - s))
        print("  |zetahat_2(s) - zetahat_2(1-s)| at s=%s : %.2e" % (s, d))

    print("\n== zeros of zetahat_2 on the critical line, gamma in [0, 20] ==")
    gs = np.arange(0.0, 20.0, 0.01)
    vals = np.array([z_critical(g) for g in gs])
    zeros = []
    for i in range(len(gs) - 1):
        if vals[i] == 0.0:
            zeros.append(gs[i])
        elif vals[i] * vals[i + 1] < 0:
            a, b = gs[i], gs[i + 1]
            fa = z_critical(a)
            for _ in range(80):
                m = 0.5 * (a + b)
                fm = z_critical(m)
                if fa * fm <= 0:
                    b = m
                else:
                    a, fa = m, fm
            zeros.append(0.5 * (a + b))
    for z in zeros:
        print("  gamma = %.15f" % z)
    print("  (count in [0,20]: %d)" % len(zeros))


if __name__ == "__main__":
    main()
