#!/usr/bin/env python3
"""Reference values for the completed Riemann zeta function xi(s).

Computes, at 50-digit working precision:

  * xi(s) = pi^(-s/2) Gamma(s/2) zeta(s) at the sample points frozen into
    crates/core tests (reference route for the rank-1 zeta),
  * the first ordinates of the zeros on the critical line,
  * a cross-check that the theta-integral representation

        xi(s) = 1/(s(s-1)) + Int_1^inf (t^(s/2) + t^((1-s)/2)) omega(t) dt/t,
        omega(t) = sum_{m>=1} exp(-pi m^2 t),

    reproduces xi(s) to full precision (this pins the sign of the kernel
    exponents: the integral diverges term-by-term only formally; with the
    positive exponents above it converges absolutely for all s and is
    manifestly symmetric under s -> 1-s).

Run from the repository root:  python3 tools/reference/completed_zeta.py
"""

import mpmath as mp

mp.mp.dps = 50


def xi(s):
    """Completed zeta xi(s) = pi^(-s/2) Gamma(s/2) zeta(s)."""
    s = mp.mpc(s)
    return mp.power(mp.pi, -s / 2) * mp.gamma(s / 2) * mp.zeta(s)


def omega(t):
    """omega(t) = sum_{m>=1} exp(-pi m^2 t)."""
    return mp.nsum(lambda m: mp.exp(-mp.pi * m * m * t), [1, mp.inf])


def xi_via_theta_integral(s):
    """Theta-integral route, used to pin the kernel exponent signs."""
    s = mp.mpc(s)
    pole = 1 / (s * (s - 1))
    integrand = lambda t: (t ** (s / 2) + t ** ((1 - s) / 2)) * omega(t) / t
    return pole + mp.quad(integrand, [1, 40])


def fmt(z):
    z = mp.mpc(z)
    return "Complex::new(%s, %s)" % (mp.nstr(z.real, 22), mp.nstr(z.imag, 22))


def main():
    print("== exponent-sign cross-check (theta-integral route vs direct) ==")
    for s in [mp.mpf(2), mp.mpc(0.5, 14.0), mp.mpc(1.3, -7.2), mp.mpc(0.1, 3.0)]:
        d = abs(xi(s) - xi_via_theta_integral(s))
        print("  s = %-24s  |direct - integral| = %s" % (mp.nstr(s, 8), mp.nstr(d, 3)))

    print("\n== frozen xi(s) samples ==")
    samples = [
        mp.mpf(2),
        mp.mpf("0.5"),
        mp.mpc("0.5", "14.134725141734693790"),
        mp.mpc("0.5", "6.0"),
        mp.mpc("1.5", "10.0"),
        mp.mpc("0.25", "22.5"),
        mp.mpc("1.8", "-29.0"),
        mp.mpc("0.9", "0.1"),
    ]
    for s in samples:
        print("  xi(%s)\n    = %s" % (mp.nstr(s, 22), fmt(xi(s))))

    print("\n== frozen zeta(s) samples (Euler-Maclaurin target) ==")
    for s in [mp.mpc(0.5, 14.0), mp.mpc(2, 0), mp.mpc(-1.5, 3.0), mp.mpc(0.5, 30.0), mp.mpc(3.7, -12.3)]:
        print("  zeta(%s)\n    = %s" % (mp.nstr(s, 8), fmt(mp.zeta(s))))

    print("\n== frozen log-gamma samples ==")
    for z in [mp.mpc(0.25, 7.0), mp.mpc(0.25, 0), mp.mpc(1.0, -15.0), mp.mpc(0.05, 0.5)]:
        print("  lngamma(%s)\n    = %s" % (mp.nstr(z, 8), fmt(mp.loggamma(z))))

    print("\n== critical-line zero ordinates ==")
    for k in range(1, 6):
        print("  gamma_%d = %s" % (k, mp.nstr(mp.im(mp.zetazero(k)), 22)))

    print("\n== xi(1/2 + i gamma) at generic (non-zero) ordinates ==")
    for g in ["2.5", "11.0", "17.5", "23.0", "29.5"]:
        s = mp.mpc("0.5", g)
        v = xi(s)
        assert abs(v.imag) < mp.mpf("1e-45")
        print("  gamma = %-6s  xi = %s" % (g, mp.nstr(v.real, 22)))

    print("\n== misc anchors ==")
    print("  xi(2) - pi/6                 = %s" % mp.nstr(xi(2).real - mp.pi / 6, 3))
    print("  omega(1)                     = %s" % mp.nstr(omega(1), 22))
    print("  theta_Z(0,1) = 1+2 omega(1)  = %s" % mp.nstr(1 + 2 * omega(1), 22))


if __name__ == "__main__":
    main()
