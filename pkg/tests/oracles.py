"""Reference implementations that share no code with the package."""
import math

import mpmath as mp
import numpy as np
from scipy import integrate, special
from scipy.linalg import expm
from sympy import Rational
from sympy.physics.wigner import clebsch_gordan as sympy_cg
from sympy.physics.wigner import wigner_3j as sympy_3j


def wigner3j_sympy(*doubled):
    return float(sympy_3j(*[Rational(x, 2) for x in doubled]))


def clebsch_gordan_sympy(*doubled):
    return float(sympy_cg(*[Rational(x, 2) for x in doubled]))


def kernel_mpmath(x, dps=20):
    """(2/sqrt(pi)) int_0^inf exp(-u^2) exp(i x u/2) sinc(x u/2) du, split at the sinc zeros."""
    with mp.workdps(dps):
        x = mp.mpf(x)
        if x == 0:
            return 1.0 + 0j

        def f(u):
            y = x * u / 2
            return mp.exp(-u * u) * mp.expj(y) * (mp.sin(y) / y if y != 0 else 1)

        top = mp.mpf(7)          # exp(-49) is below double precision
        step = abs(2 * mp.pi / x)
        nodes = [mp.mpf(0)]
        while nodes[-1] + step < top and len(nodes) < 20000:
            nodes.append(nodes[-1] + step)
        nodes.append(top)
        val = 2 / mp.sqrt(mp.pi) * mp.quad(f, nodes)
        return complex(val)


def radial_quad(n1, l1, n2, l2):
    """<R_n1l1 | r | R_n2l2> by direct numerical quadrature of scipy's Laguerre polynomials."""

    def radial(n, l, r):
        rho = 2 * r / n
        norm = math.sqrt((2 / n) ** 3 * math.factorial(n - l - 1) / (2 * n * math.factorial(n + l)))
        return norm * np.exp(-rho / 2) * rho**l * special.eval_genlaguerre(n - l - 1, 2 * l + 1, rho)

    val, _ = integrate.quad(lambda r: radial(n1, l1, r) * radial(n2, l2, r) * r**3, 0, np.inf,
                            epsabs=0, epsrel=1e-12, limit=400)
    return val


def detection_dblquad(axis, bands):
    """3/(8 pi) int (1 - k k^T) dOmega over polar bands ``[(t_lo, t_hi), ...]`` measured from ``axis``."""
    # orthonormal frame with ``axis`` as the polar direction
    axis = np.asarray(axis, dtype=float)
    helper = np.array([1.0, 0, 0]) if abs(axis[0]) < 0.9 else np.array([0, 1.0, 0])
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    out = np.zeros((3, 3))
    for a in range(3):
        for b in range(a, 3):
            def integrand(phi, theta):
                v = math.sin(theta) * (math.cos(phi) * e1 + math.sin(phi) * e2) + math.cos(theta) * axis
                return ((a == b) - v[a] * v[b]) * math.sin(theta)
            total = 0.0
            for lo, hi in bands:
                val, _ = integrate.dblquad(integrand, lo, hi, 0, 2 * math.pi, epsabs=1e-13, epsrel=1e-12)
                total += val
            out[a, b] = out[b, a] = 3 / (8 * math.pi) * total
    return out


def three_level_bloch(omega_rabi, detuning, gamma, t):
    """Hand-written optical Bloch equations for g <-> e driven, e -> s decaying at ``gamma``.

    Basis order (g, e, s); coupling -omega_rabi/2 (|e><g| + h.c.) in the
    frame rotating with the laser, excited energy -detuning.  Returns the
    3x3 density matrix at time t starting in g.
    """
    def rhs(y):
        rgg, ree, rss, reg_re, reg_im = y
        reg = reg_re + 1j * reg_im
        w = omega_rabi
        d_gg = -w * reg.imag
        d_ee = w * reg.imag - gamma * ree
        d_ss = gamma * ree
        d_eg = (1j * detuning - gamma / 2) * reg + 1j * (w / 2) * (rgg - ree)
        return np.array([d_gg, d_ee, d_ss, d_eg.real, d_eg.imag])

    basis = np.eye(5)
    generator = np.column_stack([rhs(basis[:, k]) for k in range(5)])
    y = expm(generator * t) @ np.array([1.0, 0, 0, 0, 0])
    rho = np.zeros((3, 3), dtype=complex)
    rho[0, 0], rho[1, 1], rho[2, 2] = y[0], y[1], y[2]
    rho[1, 0] = y[3] + 1j * y[4]
    rho[0, 1] = np.conj(rho[1, 0])
    return rho
