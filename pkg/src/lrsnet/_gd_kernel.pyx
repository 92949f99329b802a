# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled gradient-descent kernel for the smooth ADMM subproblem.

Operates on the strict upper triangle packed row-major into 1-D arrays,
which is the only part of the pair matrix the smooth loss reads.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs

cnp.import_array()


def inner_gd(double[::1] x_upper, double alpha, double[::1] m_upper,
             double v_alpha, double[::1] v_upper,
             double inv_n, double lam, double step, double tol,
             long max_iters):
    """Plain gradient descent on the prox-regularized pairwise logistic loss.

    Minimizes, over (alpha, m),
        (1/n) * sum_k [ log(1 + e^(alpha + m_k)) - x_k * (alpha + m_k) ]
        + (1/(2*lam)) * (alpha - v_alpha)^2 + (1/(2*lam)) * ||m - v||^2
    with constant step size, stopping once the largest coordinate move of an
    iteration is <= tol.

    Returns (alpha, m, iterations, converged). ``m_upper`` is the warm start
    and is left untouched.
    """
    cdef Py_ssize_t size = x_upper.shape[0]
    cdef cnp.ndarray[double, ndim=1] m_arr = np.array(m_upper, dtype=np.float64)
    cdef double[::1] m = m_arr
    cdef double inv_lam = 1.0 / lam
    cdef double t, sig, g, d, dmax, ga_sum, da
    cdef Py_ssize_t k
    cdef long it = 0
    cdef bint converged = False

    while it < max_iters:
        ga_sum = 0.0
        dmax = 0.0
        for k in range(size):
            t = alpha + m[k]
            if t >= 0.0:
                sig = 1.0 / (1.0 + exp(-t))
            else:
                sig = exp(t)
                sig = sig / (1.0 + sig)
            ga_sum += sig - x_upper[k]
            g = inv_n * (sig - x_upper[k]) + inv_lam * (m[k] - v_upper[k])
            d = step * g
            m[k] -= d
            d = fabs(d)
            if d > dmax:
                dmax = d
        da = step * (inv_n * ga_sum + inv_lam * (alpha - v_alpha))
        alpha -= da
        it += 1
        da = fabs(da)
        if da < dmax:
            da = dmax
        if da <= tol:
            converged = True
            break

    return alpha, m_arr, it, converged
