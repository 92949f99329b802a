"""Pure-numpy fallback for the inner gradient-descent kernel.

Same contract as ``lrsnet._gd_kernel.inner_gd``; used when the compiled
extension is unavailable or explicitly disabled.
"""

import numpy as np
from scipy.special import expit


def inner_gd(x_upper, alpha, m_upper, v_alpha, v_upper,
             inv_n, lam, step, tol, max_iters):
    x_upper = np.asarray(x_upper, dtype=float)
    v_upper = np.asarray(v_upper, dtype=float)
    m = np.array(m_upper, dtype=float)
    inv_lam = 1.0 / lam

    it = 0
    converged = False
    while it < max_iters:
        resid = expit(alpha + m) - x_upper
        dm = step * (inv_n * resid + inv_lam * (m - v_upper))
        da = step * (inv_n * resid.sum() + inv_lam * (alpha - v_alpha))
        m -= dm
        alpha -= da
        it += 1
        move = abs(da)
        if m.size:
            move = max(move, float(np.max(np.abs(dm))))
        if move <= tol:
            converged = True
            break

    return alpha, m, it, converged
