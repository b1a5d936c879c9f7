# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled solver kernels (Cython backend).

Arithmetic is kept operation-for-operation identical to the numpy
fallback in ``_kernels_py`` so the two backends agree bitwise; the
extension is built with FP contraction disabled for the same reason.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def sor_sweeps(cnp.ndarray[cnp.float64_t, ndim=2] phi,
               cnp.ndarray[cnp.float64_t, ndim=2] rhs,
               cnp.ndarray[cnp.float64_t, ndim=2] coef_inv,
               open_w, open_e, open_s, open_n, active,
               double omega, int nsweeps):
    """Run `nsweeps` red-black SOR sweeps in place on `phi`."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] ow = np.ascontiguousarray(open_w, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] oe = np.ascontiguousarray(open_e, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] os_ = np.ascontiguousarray(open_s, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] on = np.ascontiguousarray(open_n, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] act = np.ascontiguousarray(active, dtype=np.uint8)

    cdef int nx = phi.shape[0]
    cdef int ny = phi.shape[1]
    cdef int sweep, color, i, j
    cdef double s, new

    for sweep in range(nsweeps):
        for color in range(2):
            for i in range(nx):
                for j in range(ny):
                    if (i + j) % 2 != color or act[i, j] == 0:
                        continue
                    s = 0.0
                    if i + 1 < nx:
                        s += oe[i, j] * phi[i + 1, j]
                    if i - 1 >= 0:
                        s += ow[i, j] * phi[i - 1, j]
                    if j + 1 < ny:
                        s += on[i, j] * phi[i, j + 1]
                    if j - 1 >= 0:
                        s += os_[i, j] * phi[i, j - 1]
                    new = (1.0 - omega) * phi[i, j] + omega * ((s + rhs[i, j]) * coef_inv[i, j])
                    phi[i, j] = new
    return phi
