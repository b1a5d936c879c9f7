"""Pure-numpy solver kernels (fallback backend).

Red-black successive over-relaxation for the pressure Poisson problem.
The per-cell arithmetic (neighbor summation order, relaxation formula)
mirrors the Cython kernel exactly so both backends produce identical
fields.
"""

import numpy as np

BACKEND = "numpy"


def sor_sweeps(phi, rhs, coef_inv, open_w, open_e, open_s, open_n, active, omega, nsweeps):
    """Run `nsweeps` red-black SOR sweeps in place on `phi`.

    Solves, per active cell, coef*phi - sum(phi_neighbors) = rhs with the
    neighbor sum restricted to open (fluid-fluid) faces.  Cells with
    active=False (solid or zero-coefficient) are never touched.

    Arrays are (nx, ny); `coef_inv` holds 1/coef (0 where inactive).
    """
    ii, jj = np.meshgrid(np.arange(phi.shape[0]), np.arange(phi.shape[1]), indexing="ij")
    parity = (ii + jj) % 2
    masks = (active & (parity == 0), active & (parity == 1))

    ow = open_w.astype(phi.dtype)
    oe = open_e.astype(phi.dtype)
    os_ = open_s.astype(phi.dtype)
    on = open_n.astype(phi.dtype)

    for _ in range(nsweeps):
        for mask in masks:
            nb = np.zeros_like(phi)
            nb[:-1, :] += oe[:-1, :] * phi[1:, :]
            nb[1:, :] += ow[1:, :] * phi[:-1, :]
            nb[:, :-1] += on[:, :-1] * phi[:, 1:]
            nb[:, 1:] += os_[:, 1:] * phi[:, :-1]
            new = (1.0 - omega) * phi + omega * ((nb + rhs) * coef_inv)
            phi[mask] = new[mask]
    return phi
