"""Fixed-step RK4 kernels for the lab-frame Schroedinger equation.

The Hamiltonian is H(t) = H0 + c(t)*A + conj(c(t))*A^dag with a scalar
complex drive coefficient sampled on the half-step grid (2*nsteps + 1
samples).  Kernels are compiled with numba when available; the fallback
runs the identical algorithm in numpy.
"""
from __future__ import annotations

import numpy as np


def _rk4_propagator_impl(h0, a_op, ad_op, coeffs, dt, u0):
    """Propagate dU/dt = -i H(t) U over (len(coeffs)-1)//2 steps."""
    u = u0.copy()
    nsteps = (coeffs.shape[0] - 1) // 2
    for k in range(nsteps):
        c0 = coeffs[2 * k]
        c1 = coeffs[2 * k + 1]
        c2 = coeffs[2 * k + 2]
        h_a = h0 + c0 * a_op + np.conj(c0) * ad_op
        h_b = h0 + c1 * a_op + np.conj(c1) * ad_op
        h_c = h0 + c2 * a_op + np.conj(c2) * ad_op
        k1 = -1j * (h_a @ u)
        k2 = -1j * (h_b @ (u + (0.5 * dt) * k1))
        k3 = -1j * (h_b @ (u + (0.5 * dt) * k2))
        k4 = -1j * (h_c @ (u + dt * k3))
        u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return u


def _rk4_state_impl(h0, a_op, ad_op, coeffs, dt, psi0, stride, out):
    """Propagate a state vector, storing every ``stride`` steps into ``out``.

    Returns the final state.  ``out`` must have shape (nstored, dim) with
    nstored = nsteps // stride + 1; out[0] is psi0.
    """
    psi = psi0.copy()
    nsteps = (coeffs.shape[0] - 1) // 2
    out[0] = psi
    j = 1
    for k in range(nsteps):
        c0 = coeffs[2 * k]
        c1 = coeffs[2 * k + 1]
        c2 = coeffs[2 * k + 2]
        h_a = h0 + c0 * a_op + np.conj(c0) * ad_op
        h_b = h0 + c1 * a_op + np.conj(c1) * ad_op
        h_c = h0 + c2 * a_op + np.conj(c2) * ad_op
        k1 = -1j * (h_a @ psi)
        k2 = -1j * (h_b @ (psi + (0.5 * dt) * k1))
        k3 = -1j * (h_b @ (psi + (0.5 * dt) * k2))
        k4 = -1j * (h_c @ (psi + dt * k3))
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (k + 1) % stride == 0:
            out[j] = psi
            j += 1
    return psi


try:  # pragma: no cover - exercised implicitly
    import numba

    rk4_propagator = numba.njit(cache=True)(_rk4_propagator_impl)
    rk4_state = numba.njit(cache=True)(_rk4_state_impl)
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    rk4_propagator = _rk4_propagator_impl
    rk4_state = _rk4_state_impl
    HAVE_NUMBA = False


def polar_unitary(u: np.ndarray) -> np.ndarray:
    """Closest unitary (polar factor) of a near-unitary matrix."""
    w, _, vh = np.linalg.svd(u)
    return w @ vh
