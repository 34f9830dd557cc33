"""Device parameterizations and truncated two-mode Fock-space Hamiltonians.

Three parameter sets describe the same circuit: bare (uncoupled basis),
normal-mode (quadratic part diagonalized), and observed (transition
frequencies / anharmonicities read off the eigenspectrum).  All stored
frequencies are linear (Hz); factors of 2*pi are applied only inside the
Hamiltonian builders, which return matrices in angular units (rad/s).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np
import yaml
from scipy.optimize import least_squares, linear_sum_assignment, root

from .errors import (
    InvalidDimensionError,
    InvalidParameterError,
    NoConvergenceError,
    UnstableSystemError,
)

TWO_PI = 2.0 * np.pi

#: transmon level letters used in state labels ("g0", "e1", ...)
_LETTERS = "gefh"


class Mode(enum.Enum):
    TRANSMON = "transmon"
    RESONATOR = "resonator"


# ---------------------------------------------------------------------------
# parameter sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CircuitParams:
    """Bare (uncoupled-basis) circuit parameters, linear Hz."""

    omega_t0_hz: float
    omega_r0_hz: float
    g_hz: float
    chi_t_hz: float

    def __post_init__(self):
        if min(self.omega_t0_hz, self.omega_r0_hz) <= 0:
            raise InvalidParameterError("mode frequencies must be positive")
        if self.chi_t_hz < 0 or self.g_hz < 0:
            raise InvalidParameterError("g and chi_t must be non-negative")
        detuning = abs(self.omega_t0_hz - self.omega_r0_hz)
        if detuning == 0:
            raise InvalidParameterError(
                "degenerate modes (omega_t0 == omega_r0): dispersive treatment invalid"
            )
        if self.g_hz >= detuning:
            raise InvalidParameterError(
                f"g = {self.g_hz:g} Hz exceeds the mode detuning {detuning:g} Hz "
                "(dispersive regime required)"
            )
        if self.chi_t_hz >= self.omega_t0_hz:
            raise InvalidParameterError("chi_t must be below omega_t0")

    def to_dict(self) -> dict:
        return {
            "omega_t0_hz": self.omega_t0_hz,
            "omega_r0_hz": self.omega_r0_hz,
            "g_hz": self.g_hz,
            "chi_t_hz": self.chi_t_hz,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CircuitParams":
        return cls(d["omega_t0_hz"], d["omega_r0_hz"], d["g_hz"], d["chi_t_hz"])


@dataclass(frozen=True)
class NormalModeParams:
    """Normal-mode-basis parameters, linear Hz.

    ``chi_r`` is the Duffing nonlinearity inherited by the resonator-like
    mode through hybridization.
    """

    omega_t1_hz: float
    omega_r1_hz: float
    chi_t_hz: float
    chi_r_hz: float

    def __post_init__(self):
        if min(self.omega_t1_hz, self.omega_r1_hz) <= 0:
            raise InvalidParameterError("mode frequencies must be positive")
        if self.chi_t_hz < 0 or self.chi_r_hz < 0:
            raise InvalidParameterError(
                "negative chi: fractional powers undefined"
            )
        if self.chi_r_hz > self.chi_t_hz:
            raise InvalidParameterError("chi_r cannot exceed chi_t (inherited nonlinearity)")

    @property
    def chi_tr_hz(self) -> float:
        """Cross nonlinearity sqrt(chi_t * chi_r); mirrors A_tr ~ sqrt(A_t A_r)."""
        return float(np.sqrt(self.chi_t_hz * self.chi_r_hz))

    def to_dict(self) -> dict:
        return {
            "omega_t1_hz": self.omega_t1_hz,
            "omega_r1_hz": self.omega_r1_hz,
            "chi_t_hz": self.chi_t_hz,
            "chi_r_hz": self.chi_r_hz,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormalModeParams":
        return cls(d["omega_t1_hz"], d["omega_r1_hz"], d["chi_t_hz"], d["chi_r_hz"])


@dataclass(frozen=True)
class ObservedParams:
    """Experimentally observable transition frequencies and anharmonicities."""

    omega_t_hz: float
    omega_r_hz: float
    a_t_hz: float
    a_r_hz: float = 0.0
    a_tr_hz: float = 0.0

    def __post_init__(self):
        if min(self.omega_t_hz, self.omega_r_hz, self.a_t_hz) <= 0:
            raise InvalidParameterError("frequencies and a_t must be positive")
        if not (self.a_t_hz > self.a_tr_hz >= self.a_r_hz >= 0):
            raise InvalidParameterError("expected a_t > a_tr >= a_r >= 0")

    def cross_kerr_mismatch(self) -> float:
        """Relative deviation of a_tr^2 from a_t*a_r (checked, not enforced)."""
        if self.a_r_hz == 0:
            return float("nan")
        return abs(self.a_tr_hz**2 / (self.a_t_hz * self.a_r_hz) - 1.0)

    def to_dict(self) -> dict:
        return {
            "omega_t_hz": self.omega_t_hz,
            "omega_r_hz": self.omega_r_hz,
            "a_t_hz": self.a_t_hz,
            "a_r_hz": self.a_r_hz,
            "a_tr_hz": self.a_tr_hz,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ObservedParams":
        return cls(d["omega_t_hz"], d["omega_r_hz"], d["a_t_hz"],
                   d.get("a_r_hz", 0.0), d.get("a_tr_hz", 0.0))


def params_to_yaml(params) -> str:
    return yaml.safe_dump(params.to_dict(), sort_keys=True)


def params_from_yaml(text: str, cls):
    return cls.from_dict(yaml.safe_load(text))


# ---------------------------------------------------------------------------
# Fock-space operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FockOperator:
    """Dense operator on a truncated two-mode Fock space.

    ``dims = (n_t, n_r)`` are the level counts; ``data`` is the
    (n_t*n_r) x (n_t*n_r) complex matrix.  ``warnings`` carries diagnostic
    records (e.g. truncation leakage) attached by the builders.
    """

    dims: tuple
    data: np.ndarray
    warnings: tuple = ()

    @property
    def dim(self) -> int:
        return self.dims[0] * self.dims[1]

    def dag(self) -> "FockOperator":
        return replace(self, data=self.data.conj().T)

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        scale = np.abs(self.data).max()
        if scale == 0:
            return True
        return np.abs(self.data - self.data.conj().T).max() < rtol * scale


def _destroy(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1.0, n)), 1).astype(complex)


def ladder(dims, mode: Mode) -> FockOperator:
    """Annihilation operator of one mode on the two-mode product space.

    The selected mode needs at least two levels; the spectator mode may be
    a single level (identity factor).
    """
    n_t, n_r = dims
    selected = n_t if mode is Mode.TRANSMON else n_r
    if selected < 2 or min(n_t, n_r) < 1:
        raise InvalidDimensionError(
            f"dims {dims}: the {mode.value} mode needs >= 2 levels"
        )
    if mode is Mode.TRANSMON:
        data = np.kron(_destroy(n_t), np.eye(n_r))
    else:
        data = np.kron(np.eye(n_t), _destroy(n_r))
    return FockOperator(dims=(n_t, n_r), data=data)


def state_label(n_t_level: int, n_r_level: int) -> str:
    """'g0', 'e1', 'f0', ... ; transmon levels beyond 'h' become 't4' etc."""
    letter = _LETTERS[n_t_level] if n_t_level < len(_LETTERS) else f"t{n_t_level}"
    return f"{letter}{n_r_level}"


def _leakage_warnings(h: np.ndarray, dims, tol: float) -> tuple:
    """Top-Fock-level population of the six lowest labelled eigenstates."""
    n_t, n_r = dims
    vals, vecs = np.linalg.eigh(h)
    order = np.argsort(vals)[: min(6, h.shape[0])]
    pop = np.abs(vecs[:, order]) ** 2
    grid = pop.reshape(n_t, n_r, -1)
    top = grid[-1, :, :].sum(axis=0) + grid[:, -1, :].sum(axis=0)
    worst = float(top.max())
    if worst > tol:
        return (
            f"truncation leakage {worst:.2e} above tolerance {tol:.2e} "
            f"for dims {dims}; increase the truncation",
        )
    return ()


def build_h_uncoupled(p: CircuitParams, dims, leakage_tol: float = 1e-3) -> FockOperator:
    """Uncoupled-basis Hamiltonian (rad/s): transverse coupling plus the
    transmon Duffing quartic -chi_t (alpha+alpha^dag)^4 / 12."""
    a = ladder(dims, Mode.TRANSMON).data
    b = ladder(dims, Mode.RESONATOR).data
    ad, bd = a.conj().T, b.conj().T
    xa, xb = a + ad, b + bd
    h = (
        (p.omega_t0_hz + p.chi_t_hz) * (ad @ a)
        + p.omega_r0_hz * (bd @ b)
        + p.g_hz * (xa @ xb)
        - (p.chi_t_hz / 12.0) * np.linalg.matrix_power(xa, 4)
    )
    h *= TWO_PI
    h = 0.5 * (h + h.conj().T)
    return FockOperator(dims=tuple(dims), data=h,
                        warnings=_leakage_warnings(h, dims, leakage_tol))


def build_h_normal(p: NormalModeParams, dims, leakage_tol: float = 1e-3) -> FockOperator:
    """Normal-mode-basis Hamiltonian (rad/s) with the mixed quartic
    [chi_t^(1/4)(a+a^dag) + chi_r^(1/4)(b+b^dag)]^4 / 12 subtracted."""
    if p.chi_t_hz < 0 or p.chi_r_hz < 0:
        raise InvalidParameterError("negative chi: fractional powers undefined")
    a = ladder(dims, Mode.TRANSMON).data
    b = ladder(dims, Mode.RESONATOR).data
    ad, bd = a.conj().T, b.conj().T
    q = p.chi_t_hz**0.25 * (a + ad) + p.chi_r_hz**0.25 * (b + bd)
    h = (
        (p.omega_t1_hz + p.chi_t_hz) * (ad @ a)
        + p.omega_r1_hz * (bd @ b)
        - np.linalg.matrix_power(q, 4) / 12.0
    )
    h *= TWO_PI
    h = 0.5 * (h + h.conj().T)
    return FockOperator(dims=tuple(dims), data=h,
                        warnings=_leakage_warnings(h, dims, leakage_tol))


# ---------------------------------------------------------------------------
# labelled eigensystem
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LabelledSpectrum:
    """Eigensystem of a two-mode Hamiltonian with bare-product labels.

    Eigenstates are matched to bare Fock states |n_t, n_r> by maximizing
    the total overlap (optimal assignment), which is the adiabatic
    labelling appropriate to the dispersive regime.
    """

    dims: tuple
    energies_hz: np.ndarray  # indexed like eigvecs columns
    states: np.ndarray  # eigvecs, column k is eigenstate k
    index: dict  # (n_t, n_r) -> eigenstate column

    def energy_hz(self, n_t: int, n_r: int) -> float:
        return float(self.energies_hz[self.index[(n_t, n_r)]])

    def state(self, n_t: int, n_r: int) -> np.ndarray:
        return self.states[:, self.index[(n_t, n_r)]]

    def transition_hz(self, upper, lower) -> float:
        return self.energy_hz(*upper) - self.energy_hz(*lower)

    def observed(self) -> ObservedParams:
        e = self.energy_hz
        return ObservedParams(
            omega_t_hz=e(1, 0) - e(0, 0),
            omega_r_hz=e(0, 1) - e(0, 0),
            a_t_hz=2 * e(1, 0) - e(0, 0) - e(2, 0),
            a_r_hz=2 * e(0, 1) - e(0, 0) - e(0, 2),
            a_tr_hz=0.5 * ((e(0, 1) - e(0, 0)) - (e(1, 1) - e(1, 0))),
        )


def labelled_eigensystem(h: FockOperator) -> LabelledSpectrum:
    n_t, n_r = h.dims
    vals, vecs = np.linalg.eigh(h.data)
    overlap = np.abs(vecs) ** 2  # overlap[bare, eig]
    bare_idx, eig_idx = linear_sum_assignment(-overlap)
    index = {(int(bare) // n_r, int(bare) % n_r): int(k)
             for bare, k in zip(bare_idx, eig_idx)}
    return LabelledSpectrum(dims=h.dims, energies_hz=vals / TWO_PI,
                            states=vecs, index=index)


def observed_from_circuit(p: CircuitParams, dims=(7, 7)) -> ObservedParams:
    """Observed transition frequencies/anharmonicities of the bare model."""
    return labelled_eigensystem(build_h_uncoupled(p, dims)).observed()


# ---------------------------------------------------------------------------
# basis transforms / parameter extraction
# ---------------------------------------------------------------------------


def normal_mode_transform(p: CircuitParams) -> NormalModeParams:
    """Symplectic (Bogoliubov) diagonalization of the quadratic part of the
    uncoupled Hamiltonian, including counter-rotating coupling terms.

    The transmon quartic chi_t*x_t^4 becomes the mixed quartic of the
    normal basis with chi inherited through the position weights:
    chi_t -> chi_t*c_a^4, chi_r = chi_t*lambda^4 where x_t = c_a*X_a +
    lambda*X_b in normal-mode quadratures.
    """
    w_t = p.omega_t0_hz + p.chi_t_hz  # quadratic transmon coefficient
    w_r = p.omega_r0_hz
    if w_t * w_r <= 4.0 * p.g_hz**2:
        raise UnstableSystemError(
            "quadratic form not positive definite (4 g^2 >= omega_t~ * omega_r)"
        )
    t_sqrt = np.diag([np.sqrt(w_t), np.sqrt(w_r)])
    v = np.array([[w_t, 2.0 * p.g_hz], [2.0 * p.g_hz, w_r]])
    w_mat = t_sqrt @ v @ t_sqrt
    lam, o = np.linalg.eigh(w_mat)
    if lam.min() <= 0:
        raise UnstableSystemError("non-positive normal-mode eigenvalue")
    freqs = np.sqrt(lam)
    t_idx = int(np.argmax(np.abs(o[0, :])))
    r_idx = 1 - t_idx
    mixing = t_sqrt @ o / lam**0.25  # bare quadratures in normal quadratures
    c_a = abs(float(mixing[0, t_idx]))
    lam_w = abs(float(mixing[0, r_idx]))
    chi_t1 = p.chi_t_hz * c_a**4
    chi_r = p.chi_t_hz * lam_w**4
    return NormalModeParams(
        omega_t1_hz=float(freqs[t_idx]) - chi_t1,
        omega_r1_hz=float(freqs[r_idx]),
        chi_t_hz=chi_t1,
        chi_r_hz=chi_r,
    )


def observed_to_bare(
    obs: ObservedParams,
    guess: CircuitParams,
    dims=(7, 7),
    tol_hz: float = 1e3,
    max_iter: int = 200,
) -> CircuitParams:
    """Root-find bare parameters whose eigenspectrum reproduces the observed
    omega_t, omega_r, A_t and A_tr (A_r is not used).  Converged when all
    four targets match within ``tol_hz``."""
    scale = np.array([guess.omega_t0_hz, guess.omega_r0_hz,
                      max(guess.g_hz, 1e6), max(guess.chi_t_hz, 1e6)])
    targets = np.array([obs.omega_t_hz, obs.omega_r_hz, obs.a_t_hz, obs.a_tr_hz])

    def residual(x):
        wt0, wr0, g, chi = x * scale
        try:
            o = observed_from_circuit(
                CircuitParams(wt0, wr0, max(g, 0.0), chi), dims
            )
        except InvalidParameterError:
            return np.full(4, 1e6)
        got = np.array([o.omega_t_hz, o.omega_r_hz, o.a_t_hz, o.a_tr_hz])
        return (got - targets) / 1e6  # MHz-scaled residuals

    sol = root(residual, np.ones(4), method="hybr",
               options={"xtol": 1e-12, "maxfev": max_iter * 5})
    x = sol.x
    res_hz = np.abs(residual(x)) * 1e6
    if res_hz.max() > tol_hz:
        # trust-region polish; robust when g ~ 0 flattens the A_tr direction
        polish = least_squares(residual, x, xtol=3e-16, ftol=3e-16, gtol=1e-14,
                               max_nfev=max_iter * 5)
        x = polish.x
        res_hz = np.abs(residual(x)) * 1e6
    if res_hz.max() > tol_hz:
        raise NoConvergenceError(
            f"observed_to_bare residuals {res_hz} Hz exceed {tol_hz} Hz",
            residuals=res_hz,
            last_value=x * scale,
        )
    wt0, wr0, g, chi = x * scale
    return CircuitParams(wt0, wr0, abs(g), chi)
