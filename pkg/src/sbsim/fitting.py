"""Nonlinear least-squares estimation of spectrum-model parameters.

A damped Gauss-Newton (Levenberg) minimizer with numerical central-difference
Jacobians drives all fits: single-spectrum fits, the two-stage
cross-anharmonicity calibration, and the rate-versus-shift line fit.  Two
affine nuisance parameters (amplitude scale and baseline) are always free so
results are insensitive to the overall transmission normalization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .eit import EitParams, Spectrum, spectrum
from .errors import IdentifiabilityError, InvalidParameterError, NoConvergenceError

#: Levenberg damping schedule
DAMPING_START = 1e-3
DAMPING_UP = 10.0
DAMPING_DOWN = 10.0
DAMPING_MAX = 1e12
#: relative central-difference step (of the parameter scale)
JACOBIAN_STEP = 1e-6
#: relative singular-value floor below which the Jacobian counts as singular
SINGULAR_TOL = 1e-10

_EIT_FIELDS = {f.name for f in fields(EitParams)}


@dataclass(frozen=True)
class FitParameter:
    name: str
    guess: float
    lower: float = -math.inf
    upper: float = math.inf
    scale: float | None = None

    def __post_init__(self):
        if not (self.lower <= self.guess <= self.upper):
            raise InvalidParameterError(
                f"guess for {self.name} outside bounds [{self.lower}, {self.upper}]"
            )

    @property
    def scale_value(self) -> float:
        if self.scale is not None:
            return abs(self.scale)
        if self.guess != 0:
            return abs(self.guess)
        if math.isfinite(self.upper - self.lower):
            return 0.1 * (self.upper - self.lower)
        return 1.0


@dataclass(frozen=True)
class FitProblem:
    """Spectrum data plus the parameterization of an EIT model fit.

    ``free`` lists the floating physical parameters (EitParams field names);
    everything else is pinned at the template's values, optionally overridden
    through ``fixed``.
    """

    omega_p_hz: np.ndarray
    data: np.ndarray
    template: EitParams
    free: tuple
    fixed: dict = field(default_factory=dict)
    sigma: np.ndarray | None = None
    use_magnitude: bool = True

    def __post_init__(self):
        free_names = {p.name for p in self.free}
        if len(free_names) != len(self.free):
            raise InvalidParameterError("duplicate free parameter names")
        overlap = free_names & set(self.fixed)
        if overlap:
            raise InvalidParameterError(f"parameters both free and fixed: {sorted(overlap)}")
        unknown = (free_names | set(self.fixed)) - _EIT_FIELDS
        if unknown:
            raise InvalidParameterError(f"unknown EitParams fields: {sorted(unknown)}")
        n_free = len(self.free) + (2 if self.use_magnitude else 3)
        n_data = len(self.omega_p_hz) * (1 if self.use_magnitude else 2)
        if n_data < 5 * len(self.free):
            raise InvalidParameterError(
                f"{n_data} data points for {len(self.free)} free parameters (< 5x)"
            )
        if len(self.data) != len(self.omega_p_hz):
            raise InvalidParameterError("data and probe grid lengths differ")

    @classmethod
    def from_spectrum(cls, spec: Spectrum, template: EitParams, free, fixed=None,
                      sigma=None, use_magnitude=True) -> "FitProblem":
        data = spec.magnitude if use_magnitude else spec.s21
        return cls(omega_p_hz=spec.omega_p_hz, data=np.asarray(data),
                   template=template, free=tuple(free), fixed=dict(fixed or {}),
                   sigma=sigma, use_magnitude=use_magnitude)


@dataclass(frozen=True)
class FitResult:
    estimates: dict
    stderr: dict
    residual_norm: float
    converged: bool
    iterations: int

    def record(self) -> list:
        return [
            {"name": k, "value_hz": v, "stderr_hz": self.stderr.get(k, float("nan"))}
            for k, v in self.estimates.items()
        ]


# ---------------------------------------------------------------------------
# Levenberg core
# ---------------------------------------------------------------------------


def _jacobian(fun, x, scales):
    """Central differences with relative step JACOBIAN_STEP of each scale."""
    r0 = fun(x)
    jac = np.empty((len(r0), len(x)))
    for i in range(len(x)):
        h = JACOBIAN_STEP * scales[i]
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        jac[:, i] = (fun(xp) - fun(xm)) / (2.0 * h)
    return jac, r0


def _check_identifiable(jac_scaled, names):
    sv = np.linalg.svd(jac_scaled, compute_uv=False)
    if sv[0] == 0 or sv[-1] < SINGULAR_TOL * sv[0]:
        _, _, vt = np.linalg.svd(jac_scaled)
        null = np.abs(vt[-1])
        pair = tuple(np.array(names)[np.argsort(null)[-2:][::-1]])
        raise IdentifiabilityError(
            f"singular Jacobian: parameters {pair} are degenerate", parameter_pair=pair
        )


def levenberg_least_squares(fun, x0, lower, upper, scales, names=None,
                            max_iter: int = 60, cost_rtol: float = 1e-12,
                            step_rtol: float = 1e-10, trace: list | None = None):
    """Damped Gauss-Newton with multiplicative Levenberg damping.

    Accepted steps never increase the objective; the damping decreases
    tenfold on acceptance and grows tenfold on rejection.  Steps are clipped
    into the bounds box.  ``trace``, when given, collects the accepted
    objective values.  Returns (x, cov, residual, iterations, converged).
    """
    x = np.asarray(x0, dtype=float).copy()
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    scales = np.asarray(scales, dtype=float)
    names = names or [f"p{i}" for i in range(len(x))]
    lam = DAMPING_START
    jac, r = _jacobian(fun, x, scales)
    cost = float(r @ r)
    if trace is not None:
        trace.append(cost)
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        jn = jac * scales[None, :]
        _check_identifiable(jn, names)
        a = jn.T @ jn
        g = jn.T @ r
        accepted = False
        while lam <= DAMPING_MAX:
            try:
                step = np.linalg.solve(a + lam * np.diag(np.diag(a)), -g)
            except np.linalg.LinAlgError:
                lam *= DAMPING_UP
                continue
            x_new = np.clip(x + scales * step, lower, upper)
            r_new = fun(x_new)
            cost_new = float(r_new @ r_new)
            if cost_new <= cost:
                accepted = True
                lam = max(lam / DAMPING_DOWN, 1e-15)
                break
            lam *= DAMPING_UP
        if not accepted:
            break
        dx = np.abs(x_new - x) / scales
        dcost = cost - cost_new
        x, cost = x_new, cost_new
        if trace is not None:
            trace.append(cost)
        jac, r = _jacobian(fun, x, scales)
        if dcost <= cost_rtol * max(cost, 1e-300) or dx.max() <= step_rtol:
            converged = True
            break
    jn = jac * scales[None, :]
    dof = max(len(r) - len(x), 1)
    s2 = cost / dof
    try:
        cov_scaled = s2 * np.linalg.inv(jn.T @ jn)
        cov = cov_scaled * np.outer(scales, scales)
    except np.linalg.LinAlgError:
        cov = np.full((len(x), len(x)), np.nan)
    if not converged and not accepted and iterations >= max_iter:
        raise NoConvergenceError(
            f"no acceptable step after {iterations} iterations",
            residuals=r, last_value=x,
        )
    return x, cov, r, iterations, converged


# ---------------------------------------------------------------------------
# spectrum fitting
# ---------------------------------------------------------------------------


def _nuisance_parameters(use_magnitude: bool):
    pars = [FitParameter("scale", 1.0, 0.0, math.inf, scale=1.0)]
    if use_magnitude:
        pars.append(FitParameter("offset", 0.0, -math.inf, math.inf, scale=0.1))
    else:
        pars.append(FitParameter("offset_re", 0.0, scale=0.1))
        pars.append(FitParameter("offset_im", 0.0, scale=0.1))
    return pars


def fit_spectrum(problem: FitProblem, max_iter: int = 60) -> FitResult:
    """Minimize the weighted residual between the steady-state model and the
    data over the free parameters plus affine nuisances."""
    template = problem.template
    for name, value in problem.fixed.items():
        template = replace(template, **{name: value})
    phys = list(problem.free)
    nuis = _nuisance_parameters(problem.use_magnitude)
    pars = phys + nuis
    names = [p.name for p in pars]
    x0 = np.array([p.guess for p in pars])
    lower = np.array([p.lower for p in pars])
    upper = np.array([p.upper for p in pars])
    scales = np.array([p.scale_value for p in pars])
    weights = 1.0 if problem.sigma is None else 1.0 / np.asarray(problem.sigma)
    n_phys = len(phys)
    data = problem.data
    model_cache = {}

    def model_s21(x_phys):
        key = tuple(x_phys)
        if key not in model_cache:
            model = replace(template, **dict(zip(names[:n_phys], x_phys)))
            model_cache[key] = spectrum(model, problem.omega_p_hz,
                                        method="direct", escalate=False).s21
            if len(model_cache) > 256:
                model_cache.pop(next(iter(model_cache)))
        return model_cache[key]

    def residual(x):
        s21 = model_s21(x[:n_phys])
        if problem.use_magnitude:
            pred = x[n_phys] * np.abs(s21) + x[n_phys + 1]
            return ((pred - data) * weights).astype(float)
        pred = x[n_phys] * s21 + (x[n_phys + 1] + 1j * x[n_phys + 2])
        r = (pred - data) * weights
        return np.concatenate([r.real, r.imag])

    x, cov, r, iterations, converged = levenberg_least_squares(
        residual, x0, lower, upper, scales, names, max_iter=max_iter
    )
    stderr = np.sqrt(np.abs(np.diag(cov)))
    return FitResult(
        estimates=dict(zip(names, x.tolist())),
        stderr=dict(zip(names, stderr.tolist())),
        residual_norm=float(np.linalg.norm(r)),
        converged=converged,
        iterations=iterations,
    )


def calibrate_cross_anharmonicity(
    linear_data: Spectrum,
    nonlinear_data: Spectrum,
    template: EitParams,
    linear_probe_hz: float = 10e3,
    stage2_guesses: dict | None = None,
    stage1_dims: tuple | None = None,
    max_iter: int = 60,
):
    """Two-stage cross-anharmonicity calibration.

    Stage 1 fits {omega_sb, delta_omega_mat, omega_r, kappa, gamma} on the
    linear-response data with a_tr = 0 and the probe amplitude pinned;
    stage 2 fixes every stage-1 estimate and fits {amp_p, a_tr} on the
    nonlinear-response data.  ``stage1_dims`` may shrink the resonator
    truncation for the linear stage (occupancy there is ~(amp_p/kappa)^2).
    """
    t = template
    if stage1_dims is not None:
        template_stage1 = replace(template, dims=tuple(stage1_dims))
    else:
        template_stage1 = template
    stage1_free = (
        FitParameter("omega_sb_hz", t.omega_sb_hz, 0.0, 50e6),
        FitParameter("delta_omega_mat_hz", t.delta_omega_mat_hz,
                     -5e6, 5e6, scale=max(abs(t.delta_omega_mat_hz), 100e3)),
        FitParameter("omega_r_hz", t.omega_r_hz,
                     t.omega_r_hz - 20e6, t.omega_r_hz + 20e6, scale=1e6),
        FitParameter("kappa_hz", t.kappa_hz, 0.1 * t.kappa_hz, 10 * t.kappa_hz),
        FitParameter("gamma_hz", t.gamma_hz, 0.01 * t.gamma_hz, 100 * t.gamma_hz),
    )
    stage1_problem = FitProblem.from_spectrum(
        linear_data, template_stage1, stage1_free,
        fixed={"a_tr_hz": 0.0, "amp_p_hz": linear_probe_hz},
    )
    stage1 = fit_spectrum(stage1_problem, max_iter=max_iter)

    stage1_values = {k: v for k, v in stage1.estimates.items() if k in _EIT_FIELDS}
    guesses = {"amp_p_hz": max(10 * linear_probe_hz, template.amp_p_hz),
               "a_tr_hz": max(template.a_tr_hz, 100e3)}
    guesses.update(stage2_guesses or {})
    stage2_free = (
        FitParameter("amp_p_hz", guesses["amp_p_hz"], 1e3, 100e6),
        FitParameter("a_tr_hz", guesses["a_tr_hz"], 0.0, 10e6,
                     scale=max(guesses["a_tr_hz"], 100e3)),
    )
    stage2_problem = FitProblem.from_spectrum(
        nonlinear_data, template, stage2_free, fixed=stage1_values
    )
    stage2 = fit_spectrum(stage2_problem, max_iter=max_iter)
    return stage1, stage2


def rate_shift_line_fit(points) -> tuple:
    """Least-squares line through the origin for (|d_omega_t|, omega_sb) pairs.

    Returns (slope, slope standard error)."""
    pts = [(abs(x), y) for x, y in points]
    if len(pts) < 3:
        raise InvalidParameterError("need at least 3 points for the line fit")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    sxx = float(x @ x)
    if sxx == 0:
        raise InvalidParameterError("degenerate points (all at the origin)")
    slope = float(x @ y) / sxx
    resid = y - slope * x
    dof = max(len(pts) - 1, 1)
    stderr = math.sqrt(float(resid @ resid) / dof / sxx)
    return slope, stderr
