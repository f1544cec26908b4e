"""Lindblad generator, steady-state solvers, spectrum, and time evolution.

The master equation is

    d rho/dt = -i*omega*[Sx, rho]
               + (gamma/N) * (2 St rho St' - St'St rho - rho St'St)

with jump operator St = cos(theta)*S- + sin(theta)*S+ (St' its adjoint).

Density matrices are vectorized by row stacking (numpy C order), so
vec(A @ rho @ B) = kron(A, B.T) @ vec(rho) and a matrix is recovered
with .reshape(dim, dim).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
import scipy.sparse as sparse
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import splu

from .errors import (
    ConvergenceError,
    DegenerateSteadyStateError,
    SolverError,
    ValidationError,
)
from .operators import ModelParams, SpinOperatorSet, build_operators, _require_density


@dataclass(frozen=True)
class LindbladGenerator:
    """Sparse superoperator for one parameter point.

    collapse_rate is the gamma/N prefactor multiplying the dissipator.
    """

    params: ModelParams
    ops: SpinOperatorSet
    matrix: sparse.csc_matrix
    collapse_rate: float

    @property
    def dimension(self) -> int:
        return self.ops.dimension

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Action of the generator on a (dim, dim) matrix."""
        d = self.dimension
        return (self.matrix @ rho.reshape(d * d)).reshape(d, d)


@dataclass(frozen=True)
class SolverConfig:
    """Steady-state solver knobs.

    method: 'auto' (shift-invert power iteration, then dense null space,
    then time evolution), or one of 'power' | 'null' | 'evolve'.
    shift and tol default to 1e-8*gamma and 1e-10*gamma.
    degeneracy_tol is in units of gamma: a second Liouvillian mode with
    |lambda| below it makes the steady state count as degenerate.
    """

    method: str = "auto"
    shift: float | None = None
    tol: float | None = None
    max_iter: int = 50
    dense_cap: int = 4096
    check_degeneracy: bool = True
    degeneracy_tol: float = 1e-6
    positivity_tol: float = 1e-9
    seed: int = 0
    evolve_chunk: float = 25.0
    evolve_max_time: float = 4000.0
    # tight enough that the integrator noise floor sits well below the
    # 1e-10*gamma residual target
    evolve_rtol: float = 1e-11
    evolve_atol: float = 1e-15

    def resolved(self, gamma: float) -> "SolverConfig":
        upd = {}
        if self.shift is None:
            upd["shift"] = 1e-8 * gamma
        if self.tol is None:
            upd["tol"] = 1e-10 * gamma
        return replace(self, **upd) if upd else self


@dataclass(frozen=True)
class SteadyState:
    """Steady density matrix with its spectral decomposition.

    populations are sorted descending; basis[:, n] is the eigenvector
    belonging to populations[n]. residual is the Frobenius norm of
    L(rho) for the returned rho.
    """

    rho: np.ndarray
    populations: np.ndarray
    basis: np.ndarray
    residual: float
    purity: float
    method: str
    iterations: int = 0

    @property
    def dimension(self) -> int:
        return self.rho.shape[0]

    @classmethod
    def from_density(cls, rho: np.ndarray, method: str = "external") -> "SteadyState":
        """Wrap an externally produced density matrix (no residual check)."""
        _require_density(rho)
        return _finalize(np.asarray(rho, dtype=complex), None, method, 0, SolverConfig())


@dataclass(frozen=True)
class SpectrumReport:
    """Leading Liouvillian eigenvalues, sorted by descending real part."""

    eigenvalues: np.ndarray
    gap: float
    method: str


def build_generator(params: ModelParams) -> LindbladGenerator:
    """Assemble the vectorized Lindblad superoperator, stored sparse."""
    ops = build_operators(params)
    d = ops.dimension
    rate = params.gamma / params.n_spins
    eye = sparse.identity(d, dtype=complex, format="csr")
    sx = sparse.csr_matrix(ops.sx)
    st = sparse.csr_matrix(ops.s_theta)
    std_st = sparse.csr_matrix(ops.s_theta.conj().T @ ops.s_theta)

    mat = -1j * params.omega * (sparse.kron(sx, eye) - sparse.kron(eye, sx.T)) + rate * (
        2 * sparse.kron(st, st.conj())
        - sparse.kron(std_st, eye)
        - sparse.kron(eye, std_st.T)
    )
    return LindbladGenerator(params, ops, mat.tocsc(), rate)


def _normalized_residual(matrix: sparse.csc_matrix, rho: np.ndarray) -> float:
    return float(np.linalg.norm(matrix @ rho.reshape(-1)))


def _finalize(
    rho_raw: np.ndarray,
    gen: LindbladGenerator | None,
    method: str,
    iterations: int,
    cfg: SolverConfig,
) -> SteadyState:
    """Hermitize, trace-normalize, clamp the spectrum, and package."""
    rho = (rho_raw + rho_raw.conj().T) / 2
    tr = np.trace(rho).real
    if abs(tr) < 1e-12:
        raise SolverError("candidate steady state has vanishing trace")
    rho = rho / tr

    p, v = np.linalg.eigh(rho)
    if p.min() < -cfg.positivity_tol:
        raise SolverError(f"steady state has negative eigenvalue {p.min():.2e}")
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    order = np.argsort(p)[::-1]
    p = p[order]
    v = v[:, order]
    rho = (v * p) @ v.conj().T
    rho = (rho + rho.conj().T) / 2

    residual = _normalized_residual(gen.matrix, rho) if gen is not None else 0.0
    return SteadyState(
        rho=rho,
        populations=p,
        basis=v,
        residual=residual,
        purity=float((p**2).sum()),
        method=method,
        iterations=iterations,
    )


def _degeneracy_probe(
    matrix: sparse.csc_matrix,
    lu,
    null_vec: np.ndarray,
    shift: float,
    gamma: float,
    cfg: SolverConfig,
    steps: int = 6,
) -> None:
    """Detect a second near-zero mode via deflated shift-invert growth.

    vec(identity) is the left null vector of any trace-preserving
    generator, so projecting out the zero mode's spectral component
    leaves the decaying modes. If the inverse iteration still amplifies
    by more than 1/(degeneracy_tol*gamma), a second eigenvalue sits
    within degeneracy_tol*gamma of zero.
    """
    dim2 = matrix.shape[0]
    d = int(round(math.sqrt(dim2)))
    w = np.eye(d, dtype=complex).reshape(-1)
    v = null_vec / np.linalg.norm(null_vec)
    overlap = w.conj() @ v
    if abs(overlap) < 1e-12:
        raise SolverError("null vector is traceless; cannot deflate zero mode")

    rng = np.random.default_rng(cfg.seed)
    x = rng.standard_normal(dim2) + 1j * rng.standard_normal(dim2)
    threshold = 1.0 / (cfg.degeneracy_tol * gamma)
    for _ in range(steps):
        x = x - v * ((w.conj() @ x) / overlap)
        nrm = np.linalg.norm(x)
        if nrm == 0.0:
            return
        x = lu.solve(x / nrm)
        amp = np.linalg.norm(x)
        if not np.isfinite(amp):
            raise DegenerateSteadyStateError(
                "inverse iteration diverged on the deflated space"
            )
        if amp > threshold:
            lam = shift + 1.0 / amp
            raise DegenerateSteadyStateError(
                f"second Liouvillian mode within {lam:.2e} of zero; "
                "steady state is not unique at this tolerance"
            )


def _solve_power(gen: LindbladGenerator, cfg: SolverConfig) -> SteadyState:
    mat = gen.matrix
    d = gen.dimension
    gamma = gen.params.gamma
    eye = sparse.identity(d * d, dtype=complex, format="csc")
    try:
        lu = splu((mat - cfg.shift * eye).tocsc())
    except RuntimeError as exc:
        raise ConvergenceError(f"sparse LU factorization failed: {exc}") from exc

    x = (np.eye(d, dtype=complex) / d).reshape(-1)
    rho = None
    for iteration in range(1, cfg.max_iter + 1):
        y = lu.solve(x)
        nrm = np.linalg.norm(y)
        if not np.isfinite(nrm) or nrm == 0.0:
            raise ConvergenceError("inverse power iteration produced a non-finite vector")
        y = y / nrm
        cand = y.reshape(d, d)
        cand = (cand + cand.conj().T) / 2
        tr = np.trace(cand).real
        if abs(tr) > 1e-12:
            cand = cand / tr
            res = _normalized_residual(mat, cand)
            if res < cfg.tol:
                rho = cand
                break
        x = y
    if rho is None:
        raise ConvergenceError(
            f"power iteration did not reach residual {cfg.tol:.1e} in {cfg.max_iter} steps"
        )
    if cfg.check_degeneracy:
        _degeneracy_probe(mat, lu, y, cfg.shift, gamma, cfg)
    return _finalize(rho, gen, "power", iteration, cfg)


def _solve_dense_null(gen: LindbladGenerator, cfg: SolverConfig) -> SteadyState:
    d = gen.dimension
    if d * d > cfg.dense_cap:
        raise ValidationError(
            f"dense null-space path needs (N+1)^2 <= {cfg.dense_cap}, got {d * d}"
        )
    dense = gen.matrix.toarray()
    _, svals, vh = np.linalg.svd(dense)
    null_tol = svals[0] * 1e-10
    null_dim = int((svals < null_tol).sum())
    if null_dim == 0:
        raise ConvergenceError("no singular value below the null-space tolerance")
    if null_dim > 1:
        raise DegenerateSteadyStateError(
            f"null space has dimension {null_dim}; steady state is not unique"
        )
    rho = vh[-1].conj().reshape(d, d)
    return _finalize(rho, gen, "null", 1, cfg)


def _solve_evolve(gen: LindbladGenerator, cfg: SolverConfig) -> SteadyState:
    d = gen.dimension
    gamma = gen.params.gamma
    rho = np.eye(d, dtype=complex) / d
    elapsed = 0.0
    chunk = cfg.evolve_chunk / gamma
    while elapsed < cfg.evolve_max_time / gamma:
        traj = evolve(gen, rho, chunk, rtol=cfg.evolve_rtol, atol=cfg.evolve_atol)
        rho = traj.states[-1]
        elapsed += chunk
        if _normalized_residual(gen.matrix, rho) < cfg.tol:
            return _finalize(rho, gen, "evolve", int(elapsed / chunk), cfg)
    raise ConvergenceError(
        f"time evolution did not reach residual {cfg.tol:.1e} "
        f"within t = {cfg.evolve_max_time / gamma:.1f}"
    )


def solve_steady_state(gen: LindbladGenerator, config: SolverConfig | None = None) -> SteadyState:
    """Solve L(rho) = 0 for the unique steady state.

    A degenerate kernel (more than one steady state within tolerance)
    raises DegenerateSteadyStateError instead of silently averaging.
    """
    cfg = (config or SolverConfig()).resolved(gen.params.gamma)
    if cfg.method == "power":
        return _solve_power(gen, cfg)
    if cfg.method == "null":
        return _solve_dense_null(gen, cfg)
    if cfg.method == "evolve":
        return _solve_evolve(gen, cfg)
    if cfg.method != "auto":
        raise ValidationError(f"unknown solver method {cfg.method!r}")

    try:
        return _solve_power(gen, cfg)
    except DegenerateSteadyStateError:
        raise
    except SolverError:
        pass
    if gen.dimension**2 <= cfg.dense_cap:
        try:
            return _solve_dense_null(gen, cfg)
        except DegenerateSteadyStateError:
            raise
        except SolverError:
            pass
    return _solve_evolve(gen, cfg)


def liouvillian_spectrum(
    gen: LindbladGenerator, k: int = 6, dense_cap: int = 4096
) -> SpectrumReport:
    """Leading-k Liouvillian eigenvalues and the spectral gap.

    Small problems are diagonalized densely; larger ones use a
    shift-invert Arnoldi run targeting the slowest modes. gap is
    -Re of the second eigenvalue (the asymptotic decay rate).
    """
    if k < 2:
        raise ValidationError("k must be at least 2 to define a gap")
    dim2 = gen.dimension**2
    if dim2 <= dense_cap:
        vals = scipy.linalg.eigvals(gen.matrix.toarray())
        method = "dense"
    else:
        k_eff = min(k + 4, dim2 - 2)
        sigma = 1e-4 * gen.params.gamma
        try:
            vals = sparse.linalg.eigs(
                gen.matrix, k=k_eff, sigma=sigma, return_eigenvectors=False
            )
        except sparse.linalg.ArpackNoConvergence as exc:
            raise ConvergenceError(f"ARPACK did not converge: {exc}") from exc
        method = "arnoldi"
    order = np.argsort(-vals.real)
    vals = vals[order][:k]
    return SpectrumReport(eigenvalues=vals, gap=float(-vals[1].real), method=method)


@dataclass(frozen=True)
class Trajectory:
    """Density-matrix trajectory from adaptive integration."""

    times: np.ndarray
    states: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def evolve(
    gen: LindbladGenerator,
    rho_in: np.ndarray,
    t_final: float,
    *,
    t_eval: np.ndarray | None = None,
    rtol: float = 1e-8,
    atol: float = 1e-12,
    max_step: float = np.inf,
) -> Trajectory:
    """Integrate d(vec rho)/dt = L vec(rho) with adaptive RK45.

    Aborts if the trace drifts from 1 by more than 1e-6; returned
    states are hermitized and trace-normalized.
    """
    _require_density(rho_in)
    if t_final < 0:
        raise ValidationError("t_final must be nonnegative")
    if t_final == 0:
        return Trajectory(np.array([0.0]), np.asarray(rho_in, dtype=complex)[None, :, :])

    d = gen.dimension
    mat = gen.matrix

    def rhs(_t: float, v: np.ndarray) -> np.ndarray:
        return mat @ v

    sol = solve_ivp(
        rhs,
        (0.0, float(t_final)),
        np.asarray(rho_in, dtype=complex).reshape(-1),
        method="RK45",
        t_eval=t_eval,
        rtol=rtol,
        atol=atol,
        max_step=max_step,
    )
    if not sol.success:
        raise SolverError(f"time integration failed: {sol.message}")

    states = sol.y.T.reshape(-1, d, d)
    traces = np.einsum("tii->t", states).real
    drift = np.abs(traces - 1.0).max()
    if drift > 1e-6:
        raise SolverError(f"trace drifted by {drift:.2e} (> 1e-6) during evolution")
    states = (states + states.conj().transpose(0, 2, 1)) / 2
    states = states / traces[:, None, None]
    return Trajectory(sol.t, states)
