"""Gaussian fluctuations of the density process around its deterministic limit.

sqrt(n)-rescaled deviations of the per-type densities converge to a centered
Gaussian process solving a linear Volterra system driven by three noise
families: the initial-spreader empirical process (Y0_k, Z0_k), the
conversion noises (Y_kj, Z_kj) carrying the event times and retirement marks
of new spreaders, and the contact-stifling counting noise (B_kj).  This
module evaluates the closed-form noise covariances, assembles joint
covariance blocks on a time grid, samples the noises, solves the linear
system forward along a mean-field solution, and computes the matching
empirical statistics from replica sets.

Two assembly structures are available for the (Y_kj, Z_kj) pair block.

* "min_kernel": every entry depends on the times only through t ^ r, with
  the cross block equal to minus the Y block.  Written out, the equal-time
  2x2 minors are negative whenever F^c > F on the window, so the joint block
  is indefinite and sampling from it fails loudly.  Kept as the literal
  transcription of the tabulated rows for evaluation and comparison.
* "isometry" (sampling default): the second-moment structure of the
  defining compensated marked sums.  Var[Y_kj] and Var[Z_kj] agree with the
  min_kernel values at equal times; off the diagonal the Y block carries
  F^c((t v r) - s), and the cross block is
  int_0^t (F(r-s) - F(t-s)) a(s) ds for t < r and zero for t >= r,
  where a(s) = lambda c[k,j] X_k(s) Y_j(s).  Positive semidefinite by
  construction, so sampling succeeds up to quadrature roundoff.

The initial block is the same in both structures: Z0_k = -Y0_k pathwise, and
Cov[Y0_k(t), Y0_k(r)] = Y_k(0) F(t ^ r) F^c(t v r).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as _stats

from .errors import (
    FixedPointDiverged,
    GridMismatch,
    NotPSDAfterRidge,
    TimesOutsideGrid,
)
from .meanfield import MeanFieldSolution
from .stifling import StiflingLaw

__all__ = [
    "NoiseCovariance",
    "NoiseRealizations",
    "FluctuationSample",
    "EmpiricalFluctuations",
    "MomentStats",
    "VarianceScalingReport",
    "NoiseCheckRow",
    "NoiseCheckReport",
    "initial_noise_covariance",
    "eval_noise_covariance",
    "sample_limit_noises",
    "solve_fclt",
    "center_and_rescale",
    "variance_scaling_check",
    "moment_stats",
    "empirical_noise_check",
    "write_covariance_blocks",
]

_RIDGE_REL = 1e-12
_PAIRS = {"YY", "ZZ", "YZ", "ZY"}


def initial_noise_covariance(y0: float, law: StiflingLaw, t: float, r: float, pair: str = "YY") -> float:
    """Closed-form covariance of the initial-spreader noises at (t, r).

    y0 is the initial spreader density of the type; pair is one of
    "YY", "ZZ", "YZ", "ZY".  The Z0 path is minus the Y0 path, so the
    cross value is the negative of the shared variance profile.
    """
    if pair not in _PAIRS:
        raise ValueError(f"pair must be one of {sorted(_PAIRS)}")
    lo, hi = min(t, r), max(t, r)
    base = float(y0) * law.cdf(lo) * law.survival(hi)
    return -base if pair in ("YZ", "ZY") else base


def _psd_factor(mat: np.ndarray, block: str) -> np.ndarray:
    """Symmetric PSD square root with a relative ridge; loud beyond it.

    Eigenvalues above -ridge (ridge = 1e-12 * trace) are clipped to zero;
    anything more negative means the block is genuinely indefinite and the
    factorization refuses to paper over it.
    """
    sym = 0.5 * (mat + mat.T)
    trace = float(np.trace(sym))
    ridge = _RIDGE_REL * max(trace, 0.0)
    w, v = np.linalg.eigh(sym)
    if w[0] < -max(ridge, 1e-300):
        raise NotPSDAfterRidge(
            f"covariance block {block} has eigenvalue {w[0]:.3e} "
            f"below the ridge {ridge:.3e}",
            min_eigenvalue=float(w[0]),
            block=block,
        )
    keep = w > 0.0
    return v[:, keep] * np.sqrt(w[keep])


def _min_index_grid(n: int) -> np.ndarray:
    idx = np.arange(n)
    return np.minimum.outer(idx, idx)


@dataclass(frozen=True)
class NoiseCovariance:
    """Noise covariances along a mean-field solution, on a subset of its grid.

    Stores the cumulative variance profiles on the full solution grid
    (var_y, var_z, var_b, all (G, K, K)) and evaluates or assembles blocks
    at the requested times.  contact[k, j] = counts[k][j] / p_j.
    """

    solution: MeanFieldSolution
    times: np.ndarray  # (T,) requested grid times
    indices: np.ndarray  # (T,) positions in the solution grid
    y0: np.ndarray  # (K,) initial spreader densities
    contact: np.ndarray  # (K, K)
    cdf: np.ndarray  # (G,) F on the full grid
    survival_fn: np.ndarray  # (G,) F^c on the full grid
    arrival: np.ndarray  # (G, K, K) a(s) = lambda c[k,j] X_k(s) Y_j(s)
    stifle_rate: np.ndarray  # (G, K, K) b(s) = lambda c[k,j] Y_k(s) (p_j - X_j(s))
    var_y: np.ndarray  # (G, K, K) int_0^t F^c(t-s) a(s) ds
    var_z: np.ndarray  # (G, K, K) int_0^t F(t-s) a(s) ds
    var_b: np.ndarray  # (G, K, K) int_0^t b(s) ds

    @property
    def n_types(self) -> int:
        return self.y0.size

    @property
    def law(self) -> StiflingLaw:
        return self.solution.problem.law

    # -- point evaluation of the tabulated rows --------------------------

    def initial_autocovariance(self, k: int, t: float, r: float, pair: str = "YY") -> float:
        return initial_noise_covariance(self.y0[k], self.law, t, r, pair)

    def pair_autocovariance(self, k: int, j: int, t: float, r: float, pair: str = "YY") -> float:
        """Tabulated (Y_kj, Z_kj) rows: min-kernel values at grid times."""
        if pair not in _PAIRS:
            raise ValueError(f"pair must be one of {sorted(_PAIRS)}")
        i = self.solution.index_of(min(t, r))
        if pair == "YY":
            return float(self.var_y[i, k, j])
        if pair == "ZZ":
            return float(self.var_z[i, k, j])
        return -float(self.var_y[i, k, j])

    def stifling_autocovariance(self, k: int, j: int, t: float, r: float) -> float:
        i = self.solution.index_of(min(t, r))
        return float(self.var_b[i, k, j])

    # -- block assembly on the stored times -------------------------------

    def initial_block(self, k: int) -> np.ndarray:
        """Joint (Y0_k, Z0_k) covariance, shape (2T, 2T)."""
        f = self.cdf[self.indices]
        fc = self.survival_fn[self.indices]
        # F is nondecreasing and F^c nonincreasing, so both F(t ^ r) and
        # F^c(t v r) are the entrywise minima of the two value streams.
        s = self.y0[k] * np.minimum.outer(f, f) * np.minimum.outer(fc, fc)
        return np.block([[s, -s], [-s, s]])

    def _mark_kernel_matrix(self, k: int, j: int, kernel: np.ndarray) -> np.ndarray:
        """W[i, l] = int_0^{t_i ^ t_l} kernel((t_i v t_l) - s) a(s) ds."""
        g = self.solution.times.size
        dt = self.solution.problem.dt
        a = self.arrival[:, k, j]
        offs = np.arange(g)[None, :] - np.arange(g)[:, None]  # l - m
        gathered = np.where(offs >= 0, kernel[np.clip(offs, 0, g - 1)], 0.0)
        m1 = a[:, None] * gathered  # m1[m, l] = a(t_m) kernel(t_l - t_m)
        half0 = m1.copy()
        half0[0] *= 0.5
        cum = np.cumsum(half0, axis=0)
        upper = dt * (cum - 0.5 * m1)  # trapezoid end correction at m = i
        w = np.triu(upper)
        w = w + np.triu(w, 1).T
        sub = self.indices
        return w[np.ix_(sub, sub)]

    def pair_block(self, k: int, j: int, structure: str = "isometry") -> np.ndarray:
        """Joint (Y_kj, Z_kj) covariance, shape (2T, 2T)."""
        sub = self.indices
        mins = np.minimum.outer(sub, sub)
        zz = self.var_z[:, k, j][mins]
        if structure == "min_kernel":
            yy = self.var_y[:, k, j][mins]
            yz = -yy
            return np.block([[yy, yz], [yz.T, zz]])
        if structure != "isometry":
            raise ValueError("structure must be 'isometry' or 'min_kernel'")
        yy = self._mark_kernel_matrix(k, j, self.survival_fn)
        wf = self._mark_kernel_matrix(k, j, self.cdf)
        # Cov[Y(t_i), Z(t_l)] = int_0^{t_i} (F(t_l - s) - F(t_i - s)) a ds
        # for t_i < t_l and zero otherwise.
        vz_at_min = self.var_z[:, k, j][mins]
        yz = np.where(
            sub[:, None] < sub[None, :],
            wf - vz_at_min,
            0.0,
        )
        return np.block([[yy, yz], [yz.T, zz]])

    def stifling_block(self, k: int, j: int) -> np.ndarray:
        sub = self.indices
        return self.var_b[:, k, j][np.minimum.outer(sub, sub)]


def eval_noise_covariance(solution: MeanFieldSolution, times=None) -> NoiseCovariance:
    """Evaluate all noise covariance profiles along a mean-field solution.

    times defaults to the full solution grid and must be a subset of it.
    """
    problem = solution.problem
    law = problem.law
    grid = solution.times
    if times is None:
        indices = np.arange(grid.size)
    else:
        indices = np.array([solution.index_of(t) for t in np.atleast_1d(times)])
        if indices.size == 0:
            raise TimesOutsideGrid("need at least one evaluation time")
    sub_times = grid[indices]

    contact = problem.blueprint.contact_matrix()
    lam = problem.contact_rate
    p = np.array([float(v) for v in problem.blueprint.p])
    f = law.cdf(grid)
    fc = law.survival(grid)

    # a[s, k, j] drives conversions of type-k ignorants by type-j spreaders;
    # b[s, k, j] drives contact stifling of type-k spreaders.
    arrival = lam * contact[None, :, :] * solution.X[:, :, None] * solution.Y[:, None, :]
    stifle = lam * contact[None, :, :] * solution.Y[:, :, None] * (p[None, None, :] - solution.X[:, None, :])

    dt = problem.dt
    g = grid.size
    var_y = np.zeros((g,) + arrival.shape[1:])
    var_z = np.zeros_like(var_y)
    for k in range(arrival.shape[1]):
        for j in range(arrival.shape[2]):
            a = arrival[:, k, j]
            conv_fc = np.convolve(a, fc)[:g]
            conv_f = np.convolve(a, f)[:g]
            # trapezoid: halve the s = 0 and s = t endpoints
            var_y[:, k, j] = dt * (conv_fc - 0.5 * a[0] * fc - 0.5 * a * fc[0])
            var_z[:, k, j] = dt * (conv_f - 0.5 * a[0] * f - 0.5 * a * f[0])
    w = np.ones(g)
    w[0] = 0.5
    csum = np.cumsum(w[:, None, None] * stifle, axis=0)
    var_b = dt * (csum - 0.5 * stifle)
    var_b[0] = 0.0

    return NoiseCovariance(
        solution=solution,
        times=sub_times,
        indices=indices,
        y0=solution.Y[0].copy(),
        contact=contact,
        cdf=f,
        survival_fn=fc,
        arrival=arrival,
        stifle_rate=stifle,
        var_y=var_y,
        var_z=var_z,
        var_b=var_b,
    )


@dataclass(frozen=True)
class NoiseRealizations:
    """Sampled noise paths on a time grid, one row per realization."""

    times: np.ndarray  # (T,)
    initial_y: np.ndarray  # (S, K, T); the Z0 path is -initial_y
    pair_y: np.ndarray  # (S, K, K, T)
    pair_z: np.ndarray  # (S, K, K, T)
    stifling: np.ndarray  # (S, K, K, T)
    structure: str

    @property
    def n_samples(self) -> int:
        return self.initial_y.shape[0]

    @property
    def initial_z(self) -> np.ndarray:
        return -self.initial_y

    def driver_y(self) -> np.ndarray:
        """(S, K, T) sum of all noise inputs to the spreader equation."""
        return self.initial_y + self.pair_y.sum(axis=2) + self.stifling.sum(axis=2)

    def driver_z(self) -> np.ndarray:
        """(S, K, T) sum of all noise inputs to the stifler equation."""
        return self.initial_z + self.pair_z.sum(axis=2) - self.stifling.sum(axis=2)


def sample_limit_noises(
    cov: NoiseCovariance,
    seed=None,
    n_samples: int = 1,
    structure: str = "isometry",
) -> NoiseRealizations:
    """Draw zero-mean Gaussian noise paths with the covariances in cov.

    Blocks are sampled independently: (Y0_k, Z0_k) jointly per type,
    (Y_kj, Z_kj) jointly per ordered pair, B_kj alone.  Deterministic given
    the seed; block order is types ascending, then pairs in row-major order.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    k_types = cov.n_types
    t_len = cov.times.size
    s = n_samples

    initial_y = np.zeros((s, k_types, t_len))
    for k in range(k_types):
        # the Y0 marginal of the joint block; Z0 = -Y0 pathwise, so the Z
        # half and the cross block carry no extra randomness
        fac = _psd_factor(cov.initial_block(k)[:t_len, :t_len], f"initial[{k}]")
        if fac.shape[1]:
            initial_y[:, k, :] = rng.standard_normal((s, fac.shape[1])) @ fac.T

    pair_y = np.zeros((s, k_types, k_types, t_len))
    pair_z = np.zeros_like(pair_y)
    for k in range(k_types):
        for j in range(k_types):
            block = cov.pair_block(k, j, structure=structure)
            fac = _psd_factor(block, f"pair[{k},{j}]/{structure}")
            if fac.shape[1]:
                draw = rng.standard_normal((s, fac.shape[1])) @ fac.T
                pair_y[:, k, j, :] = draw[:, :t_len]
                pair_z[:, k, j, :] = draw[:, t_len:]

    stifling = np.zeros_like(pair_y)
    for k in range(k_types):
        for j in range(k_types):
            fac = _psd_factor(cov.stifling_block(k, j), f"stifling[{k},{j}]")
            if fac.shape[1]:
                stifling[:, k, j, :] = rng.standard_normal((s, fac.shape[1])) @ fac.T

    return NoiseRealizations(
        times=cov.times.copy(),
        initial_y=initial_y,
        pair_y=pair_y,
        pair_z=pair_z,
        stifling=stifling,
        structure=structure,
    )


@dataclass(frozen=True)
class FluctuationSample:
    """Realizations of the limiting fluctuation process on the grid.

    X, Y, Z have shape (S, G, K); each row is one realization driven by the
    corresponding row of the noise realizations.  X = -Y - Z identically.
    """

    times: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    noises: NoiseRealizations
    solution: MeanFieldSolution

    @property
    def n_samples(self) -> int:
        return self.Y.shape[0]

    def index_of(self, t: float) -> int:
        return self.solution.index_of(t)

    def at(self, t: float) -> np.ndarray:
        """(S, K, 3) fluctuations at a grid time."""
        i = self.index_of(t)
        return np.stack([self.X[:, i], self.Y[:, i], self.Z[:, i]], axis=-1)

    def to_csv(self, path) -> None:
        """Long format: sample_id, t, type, X, Y, Z."""
        s, g, k_types = self.Y.shape
        with open(path, "w") as fh:
            fh.write("sample_id,t,type,X,Y,Z\n")
            for i in range(s):
                for m in range(g):
                    for k in range(k_types):
                        fh.write(
                            f"{i},{self.times[m]:.10g},{k},"
                            f"{self.X[i, m, k]:.10g},{self.Y[i, m, k]:.10g},"
                            f"{self.Z[i, m, k]:.10g}\n"
                        )


def solve_fclt(
    cov: NoiseCovariance,
    noises: NoiseRealizations,
    initial_fluctuation=None,
) -> FluctuationSample:
    """Solve the linear fluctuation system along the mean-field solution.

    Trapezoidal marching; the implicit step endpoint is a (2K x 2K) linear
    solve shared by all noise realizations.  The noise grid must be the full
    solution grid.
    """
    sol = cov.solution
    grid = sol.times
    if noises.times.size != grid.size or not np.allclose(noises.times, grid):
        raise GridMismatch("noise realizations must live on the full solution grid")
    problem = sol.problem
    k_types = cov.n_types
    s = noises.n_samples
    lam = problem.contact_rate
    dt = problem.dt
    g = grid.size
    c = cov.contact
    p = np.array([float(v) for v in problem.blueprint.p])
    f = cov.cdf
    fc = cov.survival_fn

    init = np.zeros((k_types, 3)) if initial_fluctuation is None else np.asarray(initial_fluctuation, dtype=float)
    if init.shape != (k_types, 3):
        raise ValueError(f"initial_fluctuation must have shape ({k_types}, 3)")
    if np.max(np.abs(init.sum(axis=1))) > 1e-9:
        raise ValueError("initial fluctuations must satisfy x + y + z = 0 per type")
    y_init, z_init = init[:, 1], init[:, 2]

    drv_y = noises.driver_y()  # (S, K, T)
    drv_z = noises.driver_z()

    y = np.zeros((s, g, k_types))
    z = np.zeros((s, g, k_types))
    y[:, 0] = y_init[None, :] + drv_y[:, :, 0]
    z[:, 0] = z_init[None, :] + drv_z[:, :, 0]

    # Histories of the two linearized integrands, per sample and type:
    # q = lambda (Xhat_k (c Ybar)_k + Xbar_k (c Yhat)_k)   (convolution source)
    # d = lambda (Yhat_k (c (p - Xbar))_k - Ybar_k (c Xhat)_k)   (drain)
    q_hist = np.zeros((g, k_types, s))
    d_hist = np.zeros((g, k_types, s))

    def integrands(m, ym, zm):
        """ym, zm: (K, S) fluctuation values at grid index m."""
        xm = -(ym + zm)
        cy = c @ sol.Y[m]  # (K,)
        h = c @ (p - sol.X[m])  # (K,)
        q = lam * (xm * cy[:, None] + sol.X[m][:, None] * (c @ ym))
        d = lam * (ym * h[:, None] - sol.Y[m][:, None] * (c @ xm))
        return q, d

    q_hist[0], d_hist[0] = integrands(0, y[:, 0].T, z[:, 0].T)

    # Per-step implicit matrix by probing the linear map on basis vectors.
    eye = np.eye(2 * k_types)
    run_d = 0.5 * d_hist[0]  # running trapezoid sum of d up to m-1
    for m in range(1, g):
        kernel_fc = fc[m:0:-1]  # F^c(t_m - t_r), r = 0..m-1
        kernel_f = f[m:0:-1]
        qh = q_hist[:m]
        wq = qh.copy()
        wq[0] *= 0.5
        conv_y = np.tensordot(kernel_fc, wq, axes=(0, 0))  # (K, S)
        conv_z = np.tensordot(kernel_f, wq, axes=(0, 0))
        rhs_y = (
            y_init[:, None] * fc[m]
            + drv_y[:, :, m].T
            + dt * conv_y
            - dt * run_d
        )
        rhs_z = z_init[:, None] + drv_z[:, :, m].T + dt * conv_z + dt * run_d

        amat = np.empty((2 * k_types, 2 * k_types))
        for col in range(2 * k_types):
            ym = eye[:k_types, col][:, None]
            zm = eye[k_types:, col][:, None]
            q_c, d_c = integrands(m, ym, zm)
            amat[:k_types, col] = (0.5 * dt * (fc[0] * q_c - d_c))[:, 0]
            amat[k_types:, col] = (0.5 * dt * (f[0] * q_c + d_c))[:, 0]
        amat = np.eye(2 * k_types) - amat

        rhs = np.vstack([rhs_y, rhs_z])
        try:
            u = np.linalg.solve(amat, rhs)
        except np.linalg.LinAlgError as exc:
            raise FixedPointDiverged(
                f"implicit step at index {m} is singular", step=m, residual=float("nan")
            ) from exc
        if not np.all(np.isfinite(u)):
            raise FixedPointDiverged(
                f"non-finite fluctuation values at index {m}",
                step=m,
                residual=float(np.nanmax(np.abs(u))),
            )
        ym, zm = u[:k_types], u[k_types:]
        y[:, m] = ym.T
        z[:, m] = zm.T
        q_hist[m], d_hist[m] = integrands(m, ym, zm)
        run_d = run_d + 0.5 * (d_hist[m - 1] + d_hist[m])

    return FluctuationSample(
        times=grid.copy(),
        X=-(y + z),
        Y=y,
        Z=z,
        noises=noises,
        solution=sol,
    )


@dataclass(frozen=True)
class EmpiricalFluctuations:
    """sqrt(n)-rescaled centered replica densities on a shared grid.

    values[r, m, k, comp] with comps ordered (X, Y, Z); reference_mode is
    "empirical_mean" or "meanfield".
    """

    times: np.ndarray
    values: np.ndarray  # (R, G, K, 3)
    reference_mode: str
    num_vertices: int

    @property
    def n_replicas(self) -> int:
        return self.values.shape[0]

    def index_of(self, t: float) -> int:
        if self.times.size > 1:
            dt = self.times[1] - self.times[0]
            i = round(float(t) / dt)
            if 0 <= i < self.times.size and abs(self.times[i] - t) <= 1e-9 * max(1.0, abs(t)):
                return i
        hits = np.nonzero(np.abs(self.times - t) <= 1e-9 * max(1.0, abs(t)))[0]
        if hits.size == 0:
            raise TimesOutsideGrid(f"t = {t} is not on the replica grid")
        return int(hits[0])

    def at(self, t: float) -> np.ndarray:
        """(R, K, 3) centered rescaled values at a grid time."""
        return self.values[:, self.index_of(t)]


def center_and_rescale(replicas, reference="empirical_mean") -> EmpiricalFluctuations:
    """Center replica densities and rescale by sqrt(n).

    replicas: a ReplicaSummary or a list of Trajectory objects sharing grid
    and graph size.  reference: "empirical_mean" or a MeanFieldSolution on
    the same grid.
    """
    trajectories = getattr(replicas, "trajectories", replicas)
    if not trajectories:
        raise ValueError("need at least one replica")
    t0 = trajectories[0]
    n = t0.num_vertices
    times = t0.times
    for tr in trajectories[1:]:
        if tr.num_vertices != n:
            raise GridMismatch("replicas must share the graph size")
        if tr.times.size != times.size or not np.allclose(tr.times, times):
            raise GridMismatch("replicas must share the time grid")

    counts = np.stack(
        [np.stack([tr.X, tr.Y, tr.Z], axis=-1) for tr in trajectories], axis=0
    ).astype(float)  # (R, G, K, 3)
    density = counts / n

    if isinstance(reference, MeanFieldSolution):
        sol = reference
        if sol.times.size != times.size or not np.allclose(sol.times, times):
            raise GridMismatch("mean-field reference grid differs from the replica grid")
        ref = np.stack([sol.X, sol.Y, sol.Z], axis=-1)[None, :, :, :]
        mode = "meanfield"
    elif reference == "empirical_mean":
        ref = density.mean(axis=0, keepdims=True)
        mode = "empirical_mean"
    else:
        raise ValueError("reference must be 'empirical_mean' or a MeanFieldSolution")

    values = np.sqrt(n) * (density - ref)
    return EmpiricalFluctuations(
        times=times.copy(), values=values, reference_mode=mode, num_vertices=n
    )


@dataclass(frozen=True)
class MomentStats:
    n: int
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float
    degenerate: bool


def moment_stats(samples) -> MomentStats:
    """Unbiased moment diagnostics of a one-dimensional sample."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 3:
        raise ValueError("need at least 3 samples for moment diagnostics")
    var = float(np.var(x, ddof=1))
    if var == 0.0:
        return MomentStats(x.size, float(x.mean()), 0.0, float("nan"), float("nan"), True)
    return MomentStats(
        n=x.size,
        mean=float(x.mean()),
        variance=var,
        skewness=float(_stats.skew(x, bias=False)),
        excess_kurtosis=float(_stats.kurtosis(x, fisher=True, bias=False)),
        degenerate=False,
    )


@dataclass(frozen=True)
class VarianceScalingReport:
    ratio: float
    expected: float
    ci_low: float
    ci_high: float
    var_small: float
    var_big: float
    n_small_vertices: int
    n_big_vertices: int
    degenerate: bool


def variance_scaling_check(
    small,
    big,
    t: float,
    component: str = "Z",
    n_bootstrap: int = 2000,
    seed: int = 0,
) -> VarianceScalingReport:
    """Ratio of density variances at time t across two graph sizes.

    small and big are ReplicaSummary objects (small = fewer vertices).  If
    averages concentrate at rate 1/n the ratio is about n_big / n_small.
    Bootstrap percentile interval over replicas.
    """
    comp = {"X": 0, "Y": 1, "Z": 2}[component]

    def values(summary):
        if len(summary.trajectories) < 30:
            raise ValueError("need at least 30 replicas per size")
        stack = summary.state_stack().astype(float)  # (R, G, K, 3)
        times = summary.times
        hits = np.nonzero(np.abs(times - t) <= 1e-9 * max(1.0, abs(t)))[0]
        if hits.size == 0:
            raise TimesOutsideGrid(f"t = {t} is not on the replica grid")
        dens = stack[:, hits[0], :, comp].sum(axis=1) / summary.num_vertices
        return dens

    xs = values(small)
    xb = values(big)
    vs, vb = float(np.var(xs, ddof=1)), float(np.var(xb, ddof=1))
    expected = big.num_vertices / small.num_vertices
    if vs == 0.0 or vb == 0.0:
        return VarianceScalingReport(
            float("nan"), expected, float("nan"), float("nan"),
            vs, vb, small.num_vertices, big.num_vertices, True,
        )
    rng = np.random.default_rng(seed)
    ratios = np.empty(n_bootstrap)
    for i in range(n_bootstrap):
        rs = rng.integers(0, xs.size, xs.size)
        rb = rng.integers(0, xb.size, xb.size)
        den = np.var(xb[rb], ddof=1)
        ratios[i] = np.var(xs[rs], ddof=1) / den if den > 0 else np.inf
    lo, hi = np.percentile(ratios, [2.5, 97.5])
    return VarianceScalingReport(
        ratio=vs / vb,
        expected=expected,
        ci_low=float(lo),
        ci_high=float(hi),
        var_small=vs,
        var_big=vb,
        n_small_vertices=small.num_vertices,
        n_big_vertices=big.num_vertices,
        degenerate=False,
    )


@dataclass(frozen=True)
class NoiseCheckRow:
    t: float
    r: float
    pair: str
    empirical: float
    predicted: float
    se: float
    z: float


@dataclass(frozen=True)
class NoiseCheckReport:
    rows: list
    n_particles: int
    n_replicas: int

    @property
    def max_abs_z(self) -> float:
        return max(abs(row.z) for row in self.rows)

    def ok(self, threshold: float = 3.0) -> bool:
        return self.max_abs_z <= threshold


def empirical_noise_check(
    law: StiflingLaw,
    y0: float,
    n_particles: int,
    n_replicas: int,
    times,
    seed=None,
) -> NoiseCheckReport:
    """Monte Carlo check of the initial-noise covariance formulas.

    Simulates the initial-spreader empirical process directly from i.i.d.
    retirement times: Y0(t) = n^{-1/2} sum_i (1_{t < eta_i} - F^c(t)) over
    the round(y0 n) initial spreaders.  times is an iterable of (t, r)
    pairs; for each pair the YY, ZZ and YZ covariances are compared against
    the closed forms, with the standard error of the product estimator.
    """
    n0 = round(y0 * n_particles)
    if n0 < 1:
        raise ValueError("need n_particles * y0 >= 1")
    pairs = [(float(t), float(r)) for t, r in times]
    pts = sorted({v for tr in pairs for v in tr})
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    eta = law.sample(rng, size=(n_replicas, n0))
    scale = 1.0 / np.sqrt(n_particles)
    path = {}
    for t in pts:
        alive = (eta > t).sum(axis=1)
        path[t] = scale * (alive - n0 * law.survival(t))

    rows = []
    for t, r in pairs:
        for pair_name, sign_t, sign_r in (("YY", 1, 1), ("ZZ", -1, -1), ("YZ", 1, -1)):
            # Z0 = -Y0 pathwise, so signed products cover all three rows.
            prods = (sign_t * path[t]) * (sign_r * path[r])
            emp = float(prods.mean())
            se = float(prods.std(ddof=1) / np.sqrt(n_replicas))
            pred = initial_noise_covariance(y0, law, t, r, pair_name)
            zval = 0.0 if se == 0.0 and emp == pred else (emp - pred) / se if se > 0 else float("inf")
            rows.append(NoiseCheckRow(t, r, pair_name, emp, pred, se, zval))
    return NoiseCheckReport(rows=rows, n_particles=n_particles, n_replicas=n_replicas)


def write_covariance_blocks(cov: NoiseCovariance, outdir, structure: str = "isometry") -> list:
    """Write each covariance block as a dense CSV plus a JSON index.

    Returns the list of written file paths; the index file is last.
    """
    import json
    import os

    os.makedirs(outdir, exist_ok=True)
    written = []
    entries = []

    def emit(name, matrix, **meta):
        path = os.path.join(outdir, f"covariance_{name}.csv")
        np.savetxt(path, matrix, delimiter=",", fmt="%.12g")
        written.append(path)
        entries.append({"file": os.path.basename(path), "shape": list(matrix.shape), **meta})

    k_types = cov.n_types
    for k in range(k_types):
        emit(f"initial_{k}", cov.initial_block(k), kind="initial_joint_yz", k=k)
    for k in range(k_types):
        for j in range(k_types):
            emit(
                f"pair_{k}_{j}",
                cov.pair_block(k, j, structure=structure),
                kind="pair_joint_yz",
                k=k,
                j=j,
                structure=structure,
            )
            emit(f"stifling_{k}_{j}", cov.stifling_block(k, j), kind="stifling", k=k, j=j)

    index = {
        "times": [float(v) for v in cov.times],
        "structure": structure,
        "blocks": entries,
    }
    index_path = os.path.join(outdir, "covariance_index.json")
    with open(index_path, "w") as fh:
        json.dump(index, fh, indent=2)
    written.append(index_path)
    return written
