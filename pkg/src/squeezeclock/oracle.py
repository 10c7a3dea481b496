"""Exact collective-spin simulation of the Ramsey readout and Bayesian phase estimation.

States live in the symmetric (Dicke) subspace |S, m>, m = -S..S, with the
mean spin along +x.  The Ramsey sequence is a rotation by phi about z
followed by a pi/2 pulse about x that maps the S_y quadrature onto S_z, so
that <S_z> = S sin(phi).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy import linalg, signal, special, stats

HALF_PI = 0.5 * math.pi
MAX_ORACLE_ATOMS = 4000
DEFAULT_ESTIMATOR_POINTS = 801


class OracleError(RuntimeError):
    pass


def _check_atoms(n) -> int:
    if float(n) != int(n) or int(n) < 2 or int(n) % 2:
        raise OracleError(f"exact simulation needs an even integer N >= 2, got {n}")
    if int(n) > MAX_ORACLE_ATOMS:
        raise OracleError(f"N = {int(n)} exceeds the tractable limit of {MAX_ORACLE_ATOMS} atoms")
    return int(n)


def require_tractable(spec) -> int:
    """Atom number of ``spec`` if the exact simulation can handle it, else OracleError."""
    return _check_atoms(spec.atom_count)


def magnetic_numbers(spin: int) -> np.ndarray:
    return np.arange(-spin, spin + 1, dtype=float)


def _raising_coeffs(spin: int) -> np.ndarray:
    """<m+1| S_+ |m> for m = -S..S-1."""
    m = magnetic_numbers(spin)[:-1]
    return np.sqrt(spin * (spin + 1.0) - m * (m + 1.0))


# ---------------------------------------------------------------- S_x cache

_eig_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
_eig_lock = threading.Lock()


def sx_eigensystem(spin: int):
    """Eigenvalues and orthonormal eigenvectors of the tridiagonal S_x, cached per spin."""
    cached = _eig_cache.get(spin)
    if cached is not None:
        return cached
    with _eig_lock:
        cached = _eig_cache.get(spin)
        if cached is None:
            off = 0.5 * _raising_coeffs(spin)
            try:
                vals, vecs = linalg.eigh_tridiagonal(np.zeros(2 * spin + 1), off)
            except linalg.LinAlgError as exc:
                raise OracleError(f"S_x eigendecomposition failed for S={spin}: {exc}") from exc
            cached = (vals, vecs)
            _eig_cache[spin] = cached
    return cached


def apply_sx(spin: int, v: np.ndarray) -> np.ndarray:
    """S_x acting on amplitude vector(s) along axis 0."""
    c = 0.5 * _raising_coeffs(spin)
    out = np.zeros_like(v, dtype=np.result_type(v, float))
    out[1:] += (c * v[:-1].T).T
    out[:-1] += (c * v[1:].T).T
    return out


def apply_sy(spin: int, v: np.ndarray) -> np.ndarray:
    """S_y = (S_+ - S_-) / 2i acting along axis 0."""
    c = _raising_coeffs(spin)
    out = np.zeros(v.shape, dtype=complex)
    out[1:] += (c * v[:-1].T).T  # S_+
    out[:-1] -= (c * v[1:].T).T  # S_-
    return out / 2j


def rotate_x(spin: int, v: np.ndarray, angle: float) -> np.ndarray:
    """exp(-i angle S_x) applied to column vector(s) ``v``."""
    vals, vecs = sx_eigensystem(spin)
    phase = np.exp(-1j * angle * vals)
    v = np.asarray(v)
    if np.iscomplexobj(v):
        w = vecs.T @ v.real + 1j * (vecs.T @ v.imag)
    else:
        w = (vecs.T @ v).astype(complex)
    w = (phase * w.T).T
    return vecs @ w.real + 1j * (vecs @ w.imag)


# ---------------------------------------------------------------- states

@dataclass(frozen=True)
class DickeEnsembleState:
    """Weighted mixture of pure Dicke-basis amplitude vectors (rows of ``amplitudes``)."""

    spin: int
    weights: np.ndarray
    amplitudes: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def atom_count(self) -> int:
        return 2 * self.spin

    @property
    def m(self) -> np.ndarray:
        return magnetic_numbers(self.spin)

    def component_moments(self):
        """Per-component first and second moments of (S_x, S_y, S_z)."""
        m = self.m
        psi = self.amplitudes.T  # (dim, K)
        prob = np.abs(psi) ** 2
        sx = apply_sx(self.spin, psi)
        sy = apply_sy(self.spin, psi)
        first = np.stack([
            np.real(np.sum(psi.conj() * sx, axis=0)),
            np.real(np.sum(psi.conj() * sy, axis=0)),
            m @ prob,
        ])
        second = np.stack([
            np.sum(np.abs(sx) ** 2, axis=0),
            np.sum(np.abs(sy) ** 2, axis=0),
            (m * m) @ prob,
        ])
        return first, second

    def moments(self):
        """Mixture means and variances, each ordered (x, y, z)."""
        first, second = self.component_moments()
        mean = first @ self.weights
        var = second @ self.weights - mean**2
        return mean, var


def _single(spin, psi, **meta) -> DickeEnsembleState:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return DickeEnsembleState(spin, np.array([1.0]), psi[None, :], dict(meta))


def build_css(n) -> DickeEnsembleState:
    """Coherent spin state along +x: binomial amplitudes 2^-S sqrt(C(2S, S+m))."""
    n = _check_atoms(n)
    spin = n // 2
    m = magnetic_numbers(spin)
    log_amp = 0.5 * (special.gammaln(n + 1) - special.gammaln(spin + m + 1)
                     - special.gammaln(spin - m + 1)) - spin * math.log(2.0)
    return _single(spin, np.exp(log_amp), xi2=1.0, chi2=1.0, kind="css")


def _hp_number_basis(spin: int) -> np.ndarray:
    """S_x eigenvectors ordered by n = S - m_x, phased so that <n+1|S_z|n> > 0.

    Column n is the image of the oscillator number state |n> under the
    small-curvature map S_x = S - a^dag a, S_z = sqrt(S/2) (a + a^dag).
    """
    cached = _hp_cache.get(spin)
    if cached is not None:
        return cached
    _, vecs = sx_eigensystem(spin)
    basis = vecs[:, ::-1].copy()
    m = magnetic_numbers(spin)
    coupling = np.einsum("ik,i,ik->k", basis[:, 1:], m, basis[:, :-1])
    flips = np.cumprod(np.where(coupling < 0, -1.0, 1.0))
    basis[:, 1:] *= flips
    with _eig_lock:
        _hp_cache.setdefault(spin, basis)
    return _hp_cache[spin]


_hp_cache: dict[int, np.ndarray] = {}


def build_pure_squeezed(n, chi2: float, profile: str = "hp") -> DickeEnsembleState:
    """Pure state with S_y variance ~ (S/2)/chi2 and S_z variance ~ (S/2) chi2.

    ``profile="hp"`` maps the oscillator squeezed vacuum (squeezed along the
    S_y quadrature) onto the S_x eigenbasis; its S_x variance is exactly
    (chi2 - 1/chi2)^2 / 8.  ``profile="gaussian"`` uses a real Gaussian
    amplitude profile in m instead.  Both are valid while chi2 << N.
    """
    n = _check_atoms(n)
    if chi2 < 1.0:
        raise OracleError(f"antisqueezing chi2 must be >= 1, got {chi2}")
    if chi2 > n / 10.0:
        raise OracleError(f"chi2 = {chi2:g} > N/10 = {n / 10:g}: outside the small-curvature regime")
    spin = n // 2
    meta = dict(xi2=1.0 / chi2, chi2=chi2, kind="squeezed", profile=profile)
    if profile == "gaussian":
        m = magnetic_numbers(spin)
        return _single(spin, np.exp(-(m * m) / (2.0 * spin * chi2)), **meta)
    if profile != "hp":
        raise OracleError(f"unknown squeezed-state profile {profile!r}")
    if chi2 == 1.0:
        return _single(spin, _hp_number_basis(spin)[:, 0], **meta)
    t = math.tanh(0.5 * math.log(chi2))
    k = np.arange(spin + 1)
    # squeezed vacuum: amplitude of |2k> is t^k sqrt((2k)!) / (2^k k!), up to normalization
    log_c = (0.5 * special.gammaln(2 * k + 1) - k * math.log(2.0) - special.gammaln(k + 1)
             + k * math.log(t))
    # positive t^k squeezes the S_y quadrature and antisqueezes S_z
    coeffs = np.exp(log_c - log_c.max())
    psi = _hp_number_basis(spin)[:, 2 * k] @ coeffs
    return _single(spin, psi, **meta)


def build_nonunitary_mixture(n, xi2: float, chi2: float, components: int = 21,
                             profile: str = "hp") -> DickeEnsembleState:
    """Excess-noise squeezed state as a Gaussian mixture of S_y-displaced pure states.

    Each component is the pure state with S_y variance (S/2)/chi2, rotated
    about z by kappa (e^{i kappa m} phases).  kappa follows Gauss-Hermite
    nodes so the S_y displacement variance is (S/2)(xi2 - 1/chi2).
    """
    area = xi2 * chi2
    if area < 1.0 - 1e-12:
        raise OracleError(f"excess area A^2 = {area:g} < 1")
    if components < 1 or components % 2 == 0:
        raise OracleError("component count must be odd and >= 1")
    pure = build_pure_squeezed(n, chi2, profile)
    extra = max(xi2 - 1.0 / chi2, 0.0)
    if extra <= 1e-15 * xi2 or components == 1:
        return DickeEnsembleState(pure.spin, pure.weights, pure.amplitudes,
                                  dict(pure.metadata, xi2=xi2, kind="mixture", components=1))
    spin = pure.spin
    mean_sx = pure.moments()[0][0]
    # <S_y> after a z-rotation by kappa is <S_x> sin(kappa)
    kappa_var = 0.5 * spin * extra / mean_sx**2
    nodes, w = hermgauss(components)
    kappas = math.sqrt(2.0 * kappa_var) * nodes
    weights = w / math.sqrt(math.pi)
    m = pure.m
    amps = pure.amplitudes[0][None, :] * np.exp(1j * kappas[:, None] * m[None, :])
    return DickeEnsembleState(spin, weights / weights.sum(), amps,
                              dict(xi2=xi2, chi2=chi2, kind="mixture", components=components,
                                   kappa_std=math.sqrt(kappa_var)))


def build_state(n, xi2: float = 1.0, chi2: float = 1.0, components: int = 21,
                profile: str = "hp") -> DickeEnsembleState:
    """Coherent, pure squeezed or mixture state according to (xi2, chi2)."""
    if xi2 == 1.0 and chi2 == 1.0:
        return build_css(n)
    if abs(xi2 * chi2 - 1.0) <= 1e-12:
        return build_pure_squeezed(n, chi2, profile)
    return build_nonunitary_mixture(n, xi2, chi2, components, profile)


@dataclass(frozen=True)
class CompositeEnsemble:
    """Squeezed sub-ensemble plus the unpolarized atoms left by contrast loss.

    ``decohered_atoms`` are split equally between the two directions
    perpendicular to the mean spin in the equatorial plane, tilted out of it
    by ``tilt``; ``reservoir_atoms`` decayed to the ground state during the
    Ramsey time.
    """

    squeezed: DickeEnsembleState
    decohered_atoms: int
    reservoir_atoms: int
    tilt: float = 0.0

    @property
    def atom_count(self) -> int:
        return self.squeezed.atom_count + self.decohered_atoms + self.reservoir_atoms

    @property
    def contrast(self) -> float:
        return self.squeezed.atom_count / self.atom_count


def _even(x: float) -> int:
    return int(2 * round(x / 2.0))


def apply_contrast_model(state: DickeEnsembleState, prep_contrast: float = 1.0,
                         ramsey_contrast: float = 1.0, theta: float = 0.0):
    """Split ``state``'s atoms into squeezed, decohered and decayed sub-ensembles.

    The squeezed part keeps N*C1*C2 atoms (rounded to even) with the same
    xi2, chi2; N*C2*(1-C1) atoms are decohered during preparation and
    N*(1-C2) decay during the Ramsey time.  Returns ``state`` itself when no
    contrast is lost.
    """
    if not (0 < prep_contrast <= 1 and 0 < ramsey_contrast <= 1):
        raise OracleError("contrasts must lie in (0, 1]")
    if prep_contrast == 1.0 and ramsey_contrast == 1.0:
        return state
    n = state.atom_count
    n_sq = max(_even(n * prep_contrast * ramsey_contrast), 2)
    n_dec = min(_even(n * ramsey_contrast * (1.0 - prep_contrast)), n - n_sq)
    n_dec -= n_dec % 2
    n_res = n - n_sq - n_dec
    meta = state.metadata
    xi2, chi2 = meta.get("xi2", 1.0), meta.get("chi2", 1.0)
    squeezed = build_state(n_sq, xi2, chi2, meta.get("components", 21), meta.get("profile", "hp"))
    return CompositeEnsemble(squeezed, n_dec, n_res, theta)


# ---------------------------------------------------------------- readout

@dataclass(frozen=True)
class ConditionalDistribution:
    """P(S_z = m | phi): rows indexed by m, columns by phi."""

    m: np.ndarray
    phi: np.ndarray
    prob: np.ndarray
    max_norm_error: float = 0.0


def _dicke_readout(state: DickeEnsembleState, phi: np.ndarray) -> tuple[np.ndarray, float]:
    m = state.m
    prob = np.zeros((m.size, phi.size))
    worst = 0.0
    phase = np.exp(-1j * np.outer(m, phi))
    for w, psi in zip(state.weights, state.amplitudes):
        out = rotate_x(state.spin, phase * psi[:, None], HALF_PI)
        p = np.abs(out) ** 2
        worst = max(worst, float(np.max(np.abs(p.sum(axis=0) - np.vdot(psi, psi).real))))
        prob += w * p
    return prob, worst


def _split_binomial(n: int, r: np.ndarray) -> np.ndarray:
    """Distribution of S_z for n/2 atoms with Bloch z-component r and n/2 with -r.

    Shape (n + 1, len(r)), index k = S_z + n/2.
    """
    half = n // 2
    k = np.arange(half + 1)[:, None]
    up = stats.binom.pmf(k, half, (1.0 + r[None, :]) / 2.0)
    down = stats.binom.pmf(k, half, (1.0 - r[None, :]) / 2.0)
    return signal.fftconvolve(up, down, axes=0).clip(min=0.0)


def conditional_sz_distribution(state, phi_grid) -> ConditionalDistribution:
    """Readout distribution of the final S_z for each phase deviation in ``phi_grid``."""
    phi = np.atleast_1d(np.asarray(phi_grid, dtype=float))
    if np.any(np.abs(phi) > math.pi + 1e-12):
        raise OracleError("phase grid must lie within [-pi, pi]")
    if isinstance(state, DickeEnsembleState):
        prob, worst = _dicke_readout(state, phi)
        m = state.m
    else:
        sq, worst = _dicke_readout(state.squeezed, phi)
        prob = sq
        if state.decohered_atoms:
            r = math.cos(state.tilt) * np.cos(phi)
            prob = signal.fftconvolve(prob, _split_binomial(state.decohered_atoms, r), axes=0)
        if state.reservoir_atoms:
            k = np.arange(state.reservoir_atoms + 1)
            res = stats.binom.pmf(k, state.reservoir_atoms, 0.5)[:, None]
            prob = signal.fftconvolve(prob, res, axes=0)
        prob = prob.clip(min=0.0)
        prob /= prob.sum(axis=0, keepdims=True)
        m = np.arange(prob.shape[0]) - state.atom_count / 2.0
    if worst > 1e-8:
        raise OracleError(f"rotation lost unitarity: column norm error {worst:.3g}")
    return ConditionalDistribution(m, phi, prob, worst)


# ---------------------------------------------------------------- estimation

@dataclass(frozen=True)
class BayesEstimator:
    m: np.ndarray
    estimate: np.ndarray
    undefined: np.ndarray  # rows with no posterior weight on the prior interval
    prior: tuple = (-HALF_PI, HALF_PI)


def estimator_grid(points: int = DEFAULT_ESTIMATOR_POINTS) -> np.ndarray:
    return np.linspace(-HALF_PI, HALF_PI, points)


def bayes_estimator(dist: ConditionalDistribution) -> BayesEstimator:
    """Posterior-mean phase for each outcome under a uniform prior on (-pi/2, pi/2)."""
    inside = np.abs(dist.phi) <= HALF_PI + 1e-12
    phi = dist.phi[inside]
    if phi.size < 400:
        raise OracleError(f"estimator needs >= 400 prior grid points, got {phi.size}")
    p = dist.prob[:, inside]
    den = np.trapezoid(p, phi, axis=1)
    num = np.trapezoid(p * phi[None, :], phi, axis=1)
    undefined = den <= 0.0
    est = np.where(undefined, 0.0, num / np.where(undefined, 1.0, den))
    return BayesEstimator(dist.m, np.clip(est, -HALF_PI, HALF_PI), undefined)


def expected_phase_error(dist: ConditionalDistribution, est: BayesEstimator, phi=None):
    """Mean-square estimation error at each phase column of ``dist`` (or the nearest to ``phi``)."""
    if phi is None:
        cols = np.arange(dist.phi.size)
    else:
        req = np.atleast_1d(np.asarray(phi, dtype=float))
        cols = np.array([int(np.argmin(np.abs(dist.phi - p))) for p in req])
    p = dist.prob[:, cols]
    err = (est.estimate[:, None] - dist.phi[None, cols]) ** 2
    out = (p * err).sum(axis=0) / p.sum(axis=0)
    return float(out[0]) if (phi is not None and np.ndim(phi) == 0) else out


def oracle_phase_error(state, phis, estimator_points: int = DEFAULT_ESTIMATOR_POINTS):
    """Full oracle pipeline: readout, estimator on the prior grid, error at ``phis``."""
    est = bayes_estimator(conditional_sz_distribution(state, estimator_grid(estimator_points)))
    dist = conditional_sz_distribution(state, phis)
    return expected_phase_error(dist, est)


def state_for_spec(spec, components: int = 21, profile: str = "hp"):
    """Oracle state (pure, mixture or contrast composite) for an EnsembleSpec."""
    n = _check_atoms(spec.atom_count)
    base = build_state(n, spec.xi2, spec.chi2, components, profile)
    return apply_contrast_model(base, spec.prep_contrast, spec.ramsey_contrast, spec.squeeze_angle)


# ---------------------------------------------------------------- comparisons

# Ratio of the largest second difference at spacing h to that at h/2: a
# smooth curve gives 4, a kink 2 and a jump 1.
STEP_RATIO_THRESHOLD = 3.0
STEP_WINDOW = (0.4 * math.pi, 0.6 * math.pi)
STEP_SPACING = math.pi / 400


def smoothness_ratio(f, lo: float = STEP_WINDOW[0], hi: float = STEP_WINDOW[1],
                     h: float = STEP_SPACING) -> float:
    """Resolution scaling of the second difference of ``f`` on [lo, hi]."""
    coarse = np.linspace(lo, hi, int(round((hi - lo) / h)) + 1)
    fine = np.linspace(lo, hi, 2 * coarse.size - 1)
    d_coarse = np.max(np.abs(np.diff(np.asarray(f(coarse), dtype=float), 2)))
    d_fine = np.max(np.abs(np.diff(np.asarray(f(fine), dtype=float), 2)))
    if d_fine == 0.0:
        return 4.0 if d_coarse == 0.0 else math.inf
    return float(d_coarse / d_fine)


def has_step(f, **kw) -> bool:
    """True when ``f`` has a jump or kink inside the window (see smoothness_ratio)."""
    return smoothness_ratio(f, **kw) < STEP_RATIO_THRESHOLD


@dataclass(frozen=True)
class OracleComparison:
    phi: np.ndarray
    analytic: np.ndarray
    oracle: np.ndarray
    oracle_step_ratio: float = math.nan
    analytic_step_ratio: float = math.nan

    @property
    def rel_error(self) -> np.ndarray:
        """(analytic - oracle) / oracle at each phase."""
        return (self.analytic - self.oracle) / self.oracle


def compare_with_analytic(spec, phis, components: int = 21,
                          estimator_points: int = DEFAULT_ESTIMATOR_POINTS,
                          step_check: bool = True) -> OracleComparison:
    """Oracle and analytic phase error on ``phis``, plus step diagnostics near pi/2."""
    from .analytic import build_phase_error_curve

    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    state = state_for_spec(spec, components)
    est = bayes_estimator(conditional_sz_distribution(state, estimator_grid(estimator_points)))

    def oracle_curve(p):
        return expected_phase_error(conditional_sz_distribution(state, p), est)

    curve = build_phase_error_curve(spec)
    ratios = (smoothness_ratio(oracle_curve), smoothness_ratio(curve)) if step_check else (math.nan,) * 2
    return OracleComparison(phis, np.asarray(curve(phis), dtype=float), oracle_curve(phis), *ratios)
