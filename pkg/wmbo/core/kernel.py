"""
Radial profile phi_N of the quartic heat kernel g_N and the constants built on it.

g_N(x) = (2 pi)^-N  int exp(-|xi|^4) exp(i x.xi) dxi = phi_N(|x|). Small radii use the
alternating power series, large radii (or heavy cancellation) the Fourier-Bessel
integral; both paths are vectorised over radii.
"""

import logging
from math import factorial
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy import fft, integrate, optimize, special

from wmbo.core.errors import (
    KernelEvaluationError,
    NoClosedFormError,
    OracleResolutionError,
    ZeroScanError,
)
from wmbo.models.fields import DEFAULT_SCALE, GridSpec
from wmbo.models.kernel import KernelSeries, MomentPattern, ZeroTable
from wmbo.models.reports import CheckResult

logger = logging.getLogger(__name__)

Radii = Union[float, np.ndarray]

C1 = 1.0 / (2.0 * np.pi)
SERIES_TOL = 1e-12
SERIES_CAP = 400
# Series accepted while sum|terms| <= LIMIT * max(|sum|, FLOOR).
CANCELLATION_LIMIT = 1e6
CANCELLATION_FLOOR = 1e-4
QUAD_TOL = 1e-10
XI_CUT = 6.0
ORACLE_GRID = GridSpec(side_length=96.0, n=2048)
ORACLE_TOL = 1e-5
_CHUNK = 2048

GAMMA_1_4 = 3.6256099082
GAMMA_3_4 = 1.2254167024


def _log_coefficient(dim: int, ell, m: int = 0):
    """log of Gamma((l+m)/2 + N/4) / (2^(N+1) pi^(N/2) 2^(2l) Gamma(l+1) Gamma(l+N/2))."""
    ell = np.asarray(ell, dtype=float)
    return (
        special.gammaln((ell + m) / 2.0 + dim / 4.0)
        - (dim + 1) * np.log(2.0)
        - 0.5 * dim * np.log(np.pi)
        - 2.0 * ell * np.log(2.0)
        - special.gammaln(ell + 1.0)
        - special.gammaln(ell + dim / 2.0)
    )


def _as_radii(r: Radii) -> Tuple[np.ndarray, tuple]:
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError("radii must be finite and non-negative")
    return arr.ravel().copy(), arr.shape


def _restore(values: np.ndarray, shape: tuple) -> Radii:
    if shape == ():
        return float(values[0])
    return values.reshape(shape)


def _series(dim: int, radii: np.ndarray, m: int = 0, integrated: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """
    Alternating series sum_l (-1)^l c_l r^(2l) (or its antiderivative) with adaptive truncation.

    Returns:
        (values, trusted) where `trusted` is False for radii beyond every admissible
        truncation order or with excessive cancellation.
    """
    ell = np.arange(SERIES_CAP + 2)
    log_c = _log_coefficient(dim, ell, m)
    log_delta = np.diff(log_c)
    power = 2 * ell + (1 if integrated else 0)
    log_mag = log_c - np.log(2 * ell + 1) if integrated else log_c
    signs = np.where(ell % 2 == 0, 1.0, -1.0)
    candidate = (ell[:-1] >= 2) & (ell[:-1] % 2 == 0)

    values = np.empty(radii.size)
    trusted = np.empty(radii.size, dtype=bool)
    for start in range(0, radii.size, _CHUNK):
        r = radii[start : start + _CHUNK]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            log_r = np.log(r)[:, None]
            log_terms = log_mag[None, :] + np.where(power[None, :] == 0, 0.0, power[None, :] * log_r)
            decreasing = log_delta[None, :] + 2.0 * log_r <= 0.0
            ok = (log_terms[:, :-1] < np.log(SERIES_TOL)) & decreasing & candidate[None, :]
            found = ok.any(axis=1)
            n_max = np.where(found, ok.argmax(axis=1), SERIES_CAP)
            keep = ell[None, :] <= n_max[:, None]
            magnitudes = np.where(keep, np.exp(np.where(keep, log_terms, -np.inf)), 0.0)
        total = magnitudes @ signs
        spread = magnitudes.sum(axis=1)
        values[start : start + r.size] = total
        trusted[start : start + r.size] = found & (
            spread <= CANCELLATION_LIMIT * np.maximum(np.abs(total), CANCELLATION_FLOOR)
        )
    return values, trusted


def _quadrature(integrand, upper: float, points: Optional[np.ndarray], label: str) -> np.ndarray:
    """Vectorised adaptive Gauss-Kronrod over [0, upper]; raises if the error estimate exceeds QUAD_TOL."""
    if points is not None:
        points = points[(points > 0.0) & (points < upper)]
        points = list(points) if points.size else None
    result, error = integrate.quad_vec(
        integrand, 0.0, upper, epsabs=1e-13, epsrel=0.0, norm="max", limit=20_000, points=points
    )
    if error > QUAD_TOL:
        raise KernelEvaluationError(f"quadrature for {label} stalled at error {error:.3e}", residual=float(error))
    return np.asarray(result, dtype=float)


def _oscillation_points(r_max: float, dim: int = 1) -> Optional[np.ndarray]:
    if r_max <= 0.0:
        return None
    count = int(XI_CUT * r_max / np.pi) + 1
    if dim == 2:
        return special.jn_zeros(0, count) / r_max
    return np.pi * (np.arange(count) + 0.5) / r_max


def series_coeff(dim: int, ell: int) -> float:
    """b_{N,l}, evaluated through log-Gamma."""
    if dim < 1 or ell < 0:
        raise ValueError(f"need dim >= 1 and ell >= 0, got dim={dim}, ell={ell}")
    return float(np.exp(_log_coefficient(dim, ell)))


def kernel_series(dim: int, n_max: int) -> KernelSeries:
    """Coefficient table b_{N,0..n_max} with its validity radius 1/sqrt(delta_{N,n_max})."""
    if dim < 1 or n_max < 0 or n_max % 2:
        raise ValueError(f"need dim >= 1 and an even n_max >= 0, got dim={dim}, n_max={n_max}")
    log_c = _log_coefficient(dim, np.arange(n_max + 2))
    coeffs = np.exp(log_c[:-1])
    coeffs.setflags(write=False)
    valid_radius = float(np.exp(-0.5 * (log_c[-1] - log_c[-2])))
    return KernelSeries(dim=dim, coeffs=coeffs, n_max=n_max, valid_radius=valid_radius)


def partial_sum(dim: int, r: Radii, n: int) -> Radii:
    """Phi_{N,n}(r) = sum_{l<=n} (-1)^l b_{N,l} r^(2l)."""
    radii, shape = _as_radii(r)
    ell = np.arange(n + 1)
    coeffs = np.exp(_log_coefficient(dim, ell)) * np.where(ell % 2 == 0, 1.0, -1.0)
    values = np.polynomial.polynomial.polyval(radii**2, coeffs)
    return _restore(np.asarray(values, dtype=float), shape)


def radial_profile_quadrature(dim: int, r: Radii) -> Radii:
    """
    phi_N from its Fourier-Bessel representation.

    N=1: (1/pi) int exp(-xi^4) cos(r xi); N=2: (1/2pi) int rho exp(-rho^4) J_0(r rho);
    N=3: (1/2pi^2) int rho^2 exp(-rho^4) sin(r rho)/(r rho).
    """
    if dim not in (1, 2, 3):
        raise ValueError(f"quadrature form available for dim 1, 2, 3 only, got {dim}")
    radii, shape = _as_radii(r)
    if radii.size == 0:
        return _restore(radii, shape)

    if dim == 1:
        def integrand(xi):
            return np.exp(-xi**4) * np.cos(radii * xi) / np.pi
    elif dim == 2:
        def integrand(xi):
            return xi * np.exp(-xi**4) * special.j0(radii * xi) / (2.0 * np.pi)
    else:
        def integrand(xi):
            return xi**2 * np.exp(-xi**4) * np.sinc(radii * xi / np.pi) / (2.0 * np.pi**2)

    values = _quadrature(integrand, XI_CUT, _oscillation_points(radii.max(), dim), f"phi_{dim}")
    return _restore(values, shape)


def phi(dim: int, r: Radii) -> Radii:
    """phi_N(r) for scalar or array r >= 0."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    radii, shape = _as_radii(r)
    values, trusted = _series(dim, radii)
    if not trusted.all():
        if dim > 3:
            raise KernelEvaluationError(
                f"series for phi_{dim} unreliable beyond r={radii[~trusted].min():.6g}; no quadrature form for N >= 4"
            )
        logger.debug("phi_%d: %d of %d radii routed to quadrature", dim, int((~trusted).sum()), radii.size)
        values[~trusted] = radial_profile_quadrature(dim, radii[~trusted])
    return _restore(values, shape)


def psi(r: Radii) -> Radii:
    """Psi(r) = int_0^r phi_1."""
    radii, shape = _as_radii(r)
    values, trusted = _series(1, radii, integrated=True)
    if not trusted.all():
        far = radii[~trusted]
        logger.debug("psi: %d of %d radii routed to quadrature", far.size, radii.size)

        def integrand(xi):
            return np.exp(-xi**4) * far * np.sinc(far * xi / np.pi) / np.pi

        values[~trusted] = _quadrature(integrand, XI_CUT, _oscillation_points(far.max()), "psi")
    return _restore(values, shape)


def kernel_zeros(count: int, tol: float = 1e-10, step: float = 0.05, r_max: float = 30.0) -> ZeroTable:
    """
    Locate the first `count` sign-change pairs (r_k^+, r_k^-) of phi_1.

    Args:
        count: Number of (+, -) pairs.
        tol: Bisection tolerance on the radius.
        step: Scan spacing; far below the zero spacing of about 3.3.
        r_max: End of the scan range.

    Returns:
        ZeroTable with strictly interleaved radii.
    """
    if count < 1 or tol <= 0:
        raise ValueError("count must be >= 1 and tol > 0")
    grid = np.arange(1, int(round(r_max / step)) + 1) * step
    values = phi(1, grid)
    crossings = np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)
    if crossings.size < 2 * count:
        raise ZeroScanError(
            f"found {crossings.size} sign changes of phi_1 on (0, {r_max}], need {2 * count}", r_max=r_max
        )

    def phi_1(x: float) -> float:
        return phi(1, x)

    radii = [optimize.bisect(phi_1, grid[i], grid[i + 1], xtol=tol) for i in crossings[: 2 * count]]
    pairs = tuple((radii[2 * k], radii[2 * k + 1]) for k in range(count))
    return ZeroTable(pairs=pairs, tol=tol)


def threshold_combination(r: Radii, a: float = DEFAULT_SCALE) -> Radii:
    """I(r) = Psi(r/3a) - 3 Psi(r/2a) + 3 Psi(r/a)."""
    if a <= 0:
        raise ValueError(f"scale a must be positive, got {a}")
    radii, shape = _as_radii(r)
    scaled = psi(np.concatenate([radii / (3.0 * a), radii / (2.0 * a), radii / a]))
    third, half, full = np.split(scaled, 3)
    return _restore(third - 3.0 * half + 3.0 * full, shape)


def l_moment(sigma: float) -> float:
    """L_sigma = 2 int_0^inf xi^sigma exp(-xi^4) = Gamma((sigma+1)/4) / 2."""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    return 0.5 * float(special.gamma((sigma + 1.0) / 4.0))


def _closed_forms() -> dict:
    l0 = C1 * l_moment(0)
    return {
        ((), 0, 0): l0,
        ((2,), 0, 0): 4.0 * C1 * l_moment(2),
        ((4,), 0, 0): -12.0 * l0,
        ((2, 2), 0, 0): -4.0 * l0,
        ((6,), 1, 0): -60.0 * l0,
        ((4, 2), 1, 0): -12.0 * l0,
        ((2, 2, 2), 1, 0): -4.0 * l0,
        ((2,), 0, 1): -l0,
    }


def has_closed_form(p: MomentPattern) -> bool:
    """Odd total order, or a pattern in the table."""
    return p.order % 2 == 1 or p.key() in _closed_forms()


def moment_closed_form(p: MomentPattern) -> float:
    """Tabulated hyperplane moment; odd total order vanishes by symmetry."""
    if not has_closed_form(p):
        raise NoClosedFormError(f"{p.label()}: no closed form; use moment_oracle")
    if p.order % 2 == 1:
        return 0.0
    return _closed_forms()[p.key()]


def _slice_moment(p: MomentPattern, grid: GridSpec) -> float:
    """Fourier-slice quadrature of int (z')^beta f(z', 0) dz' on one grid."""
    side, n = grid.side_length, grid.n
    d = p.dim - 1
    dxi = 2.0 * np.pi / side
    kmax = min(n // 2 - 1, int(np.ceil(XI_CUT / dxi)))
    k = np.arange(-kmax, kmax + 1)
    xi = k * dxi

    # Integrate the symbol over xi_N for every xi' of the slice.
    rho2 = sum(axis**2 for axis in np.meshgrid(*([xi] * d), indexing="ij"))
    total = rho2[..., None] + xi**2
    symbol = xi ** (2 * p.ell) * total**p.m * np.exp(-(total**2))
    slice_hat = symbol.sum(axis=-1) * dxi

    spectrum = np.zeros((n,) * d)
    spectrum[np.ix_(*([k % n] * d))] = slice_hat
    half = spectrum[..., : n // 2 + 1]
    values = fft.irfftn(half, s=(n,) * d, workers=-1) * (n * dxi) ** d / (2.0 * np.pi) ** p.dim

    z = fft.fftfreq(n, d=1.0 / side)
    exponents = list(p.beta) + [0] * (d - len(p.beta))
    moment = values
    for exponent in reversed(exponents):
        moment = moment @ z**exponent
    return float(moment) * (side / n) ** d


def moment_oracle(p: MomentPattern, grid: Optional[GridSpec] = None, check_refinement: bool = True) -> float:
    """
    Hyperplane moment computed from the Fourier symbol alone.

    Args:
        p: Moment pattern with dim 2 or 3.
        grid: Physical box and sample count of the slice; defaults to L=96, n=2048.
        check_refinement: Recompute with 2n samples and compare.

    Returns:
        The refined value.
    """
    if p.dim not in (2, 3):
        raise ValueError(f"moment_oracle supports dim 2 and 3, got {p.dim}")
    grid = grid or ORACLE_GRID
    coarse = _slice_moment(p, grid)
    if not check_refinement:
        return coarse
    fine = _slice_moment(p, GridSpec(side_length=grid.side_length, n=2 * grid.n))
    if abs(fine - coarse) > ORACLE_TOL * max(1.0, abs(fine)):
        raise OracleResolutionError(
            f"{p.label()}: refinement moved the oracle from {coarse!r} to {fine!r}", coarse=coarse, fine=fine
        )
    return fine


def laplacian_series(dim: int, r: Radii, m: int) -> Radii:
    """(d^2/dr^2 + (N-1)/r d/dr)^m phi_N(r) from its closed power series."""
    if m < 0:
        raise ValueError(f"m must be non-negative, got {m}")
    radii, shape = _as_radii(r)
    values, trusted = _series(dim, radii, m=m)
    if not trusted.all():
        raise KernelEvaluationError(f"Laplacian series of order {m} unreliable at r={radii[~trusted].min():.6g}")
    return _restore((-1.0) ** m * values, shape)


def lambda_kernel_series(dim: int, r: Radii, t: float, lam: float, m_max: int = 30) -> Radii:
    """G_{N,lambda}(r, t) = t^(-N/4) sum_m (-lambda)^m t^(m/2) / m! (-Laplace)^m g_N(r t^(-1/4))."""
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    radii, shape = _as_radii(r)
    scaled = radii / t**0.25
    total = np.zeros_like(scaled)
    for m in range(m_max + 1):
        # (-Laplace)^m g_N is the positive-prefactor series.
        values, trusted = _series(dim, scaled, m=m)
        if not trusted.all():
            raise KernelEvaluationError(f"lambda series term m={m} unreliable at z={scaled[~trusted].min():.6g}")
        total += (-lam) ** m * t ** (m / 2.0) / factorial(m) * values
    return _restore(t ** (-dim / 4.0) * total, shape)


def lambda_kernel_quadrature(r: Radii, t: float, lam: float) -> Radii:
    """N=1 oracle (1/pi) int exp(-(xi^4 + lambda xi^2) t) cos(r xi) dxi in the scaled variable."""
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    radii, shape = _as_radii(r)
    scaled = radii / t**0.25
    shift = lam * np.sqrt(t)
    upper = XI_CUT + np.sqrt(max(0.0, -shift))

    def integrand(eta):
        return np.exp(-(eta**4) - shift * eta**2) * np.cos(scaled * eta) / np.pi

    values = _quadrature(integrand, upper, _oscillation_points(scaled.max()), "G_1,lambda")
    return _restore(values / t**0.25, shape)


def gamma_constants() -> dict:
    """Special-function constants the scheme depends on."""
    gamma_3_4 = float(special.gamma(0.75))
    return {
        "gamma_1_4": float(special.gamma(0.25)),
        "gamma_3_4": gamma_3_4,
        "c1": C1,
        "L0": l_moment(0),
        "L2": l_moment(2),
        "expansion_constant": C1 * gamma_3_4,
        "scale_a": DEFAULT_SCALE,
    }


def _bracket(name: str, value: float, lo: Optional[float] = None, hi: Optional[float] = None) -> CheckResult:
    passed = (lo is None or value > lo) and (hi is None or value < hi)
    bound = f"({'-inf' if lo is None else lo}, {'inf' if hi is None else hi})"
    return CheckResult(name=name, passed=bool(passed), value=float(value), bound=bound)


def _residual(name: str, residual: float, tol: float, value: Optional[float] = None) -> CheckResult:
    return CheckResult(
        name=name, passed=bool(residual < tol), value=value, bound=f"residual < {tol:g}", residual=float(residual)
    )


def verify_kernel(zero_count: int = 3, include_moments: bool = False) -> List[CheckResult]:
    """
    Evaluate every kernel property with its residual.

    Args:
        zero_count: Number of zero pairs used for the monotonicity check of Psi.
        include_moments: Also compare every closed-form moment with the oracle (slow).

    Returns:
        One CheckResult per property, in a fixed order.
    """
    checks: List[CheckResult] = []
    constants = gamma_constants()
    checks.append(_residual("gamma_1_4", abs(constants["gamma_1_4"] - GAMMA_1_4), 1e-10, constants["gamma_1_4"]))
    checks.append(_residual("gamma_3_4", abs(constants["gamma_3_4"] - GAMMA_3_4), 1e-10, constants["gamma_3_4"]))

    b10 = series_coeff(1, 0)
    checks.append(_residual("b_1_0_vs_quadrature", abs(b10 - radial_profile_quadrature(1, 0.0)), 1e-10, b10))
    b20 = series_coeff(2, 0)
    checks.append(_residual("b_2_0_vs_closed_form", abs(b20 - 1.0 / (8.0 * np.sqrt(np.pi))), 1e-13, b20))

    zeros = kernel_zeros(zero_count)
    r_plus, r_minus = zeros.pairs[0]
    checks.append(_bracket("r_1_plus", r_plus, 3.453, 3.454))
    checks.append(_bracket("r_1_minus", r_minus, 6.784, 6.785))
    checks.append(_bracket("psi_r_1_plus", psi(r_plus), 0.5522, 0.5523))
    checks.append(_bracket("psi_r_1_minus", psi(r_minus), 0.4938, 0.4939))
    checks.append(_bracket("psi_r_1_plus_over_3", psi(r_plus / 3.0), lo=0.32584))

    maxima = psi(np.array([p for p, _ in zeros.pairs]))
    minima = psi(np.array([q for _, q in zeros.pairs]))
    monotone = bool(np.all(np.diff(maxima) < 0) and np.all(np.diff(minima) > 0))
    checks.append(CheckResult(name="psi_extrema_monotone", passed=monotone, bound="max decreasing, min increasing"))

    samples = np.linspace(0.0, 40.0, 10_001)[1:]
    combination = threshold_combination(samples)
    checks.append(_bracket("threshold_combination_min", float(combination.min()), lo=0.0))

    for dim in (1, 2):
        r = np.linspace(0.1, 3.0, 59)
        step = 1e-4
        derivative = (phi(dim, r + step) - phi(dim, r - step)) / (2.0 * step)
        residual = np.max(np.abs(derivative + r * phi(dim + 2, r)))
        checks.append(_residual(f"derivative_recurrence_N{dim}", residual, 1e-6))

    for dim in (1, 2):
        r = np.linspace(0.2, 2.0, 37)
        step = 1e-3
        centre = phi(dim, r)
        second = (phi(dim, r + step) - 2.0 * centre + phi(dim, r - step)) / step**2
        first = (phi(dim, r + step) - phi(dim, r - step)) / (2.0 * step)
        residual = np.max(np.abs(second + (dim - 1) / r * first - laplacian_series(dim, r, 1)))
        checks.append(_residual(f"laplacian_series_N{dim}", residual, 1e-5))

    worst = 0.0
    for dim in (1, 2):
        for n in range(2, 18, 2):
            table = kernel_series(dim, n)
            r = np.linspace(0.0, table.valid_radius, 41)
            value = phi(dim, r)
            lower, upper = partial_sum(dim, r, n - 1), partial_sum(dim, r, n)
            worst = max(worst, float(np.max(lower - value)), float(np.max(value - upper)))
            worst = max(worst, float(np.max(np.abs(value - upper) - table.coeffs[-1] * r ** (2 * n))))
    checks.append(_residual("series_sandwich", max(worst, 0.0), 1e-9))

    mass = 2.0 * psi(25.0)
    checks.append(_residual("unit_mass", abs(mass - 1.0), 1e-6, mass))

    r = np.linspace(0.0, 20.0, 801)
    envelope = float(np.max(np.abs(phi(1, r)) * np.exp(0.1 * r ** (4.0 / 3.0))))
    checks.append(CheckResult(name="decay_envelope", passed=envelope <= 1.0, value=envelope, bound="<= 1"))

    r = np.array([0.5, 1.0, 2.0, 3.0])
    residual = np.max(np.abs(phi(1, r) - radial_profile_quadrature(1, r)))
    checks.append(_residual("series_vs_quadrature", residual, 1e-8))

    if include_moments:
        checks.extend(verify_moments())
    return checks


def closed_form_patterns(dim: int) -> List[MomentPattern]:
    """Every tabulated pattern that fits in `dim` dimensions."""
    return [
        MomentPattern(beta=beta, ell=ell, m=m, dim=dim)
        for beta, ell, m in sorted(_closed_forms(), key=lambda key: (len(key[0]), key))
        if len(beta) <= dim - 1
    ]


def verify_moments(dims: Tuple[int, ...] = (2, 3), grid: Optional[GridSpec] = None) -> List[CheckResult]:
    """Closed forms against the oracle to 1e-5 relative, plus vanishing odd moments."""
    checks: List[CheckResult] = []
    for dim in dims:
        for pattern in closed_form_patterns(dim):
            expected = moment_closed_form(pattern)
            measured = moment_oracle(pattern, grid)
            relative = abs(measured - expected) / abs(expected)
            checks.append(_residual(pattern.label(), relative, ORACLE_TOL, measured))
        for beta in ((1,), (3,), (2, 1)):
            if len(beta) > dim - 1:
                continue
            pattern = MomentPattern(beta=beta, dim=dim)
            measured = moment_oracle(pattern, grid, check_refinement=False)
            checks.append(_residual(pattern.label(), abs(measured), 1e-7, measured))
    return checks
