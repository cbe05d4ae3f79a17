"""
Intensity contract.

A two-component Gaussian mixture is fitted to the image intensities inside
the brain. The intensity BPA puts mass on C_high (the classes expected to
appear bright, e.g. CSF and background) and on the full set C, in the
ratio of the two component likelihoods.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import stats
from scipy.special import expit, logsumexp, softmax

from ..core.labels import LabelSpace, MaskLike
from ..core.volumes import MaskVolume, ScalarVolume
from ..dempster.bpa import Bpa, ClassProbability
from ..utils.config import require_keys
from ..utils.constants import (
    GMM_MAX_ITER,
    GMM_MIN_SAMPLES,
    GMM_SIGMA_FLOOR_RATIO,
    GMM_TOLERANCE,
    MAX_EXP_ARG,
    MONOTONE_RTOL,
)
from ..utils.exceptions import (
    ConvergenceError,
    DegenerateDataError,
    DivergenceError,
    EmptyMaskError,
    LabelSpaceError,
    ValidationError,
)
from ..utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class Gmm2:
    """
    Two-component 1D Gaussian mixture, components ordered by mean.

    Attributes:
        mu_low, sigma_low: Dark component
        mu_high, sigma_high: Bright component
        pi_low, pi_high: Mixing weights summing to 1
    """

    mu_low: float
    sigma_low: float
    mu_high: float
    sigma_high: float
    pi_low: float = 0.5
    pi_high: float = 0.5

    def __post_init__(self):
        values = [self.mu_low, self.sigma_low, self.mu_high, self.sigma_high, self.pi_low, self.pi_high]
        if not all(np.isfinite(v) for v in values):
            raise ValidationError("GMM parameters must be finite")
        if self.sigma_low <= 0 or self.sigma_high <= 0:
            raise ValidationError("GMM standard deviations must be > 0")
        if self.pi_low < 0 or self.pi_high < 0 or abs(self.pi_low + self.pi_high - 1.0) > 1e-9:
            raise ValidationError("GMM mixing weights must be >= 0 and sum to 1")
        if self.mu_low > self.mu_high:
            raise ValidationError(f"GMM components out of order: mu_low={self.mu_low} > mu_high={self.mu_high}")

    @property
    def means(self) -> np.ndarray:
        return np.array([self.mu_low, self.mu_high])

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([self.sigma_low, self.sigma_high])

    @property
    def weights(self) -> np.ndarray:
        return np.array([self.pi_low, self.pi_high])

    def log_likelihood(self, values) -> float:
        """Mean per-sample log-likelihood of the mixture."""
        x = np.asarray(values, dtype=np.float64).ravel()
        return float(np.mean(logsumexp(_log_joint(x, self.means, self.sigmas, self.weights), axis=1)))

    def to_json(self) -> dict:
        return {
            "mu_low": self.mu_low,
            "sigma_low": self.sigma_low,
            "mu_high": self.mu_high,
            "sigma_high": self.sigma_high,
            "pi_low": self.pi_low,
            "pi_high": self.pi_high,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Gmm2":
        require_keys(data, ["mu_low", "sigma_low", "mu_high", "sigma_high"], "gmm")
        return cls(
            float(data["mu_low"]),
            float(data["sigma_low"]),
            float(data["mu_high"]),
            float(data["sigma_high"]),
            float(data.get("pi_low", 0.5)),
            float(data.get("pi_high", 0.5)),
        )


def _log_joint(x: np.ndarray, mu: np.ndarray, sigma: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """log π_j + log N(x | μ_j, σ_j), shape (n, 2)."""
    with np.errstate(divide="ignore"):
        log_pi = np.log(pi)
    return log_pi[None, :] + stats.norm.logpdf(x[:, None], loc=mu[None, :], scale=sigma[None, :])


class GmmFitter:
    """
    Expectation-maximisation for a two-component 1D Gaussian mixture.

    Initialisation puts the means at the 25th and 75th percentiles with
    equal mixing weights and the pooled standard deviation. Iteration stops
    once the mean per-sample log-likelihood moves by less than `tol`.
    """

    def __init__(self, tol: float = GMM_TOLERANCE, max_iter: int = GMM_MAX_ITER,
                 sigma_floor_ratio: float = GMM_SIGMA_FLOOR_RATIO):
        self.tol = tol
        self.max_iter = max_iter
        self.sigma_floor_ratio = sigma_floor_ratio
        self.history: List[float] = []
        self.n_iter = 0
        self.logger = get_logger(__name__)

    def fit(self, values) -> Gmm2:
        """
        Fit the mixture.

        Args:
            values: Intensity samples

        Returns:
            Fitted Gmm2 with mu_low <= mu_high
        """
        x = np.asarray(values, dtype=np.float64).ravel()
        if x.size < GMM_MIN_SAMPLES:
            raise ValidationError(f"GMM fit needs at least {GMM_MIN_SAMPLES} samples, got {x.size}")
        if not np.all(np.isfinite(x)):
            raise ValidationError("GMM samples must be finite")
        spread = float(x.max() - x.min())
        if spread == 0.0:
            raise DegenerateDataError("all intensity samples are equal; cannot fit a two-component GMM")
        floor = self.sigma_floor_ratio * spread

        mu = np.percentile(x, [25.0, 75.0])
        sigma = np.full(2, max(float(np.std(x)), floor))
        pi = np.array([0.5, 0.5])
        self.history = []

        previous = -np.inf
        for it in range(1, self.max_iter + 1):
            log_joint = _log_joint(x, mu, sigma, pi)
            per_sample = logsumexp(log_joint, axis=1)
            current = float(per_sample.mean())
            self.history.append(current)
            if it > 1 and current < previous - MONOTONE_RTOL * max(1.0, abs(previous)):
                self.logger.error(f"EM log-likelihood decreased at iteration {it}: {previous} -> {current}")
                raise DivergenceError(f"EM log-likelihood decreased at iteration {it}: {previous} -> {current}")
            if abs(current - previous) < self.tol:
                self.n_iter = it
                return self._ordered(mu, sigma, pi, it)
            previous = current

            resp = np.exp(log_joint - per_sample[:, None])
            mu, sigma, pi = self._maximize(x, resp, mu, sigma, pi, floor)
            self.logger.debug(f"EM iteration {it}: ll={current:.10g} mu={mu} sigma={sigma} pi={pi}")

        self.n_iter = self.max_iter
        raise ConvergenceError(f"EM did not converge within {self.max_iter} iterations")

    @staticmethod
    def _maximize(x, resp, mu, sigma, pi, floor) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        counts = resp.sum(axis=0)
        alive = counts > 0
        new_mu = mu.copy()
        new_sigma = sigma.copy()
        new_mu[alive] = (resp[:, alive] * x[:, None]).sum(axis=0) / counts[alive]
        var = (resp[:, alive] * (x[:, None] - new_mu[None, alive]) ** 2).sum(axis=0) / counts[alive]
        new_sigma[alive] = np.maximum(np.sqrt(var), floor)
        return new_mu, new_sigma, counts / counts.sum()

    def _ordered(self, mu, sigma, pi, iterations: int) -> Gmm2:
        order = np.argsort(mu, kind="stable")
        mu, sigma, pi = mu[order], sigma[order], pi[order]
        pi = pi / pi.sum()
        self.logger.info(
            f"GMM converged after {iterations} iterations: "
            f"low N({mu[0]:.4g}, {sigma[0]:.4g}), high N({mu[1]:.4g}, {sigma[1]:.4g})"
        )
        return Gmm2(float(mu[0]), float(sigma[0]), float(mu[1]), float(sigma[1]), float(pi[0]), float(1.0 - pi[0]))


def fit_gmm2(intensities) -> Gmm2:
    """Fit a two-component GMM with the default EM settings."""
    return GmmFitter().fit(intensities)


def fit_gmm2_volume(image: ScalarVolume, mask: Optional[MaskVolume] = None) -> Gmm2:
    """Fit the GMM to an image, restricted to `mask` when given."""
    if image.channels != 1:
        raise ValidationError("GMM fit needs a single-channel image")
    if mask is None:
        return fit_gmm2(image.data)
    image.meta.check_same(mask.meta, "image and brain mask")
    if mask.is_empty:
        raise EmptyMaskError("brain mask is empty; no intensities to fit")
    return fit_gmm2(image.data[mask.data])


def intensity_log_ratio(intensity, gmm: Gmm2) -> np.ndarray:
    """
    r = log[(1/σ_high) exp(-½ z_high²)] - log[(1/σ_low) exp(-½ z_low²)].

    m(C_high) = expit(r) and m(C) = expit(-r). Works elementwise on arrays.
    """
    x = np.asarray(intensity, dtype=np.float64)
    z_high = (x - gmm.mu_high) / gmm.sigma_high
    z_low = (x - gmm.mu_low) / gmm.sigma_low
    return (-np.log(gmm.sigma_high) - 0.5 * z_high ** 2) - (-np.log(gmm.sigma_low) - 0.5 * z_low ** 2)


def _check_c_high(space: LabelSpace, c_high: MaskLike) -> int:
    bits = int(space.mask(c_high))
    if bits == 0:
        raise LabelSpaceError("C_high must not be empty")
    if bits == space.full_bits:
        raise LabelSpaceError("C_high must not be the full label set")
    return bits


def intensity_bpa(intensity: float, gmm: Gmm2, c_high: MaskLike, space: LabelSpace) -> Bpa:
    """
    Intensity BPA at one voxel, focal sets C_high and C.

    Args:
        intensity: Image intensity at the voxel
        gmm: Fitted mixture
        c_high: Classes associated with the bright component
        space: Label space

    Returns:
        Bpa with m(C) > 0
    """
    bits = _check_c_high(space, c_high)
    r = float(intensity_log_ratio(intensity, gmm))
    m_full = max(float(expit(-r)), np.finfo(np.float64).tiny)
    m_high = float(expit(r))
    total = m_full + m_high
    return Bpa.from_mapping(space, {bits: m_high / total, space.full_bits: m_full / total})


def boost_intensity(p: np.ndarray, log_ratio: np.ndarray, high: np.ndarray) -> np.ndarray:
    """
    Array form of p ⊕ m^intensity.

    C_high channels are scaled by 1 + exp(r) relative to the others,
    evaluated in log space so large ratios cannot overflow.

    Args:
        p: Probabilities, shape (..., K)
        log_ratio: r per voxel, shape (...)
        high: Boolean C_high indicator, shape (K,)
    """
    p = np.asarray(p, dtype=np.float64)
    r = np.minimum(np.asarray(log_ratio, dtype=np.float64), MAX_EXP_ARG)
    log_other = -np.logaddexp(0.0, r)
    log_w = np.where(high, 0.0, log_other[..., None])
    with np.errstate(divide="ignore"):
        log_p = np.log(p)
    return softmax(log_p + log_w, axis=-1)


def apply_intensity(p: ClassProbability, m: Bpa) -> ClassProbability:
    """
    (p ⊕ m)(c) ∝ (1 + m(C_high)/m(C))·p(c) for c in C_high, p(c) otherwise.

    Args:
        p: Class probability
        m: BPA from `intensity_bpa`
    """
    if p.space != m.space:
        raise LabelSpaceError("probability and intensity BPA over different label spaces")
    full = m.space.full_bits
    others = [int(f) for f in m.focal if int(f) != full]
    if len(others) > 1:
        raise ValidationError("intensity BPA must have focal sets C_high and C only")
    m_full = m.mass(full)
    if m_full <= 0:
        raise ValidationError("intensity BPA needs m(C) > 0")
    if not others:
        return p
    bits = others[0]
    high = ((bits >> np.arange(m.space.K)) & 1).astype(bool)
    r = np.log(m.mass(bits)) - np.log(m_full)
    return ClassProbability(p.space, boost_intensity(p.p, np.asarray(r), high))
