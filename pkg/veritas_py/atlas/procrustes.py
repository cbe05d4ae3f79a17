"""
Weighted generalised Procrustes alignment with anisotropic scalings.

Each sample i is mapped to the consensus by x -> M_i x + t_i with M_i
diagonal. The objective

    E = Σ_i Σ_k w_ik ‖M_i x_ik + t_i - g_k‖²

is minimised by alternating least squares under two constraints on the
consensus: its barycenter is pinned to c and its mean squared radius to S,
both taken from the weighted landmark means. A zero weight marks a missing
landmark.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import brentq

from ..utils.constants import MONOTONE_RTOL, PROCRUSTES_MAX_ITER, PROCRUSTES_TOLERANCE, TEMPORAL_SIGMA_DAYS
from ..utils.exceptions import DegenerateDataError, DivergenceError, ValidationError
from ..utils.logger import get_logger
from .temporal import temporal_weight


@dataclass(frozen=True)
class LandmarkConfig:
    """
    Landmarks of one sample.

    Attributes:
        sample_id: Sample identifier
        ga_days: Gestational age in days
        points: Array (K, 3) in mm; coordinates of absent landmarks are ignored
        present: K booleans
    """

    sample_id: str
    ga_days: float
    points: np.ndarray
    present: np.ndarray

    def __post_init__(self):
        points = np.array(self.points, dtype=np.float64, copy=True)
        present = np.array(self.present, dtype=bool, copy=True)
        if points.ndim != 2 or points.shape[1] != 3:
            raise ValidationError(f"sample {self.sample_id!r}: points must have shape (K, 3)")
        if present.shape != (points.shape[0],):
            raise ValidationError(f"sample {self.sample_id!r}: present needs {points.shape[0]} flags")
        if not np.all(np.isfinite(points[present])):
            raise ValidationError(f"sample {self.sample_id!r}: present landmarks must be finite")
        points[~present] = 0.0
        points.setflags(write=False)
        present.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "present", present)


@dataclass
class ProcrustesSolution:
    """
    Result of the alternating least squares.

    Attributes:
        sample_ids: Sample identifiers in input order
        scales: (N, 3) diagonals of M_i
        translations: (N, 3) t_i in mm
        consensus: (K, 3) g_k in mm
        objective: Final objective value
        history: Objective after initialisation and after every iteration
        iterations: Number of ALS iterations run
        converged: Whether the relative decrease criterion was met
    """

    sample_ids: List[str]
    scales: np.ndarray
    translations: np.ndarray
    consensus: np.ndarray
    objective: float
    history: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    def transform(self, i: int, points: np.ndarray) -> np.ndarray:
        return np.asarray(points) * self.scales[i] + self.translations[i]

    def to_json(self, landmark_ids: Optional[Sequence[str]] = None) -> dict:
        data = {
            "objective": self.objective,
            "iterations": self.iterations,
            "converged": self.converged,
            "transforms": [
                {"sample_id": sid, "scale": self.scales[i].tolist(), "translation_mm": self.translations[i].tolist()}
                for i, sid in enumerate(self.sample_ids)
            ],
            "consensus_mm": self.consensus.tolist(),
        }
        if landmark_ids is not None:
            data["landmark_ids"] = list(landmark_ids)
        return data


def landmark_weights(configs: Sequence[LandmarkConfig], ga_target: Optional[float],
                     sigma_days: float = TEMPORAL_SIGMA_DAYS) -> np.ndarray:
    """w_ik = present_ik · temporal weight of sample i (cut beyond 3σ); presence only without a target."""
    present = np.stack([c.present for c in configs]).astype(np.float64)
    if ga_target is None:
        return present
    ga = np.array([c.ga_days for c in configs], dtype=np.float64)
    return present * np.atleast_1d(temporal_weight(ga, ga_target, sigma_days, cutoff=True))[:, None]


def procrustes_objective(X: np.ndarray, w: np.ndarray, scales: np.ndarray, translations: np.ndarray,
                         consensus: np.ndarray) -> float:
    residual = X * scales[:, None, :] + translations[:, None, :] - consensus[None, :, :]
    return float((w * (residual ** 2).sum(axis=2)).sum())


class ProcrustesSolver:
    """
    Alternating least squares for the weighted Procrustes problem.

    Step 1 fits (M_i, t_i) per sample and coordinate by weighted linear
    regression onto the consensus. Step 2 solves the consensus update under
    both constraints exactly: the quadratic is minimised on the sphere
    {Σ_k h_k = 0, Σ_k ‖h_k‖² = K·S} through its secular equation. Every
    iterate is feasible and the objective never increases.
    """

    def __init__(self, tol: float = PROCRUSTES_TOLERANCE, max_iter: int = PROCRUSTES_MAX_ITER,
                 sigma_days: float = TEMPORAL_SIGMA_DAYS):
        self.tol = tol
        self.max_iter = max_iter
        self.sigma_days = sigma_days
        self.logger = get_logger(__name__)

    def solve(self, configs: Sequence[LandmarkConfig], ga_target: Optional[float] = None) -> ProcrustesSolution:
        """
        Align the samples.

        Args:
            configs: Landmark configurations, all with the same K
            ga_target: Target gestational age in days; None weights by presence only

        Returns:
            ProcrustesSolution
        """
        if len(configs) < 2:
            raise ValidationError(f"Procrustes alignment needs at least 2 samples, got {len(configs)}")
        K = configs[0].points.shape[0]
        if any(c.points.shape[0] != K for c in configs):
            raise ValidationError("all samples must list the same landmarks")

        X = np.stack([c.points for c in configs])
        w = landmark_weights(configs, ga_target, self.sigma_days)
        W_k = w.sum(axis=0)
        if np.any(W_k <= 0):
            absent = np.flatnonzero(W_k <= 0).tolist()
            raise ValidationError(f"landmarks {absent} have zero weight in every sample")

        landmark_means = (w[:, :, None] * X).sum(axis=0) / W_k[:, None]
        center = landmark_means.mean(axis=0)
        size = float(((landmark_means - center) ** 2).sum(axis=1).mean())
        if not size > 0:
            raise DegenerateDataError("all weighted landmark means coincide; the consensus size is 0")

        self._basis = null_space(np.ones((1, K)))
        self._scale2 = 1.0 + float(np.max(X ** 2))
        consensus = landmark_means.copy()
        scales = np.ones((len(configs), 3))
        translations = self._initial_translations(X, w, consensus)

        # float noise floor of the objective at the scale of the landmark cloud
        rounding = 1e-12 * float(W_k.sum()) * (float(center @ center) + size)
        objective = procrustes_objective(X, w, scales, translations, consensus)
        history = [objective]
        converged = False
        iterations = 0
        for iterations in range(1, self.max_iter + 1):
            scales, translations = self._fit_transforms(X, w, consensus, scales, translations)
            consensus = self._fit_consensus(X, w, W_k, scales, translations, center, size)
            current = procrustes_objective(X, w, scales, translations, consensus)
            previous = history[-1]
            history.append(current)
            if current > previous + MONOTONE_RTOL * previous + rounding:
                self.logger.error(f"Procrustes objective rose at iteration {iterations}: {previous} -> {current}")
                raise DivergenceError(f"Procrustes objective rose at iteration {iterations}: {previous} -> {current}")
            self.logger.debug(f"Procrustes iteration {iterations}: objective {current:.6e}")
            if current == 0.0 or (previous - current) <= self.tol * previous:
                converged = True
                break

        self.logger.info(
            f"Procrustes alignment of {len(configs)} samples x {K} landmarks: "
            f"objective {history[-1]:.6e} after {iterations} iterations"
        )
        return ProcrustesSolution(
            sample_ids=[c.sample_id for c in configs],
            scales=scales,
            translations=translations,
            consensus=consensus,
            objective=history[-1],
            history=history,
            iterations=iterations,
            converged=converged,
        )

    @staticmethod
    def _initial_translations(X, w, consensus) -> np.ndarray:
        totals = w.sum(axis=1)
        safe = np.where(totals > 0, totals, 1.0)[:, None]
        x_bar = (w[:, :, None] * X).sum(axis=1) / safe
        g_bar = (w[:, :, None] * consensus[None]).sum(axis=1) / safe
        return np.where(totals[:, None] > 0, g_bar - x_bar, 0.0)

    def _fit_transforms(self, X, w, consensus, scales, translations) -> Tuple[np.ndarray, np.ndarray]:
        totals = w.sum(axis=1)
        active = totals > 0
        safe = np.where(active, totals, 1.0)[:, None]
        x_bar = (w[:, :, None] * X).sum(axis=1) / safe
        g_bar = (w[:, :, None] * consensus[None]).sum(axis=1) / safe
        dx = X - x_bar[:, None, :]
        dg = consensus[None] - g_bar[:, None, :]
        var = (w[:, :, None] * dx ** 2).sum(axis=1)
        cov = (w[:, :, None] * dx * dg).sum(axis=1)

        informative = var > 1e-24 * safe * self._scale2
        new_scales = np.where(informative, cov / np.where(informative, var, 1.0), scales)
        new_translations = g_bar - new_scales * x_bar
        new_scales = np.where(active[:, None], new_scales, scales)
        new_translations = np.where(active[:, None], new_translations, translations)
        return new_scales, new_translations

    def _fit_consensus(self, X, w, W_k, scales, translations, center, size) -> np.ndarray:
        K = W_k.size
        aligned = X * scales[:, None, :] + translations[:, None, :]
        target = (w[:, :, None] * aligned).sum(axis=0) / W_k[:, None] - center

        Q = self._basis
        B = Q.T @ (W_k[:, None] * Q)
        eigvals, eigvecs = np.linalg.eigh(B)
        b = eigvecs.T @ (Q.T @ (W_k[:, None] * target))
        u = _sphere_minimiser(eigvals, b, K * size)
        h = Q @ (eigvecs @ u)

        h -= h.mean(axis=0)
        norm2 = float((h ** 2).sum())
        if norm2 > 0:
            h *= np.sqrt(K * size / norm2)
        return center + h


def _sphere_minimiser(eigvals: np.ndarray, b: np.ndarray, radius2: float) -> np.ndarray:
    """
    argmin_u Σ_d (u_dᵀ Λ u_d - 2 b_dᵀ u_d) subject to Σ_d ‖u_d‖² = radius2.

    Λ is diagonal (eigvals, ascending) and the columns d share it. The
    minimiser is u = b / (Λ + λ) with λ >= -Λ_min solving the secular
    equation, or the degenerate solution at λ = -Λ_min.
    """
    lam_min = float(eigvals[0])
    scale = max(1.0, float(np.abs(eigvals).max()))
    on_min = np.isclose(eigvals, lam_min, rtol=0.0, atol=1e-12 * scale)
    b_norm2 = float((b ** 2).sum())

    def norm2(lam: float) -> float:
        return float(((b / (eigvals + lam)[:, None]) ** 2).sum())

    b_min2 = float((b[on_min] ** 2).sum())
    if b_min2 <= 1e-28 * max(b_norm2, 1e-300):
        rest = ~on_min
        gaps = eigvals[rest] - lam_min
        partial2 = float(((b[rest] / gaps[:, None]) ** 2).sum()) if rest.any() else 0.0
        if partial2 <= radius2:
            u = np.zeros_like(b)
            u[rest] = b[rest] / gaps[:, None]
            u[np.flatnonzero(on_min)[0], 0] = np.sqrt(radius2 - partial2)
            return u

    hi = np.sqrt(b_norm2 / radius2) - lam_min + 1.0
    delta = max(1.0, abs(lam_min))
    lo = -lam_min + delta
    while norm2(lo) <= radius2:
        delta *= 0.1
        if delta < 1e-300:
            break
        lo = -lam_min + delta
    lam = brentq(lambda x: norm2(x) - radius2, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return b / (eigvals + lam)[:, None]


def procrustes_solve(configs: Sequence[LandmarkConfig], ga_target: Optional[float] = None) -> ProcrustesSolution:
    """Weighted generalised Procrustes alignment with the default settings."""
    return ProcrustesSolver().solve(configs, ga_target)
