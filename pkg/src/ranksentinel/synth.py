"""Synthetic expression data with a planted influential sample.

The generator provides ground truth for testing the detector: a handful
of signal features separate the two groups, and one chosen sample can be
contaminated with an extra shift on those signal features so that its
deletion visibly perturbs the top of the ranking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .ingest import ExpressionMatrix

# Log2-scale range for baseline feature means; keeps generated values in a
# plausible expression range and safely above the log-transform knee.
BASE_MEAN_RANGE = (3.0, 9.0)
NOISE_SD = 1.0


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic dataset.

    ``contaminated_index`` is the 0-based column among all samples (cases
    first, then controls); sample ids are named obs1..obsN in column
    order, so column k is obs(k+1). Shifts are in units of the noise
    standard deviation.
    """

    n_cases: int
    n_controls: int
    n_features: int
    n_signal: int
    effect_size: float
    contaminated_index: int
    contamination: float
    seed: int

    def __post_init__(self):
        if min(self.n_cases, self.n_controls, self.n_features) < 1:
            raise ValidationError("sample and feature counts must be positive")
        if not (0 <= self.n_signal <= self.n_features):
            raise ValidationError(
                f"n_signal must lie in 0..{self.n_features}, got {self.n_signal}"
            )
        n = self.n_cases + self.n_controls
        if not (0 <= self.contaminated_index < n):
            raise ValidationError(
                f"contaminated_index must lie in 0..{n - 1}, got {self.contaminated_index}"
            )
        for name in ("effect_size", "contamination"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValidationError(f"{name} must be a finite non-negative real, got {v}")

    @property
    def n_samples(self) -> int:
        return self.n_cases + self.n_controls


def generate_matrix(spec: SyntheticSpec) -> ExpressionMatrix:
    """Deterministic-for-seed matrix in the ingest format.

    Values are 2**z with z normal on the log2 scale, so the default
    log2(v + 1) transform downstream approximately recovers z. The first
    ``n_signal`` features carry the group effect; the contaminated column
    is displaced on those same features against its own group's direction
    of separation (a contaminated case moves toward and past the controls,
    and vice versa). That orientation is what disrupts the ranking: while
    the sample is present it drags the signal features' t-statistics down,
    and its deletion lets them jump back toward the top.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_samples
    mu = rng.uniform(*BASE_MEAN_RANGE, size=spec.n_features)
    z = mu[:, None] + rng.normal(0.0, NOISE_SD, size=(spec.n_features, n))
    if spec.n_signal:
        z[: spec.n_signal, : spec.n_cases] += spec.effect_size * NOISE_SD
        against_group = -1.0 if spec.contaminated_index < spec.n_cases else 1.0
        z[: spec.n_signal, spec.contaminated_index] += against_group * spec.contamination * NOISE_SD
    values = np.exp2(z)
    feature_ids = tuple(
        f"sig{j + 1}" if j < spec.n_signal else f"null{j - spec.n_signal + 1}"
        for j in range(spec.n_features)
    )
    sample_ids = tuple(f"obs{i + 1}" for i in range(n))
    labels = ("case",) * spec.n_cases + ("control",) * spec.n_controls
    return ExpressionMatrix(feature_ids, sample_ids, values, labels)
