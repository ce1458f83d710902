"""Readout feature maps and trained readout weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

VARIANTS = {"v1": 1, "v2": 2, "v3": 3}


@dataclass(frozen=True)
class ReadoutSpec:
    """Feature map ``f(theta)``.

    ``v1`` is ``[1, sin]``, ``v2`` is ``[1, sin, cos]`` and ``v3`` (default)
    is ``[1, sin, sin^2]``.  The bias feature always comes first.
    """

    variant: str = "v3"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidArgument(f"unknown readout variant {self.variant!r}")

    @property
    def code(self) -> int:
        return VARIANTS[self.variant]

    def n_features(self, N: int) -> int:
        return N + 1 if self.variant == "v1" else 2 * N + 1


@dataclass(frozen=True)
class ReadoutWeights:
    """Trained ``M x N_ro`` linear map from features to predictions."""

    W: np.ndarray
    spec: ReadoutSpec
    epsilon: float

    def __post_init__(self):
        W = np.ascontiguousarray(self.W, dtype=np.float64)
        if W.ndim != 2:
            raise InvalidArgument("readout weights must be a matrix")
        if not np.all(np.isfinite(W)):
            raise InvalidArgument("readout weights must be finite")
        object.__setattr__(self, "W", W)

    @property
    def M(self) -> int:
        return self.W.shape[0]

    @property
    def n_features(self) -> int:
        return self.W.shape[1]

    def check(self, N: int, M: int | None = None) -> None:
        if self.n_features != self.spec.n_features(N):
            raise InvalidArgument(
                f"readout has {self.n_features} features, {self.spec.variant} with N={N} needs "
                f"{self.spec.n_features(N)}"
            )
        if M is not None and self.M != M:
            raise InvalidArgument(f"readout has {self.M} outputs, expected {M}")


def readout_features(theta, spec: ReadoutSpec) -> np.ndarray:
    """Feature vector (1-D input) or feature rows (``T x N`` input -> ``T x N_ro``)."""
    theta = np.asarray(theta, dtype=np.float64)
    s = np.sin(theta)
    ones = np.ones(theta.shape[:-1] + (1,))
    if spec.variant == "v1":
        blocks = (ones, s)
    elif spec.variant == "v2":
        blocks = (ones, s, np.cos(theta))
    else:
        blocks = (ones, s, s * s)
    return np.concatenate(blocks, axis=-1)
