"""PCA of numeral embeddings and the angular-spacing diagnostic."""

import csv
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel
from sklearn.decomposition import PCA

from app.autodiff.tensor import no_grad
from app.core.exceptions import DegenerateDataError, ShapeMismatchError
from app.model.transformer import EmbeddingStage, Model

logger = logging.getLogger(__name__)

PROJECTION_HEADER = ("token", "x", "y", "theta")
MIN_POINTS = 3
MIN_DIM = 2
# total variance below this counts as no variance at all
VARIANCE_FLOOR = 1e-12
RADIUS_FLOOR = 1e-12


@dataclass(frozen=True, slots=True)
class EmbeddingProjection:
    """The first two principal components of a set of embedding vectors.

    ``consecutive_gaps`` follow numeral order (token ``i`` to ``i + 1``,
    wrapping at the end); :func:`angle_uniformity` instead walks the points
    in angular order.
    """

    token_ids: NDArray[np.int64]
    coords: NDArray[np.float64]
    explained_variance: NDArray[np.float64]
    explained_variance_ratio: NDArray[np.float64]
    components: NDArray[np.float64]
    mean: NDArray[np.float64]

    @property
    def angles(self) -> NDArray[np.float64]:
        return np.arctan2(self.coords[:, 1], self.coords[:, 0])

    @property
    def consecutive_gaps(self) -> NDArray[np.float64]:
        theta = self.angles
        return np.mod(np.roll(theta, -1) - theta, 2 * math.pi)

    def reconstruct(self) -> NDArray[np.float64]:
        """Map the 2-D coordinates back into the original space."""
        return self.coords @ self.components + self.mean


class AngleStats(BaseModel):
    mean_gap: float
    std_gap: float
    coeff_var: float


def pca2(
    vectors: ArrayLike, token_ids: Sequence[int] | None = None
) -> EmbeddingProjection:
    """Project ``vectors`` (one row per token) onto their top two principal axes.

    Each axis is signed so that its largest-magnitude loading is positive.

    Raises:
        ShapeMismatchError: If there are fewer than 3 rows or 2 columns.
        DegenerateDataError: If the rows have no variance.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < MIN_POINTS or x.shape[1] < MIN_DIM:  # noqa: PLR2004
        raise ShapeMismatchError(
            "pca2 needs at least 3 vectors of dimension 2 or more",
            details={"shape": list(x.shape)},
        )
    if float(x.var(axis=0).sum()) < VARIANCE_FLOOR:
        raise DegenerateDataError(
            "embedding vectors have zero variance", details={"rows": x.shape[0]}
        )
    pca = PCA(n_components=2, svd_solver="full")
    coords = pca.fit_transform(x)
    components = pca.components_.copy()
    for i in range(2):
        if components[i, np.argmax(np.abs(components[i]))] < 0:
            components[i] *= -1
            coords[:, i] *= -1
    if token_ids is None:
        ids = np.arange(x.shape[0])
    else:
        ids = np.asarray(token_ids, dtype=np.int64)
    logger.debug("PCA explained variance ratio %s", pca.explained_variance_ratio_)
    return EmbeddingProjection(
        token_ids=ids,
        coords=coords,
        explained_variance=pca.explained_variance_.astype(np.float64),
        explained_variance_ratio=pca.explained_variance_ratio_.astype(np.float64),
        components=components,
        mean=pca.mean_.astype(np.float64),
    )


def angle_uniformity(proj: EmbeddingProjection) -> AngleStats:
    """Spread of the gaps between angularly adjacent points.

    Points are sorted by ``atan2(y, x)`` and the gaps taken around the full
    circle, so a perfectly even circle scores ``coeff_var == 0`` whatever
    the numeral order.

    Raises:
        DegenerateDataError: If any point sits at the origin.
    """
    radius = np.hypot(proj.coords[:, 0], proj.coords[:, 1])
    if np.any(radius < RADIUS_FLOOR):
        raise DegenerateDataError(
            "a projected point lies at the origin and has no angle",
            details={"tokens": proj.token_ids[radius < RADIUS_FLOOR].tolist()},
        )
    theta = np.sort(proj.angles)
    gaps = np.diff(np.append(theta, theta[0] + 2 * math.pi))
    mean_gap = float(gaps.mean())
    std_gap = float(gaps.std())
    return AngleStats(mean_gap=mean_gap, std_gap=std_gap, coeff_var=std_gap / mean_gap)


def numeral_embeddings(
    model: Model, p: int, stage: EmbeddingStage = EmbeddingStage.TABLE
) -> NDArray[np.float64]:
    """``[p, d]`` vectors for numerals ``0 .. p - 1``.

    ``table`` reads raw token rows; ``mlp`` runs each numeral alone through
    the embedding stack at position 0.
    """
    if stage is EmbeddingStage.TABLE:
        return model["embedding.token_table"].data[:p].astype(np.float64)
    with no_grad():
        out = model.embed(np.arange(p, dtype=np.int64)[:, None], stage)
    return out.data[:, 0, :].astype(np.float64)


def write_projection_csv(
    path: Path, proj: EmbeddingProjection, tokens: Sequence[str]
) -> Path:
    """``token,x,y,theta`` per projected token."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(PROJECTION_HEADER)
        rows = zip(proj.token_ids, proj.coords, proj.angles, strict=True)
        for token_id, (x, y), theta in rows:
            values = (float(x), float(y), float(theta))
            writer.writerow([tokens[int(token_id)], *map(repr, values)])
    logger.info("Wrote projection of %d tokens to %s", len(proj.token_ids), path)
    return path
