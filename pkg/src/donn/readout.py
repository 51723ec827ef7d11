"""Detector-plane measurement, class scores, decision rule, and loss head.

The only nonlinearity in the whole pipeline is photodetection: measured
intensity is ``|U|**2``. A class score is the intensity integrated over
that class's detector region, the decision is the argmax, and training
uses a softmax cross-entropy on (optionally sum-normalized) scores.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import ComplexField, GridSpec

Rect = tuple[int, int, int, int]


@dataclass(frozen=True)
class DetectorLayout:
    """Disjoint axis-aligned detector regions, one per class.

    Each region is ``(x0, y0, x1, y1)`` in pixel coordinates with
    inclusive bounds. Regions must be nonempty, inside the grid, and
    pairwise disjoint; they need not cover the plane.
    """

    grid: GridSpec
    regions: tuple[Rect, ...]

    def __post_init__(self):
        regions = tuple(tuple(int(v) for v in r) for r in self.regions)
        if not regions:
            raise ValueError("layout needs at least one region")
        cover = np.zeros(self.grid.shape, dtype=np.uint8)
        for i, (x0, y0, x1, y1) in enumerate(regions):
            if x0 > x1 or y0 > y1:
                raise ValueError(f"region {i} is empty: {(x0, y0, x1, y1)}")
            if x0 < 0 or y0 < 0 or x1 >= self.grid.nx or y1 >= self.grid.ny:
                raise ValueError(f"region {i} lies outside the grid")
            cover[y0 : y1 + 1, x0 : x1 + 1] += 1
        if cover.max() > 1:
            raise ValueError("detector regions overlap")
        object.__setattr__(self, "regions", regions)

    @property
    def n_classes(self) -> int:
        return len(self.regions)


def default_detector_layout(grid: GridSpec, n_classes: int = 10) -> DetectorLayout:
    """Equal-area detector regions in a 2 x 5 block, centered in the grid.

    On the default 91 x 91 grid this gives ten 9 x 9 regions with 9-pixel
    gaps; other grid sizes scale the region size proportionally. Class
    indices run row-major, 0-4 on the top row.
    """
    if n_classes != 10:
        raise ValueError("the default layout is defined for 10 classes")
    side = max(1, round(9 * min(grid.nx, grid.ny) / 91))
    gap = side
    span_x = 5 * side + 4 * gap
    span_y = 2 * side + gap
    if span_x > grid.nx or span_y > grid.ny:
        raise ValueError(f"grid {grid.nx}x{grid.ny} too small for the default layout")
    x_start = (grid.nx - span_x) // 2
    y_start = (grid.ny - span_y) // 2
    regions = []
    for row in range(2):
        y0 = y_start + row * (side + gap)
        for col in range(5):
            x0 = x_start + col * (side + gap)
            regions.append((x0, y0, x0 + side - 1, y0 + side - 1))
    return DetectorLayout(grid, tuple(regions))


def measure(field: ComplexField) -> np.ndarray:
    """Photodetector intensity ``|U|**2``, pointwise and nonnegative."""
    return field.intensity()


def class_scores(intensity: np.ndarray, layout: DetectorLayout) -> np.ndarray:
    """Sum the intensity over each detector region.

    Returns one nonnegative score per class; because regions are disjoint
    the scores never sum to more than the total detector-plane power.
    """
    intensity = np.asarray(intensity)
    if intensity.shape != layout.grid.shape:
        raise ValueError(
            f"intensity shape {intensity.shape} does not match "
            f"layout grid {layout.grid.shape}"
        )
    return np.array(
        [
            intensity[y0 : y1 + 1, x0 : x1 + 1].sum()
            for (x0, y0, x1, y1) in layout.regions
        ]
    )


def batch_class_scores(intensity: np.ndarray, layout: DetectorLayout) -> np.ndarray:
    """Region sums for a stack of intensity maps, shape (batch, classes)."""
    return np.stack(
        [
            intensity[:, y0 : y1 + 1, x0 : x1 + 1].sum(axis=(1, 2))
            for (x0, y0, x1, y1) in layout.regions
        ],
        axis=1,
    )


def predict(scores: np.ndarray) -> int:
    """Argmax over classes; ties break toward the lowest class index."""
    return int(np.argmax(scores))


class DegenerateScoresError(ValueError):
    """All detector regions received zero energy; the loss is undefined."""


def softmax_cross_entropy(
    scores: np.ndarray,
    label: int,
    temperature: float = 0.1,
    normalize: bool = True,
) -> tuple[float, np.ndarray]:
    """Cross-entropy loss on detector scores, with its exact gradient.

    With ``normalize`` set (the default), scores are first divided by
    their sum so the loss is invariant to overall input power, then
    scaled by ``1/temperature`` and passed through a softmax:
    ``loss = -log softmax(s / sum(s) / T)[label]``. The returned gradient
    is the exact derivative of that loss with respect to the raw input
    scores, including the normalization term, which is what downstream
    chain rules and finite differences see. Without normalization the
    gradient is the plain ``(softmax - onehot) / T``, whose entries sum
    to zero.

    Raises:
        IndexError: label outside [0, n_classes).
        ValueError: non-positive temperature.
        DegenerateScoresError: normalization requested but all scores
            are zero (no energy reached any detector).
    """
    s = np.asarray(scores, dtype=np.float64)
    n = s.shape[0]
    if not 0 <= label < n:
        raise IndexError(f"label {label} out of range for {n} classes")
    if temperature <= 0:
        raise ValueError("temperature must be positive")

    if normalize:
        total = s.sum()
        if total <= 0.0:
            raise DegenerateScoresError(
                "degenerate scores: no detector region received energy"
            )
        s_hat = s / total
    else:
        s_hat = s

    z = s_hat / temperature
    z = z - z.max()  # shift-invariant, avoids overflow
    e = np.exp(z)
    p = e / e.sum()
    loss = -float(np.log(p[label]))

    grad_hat = p.copy()
    grad_hat[label] -= 1.0
    grad_hat /= temperature
    if normalize:
        # d(s/total)/ds picks up the projection along the score vector
        grad = (grad_hat - np.dot(grad_hat, s_hat)) / total
    else:
        grad = grad_hat
    return loss, grad
