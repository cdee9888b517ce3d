"""Association metric family: costs in [0, 1], lower means more similar.

Scalar forms implement the contracts; the ``*_matrix`` helpers are the
vectorized versions used to fill cost matrices in the association stages.
"""

from __future__ import annotations

import logging
import math
from typing import Sequence

import numpy as np

from .errors import EmptyGalleryError
from .types import Box2D, Box3D, Detection

logger = logging.getLogger(__name__)


def iou_2d(a: Box2D, b: Box2D) -> float:
    """Intersection over union of two axis-aligned boxes."""
    ax1, ay1, ax2, ay2 = a.corners()
    bx1, by1, bx2, by2 = b.corners()
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def iou_dist_enlarged(a: Box2D, b: Box2D, factor: float = 1.0) -> float:
    """1 - IoU after scaling both boxes by ``factor`` about their centers."""
    if factor < 1.0:
        raise ValueError(f"enlargement factor must be >= 1, got {factor}")
    return 1.0 - iou_2d(a.scaled(factor), b.scaled(factor))


def gauss_center_dist(a: Box3D, b: Box3D, sigma: float) -> float:
    """Gaussian-kernel distance of 3D centers: 1 - exp(-d^2 / (2 sigma^2)).

    Maps displacement d in [0, inf) onto [0, 1); zero iff the centers
    coincide, strictly increasing in d.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    d2 = float(np.sum((a.center - b.center) ** 2))
    return -math.expm1(-d2 / (2.0 * sigma * sigma))


def _clip_polygon(poly: np.ndarray, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Keep the part of ``poly`` on the left of the directed edge p -> q."""
    edge = q - p
    side = (poly - p) @ np.array([-edge[1], edge[0]])
    out = []
    n = len(poly)
    for i in range(n):
        j = (i + 1) % n
        si, sj = side[i], side[j]
        if si >= 0:
            out.append(poly[i])
        if (si > 0 and sj < 0) or (si < 0 and sj > 0):
            t = si / (si - sj)
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.array(out) if out else np.empty((0, 2))


def _polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def bev_iou(a: Box3D, b: Box3D) -> float:
    """IoU of the two ground-plane footprints (rotated rectangles).

    Computed by Sutherland-Hodgman clipping of one footprint against the
    other.
    """
    area_a = a.w * a.l
    area_b = b.w * b.l
    if area_a <= 0 or area_b <= 0:
        logger.warning("bev_iou on degenerate rectangle (areas %g, %g)", area_a, area_b)
        return 0.0
    corners_b = b.bev_corners()
    poly = a.bev_corners()
    for i in range(4):
        if len(poly) < 3:
            break
        poly = _clip_polygon(poly, corners_b[i], corners_b[(i + 1) % 4])
    inter = _polygon_area(poly)
    return inter / (area_a + area_b - inter)


def iou_3d(a: Box3D, b: Box3D) -> float:
    """Approximate volumetric IoU: BEV IoU times the vertical-interval IoU.

    Kept off the association hot path; the tracker's 3D metric is
    :func:`gauss_center_dist`.
    """
    alo, ahi = a.z_interval()
    blo, bhi = b.z_interval()
    inter_h = min(ahi, bhi) - max(alo, blo)
    if inter_h <= 0:
        return 0.0
    union_h = (ahi - alo) + (bhi - blo) - inter_h
    return bev_iou(a, b) * (inter_h / union_h)


def cosine_gallery_dist(gallery: Sequence[np.ndarray], embedding: np.ndarray) -> float:
    """Smallest cosine distance between a feature gallery and one embedding.

    All vectors are assumed unit-norm, so the result lies in [0, 2].
    """
    if len(gallery) == 0:
        raise EmptyGalleryError("cosine distance requested against an empty gallery")
    sims = np.stack(tuple(gallery)) @ np.asarray(embedding)
    return float(1.0 - np.max(sims))


def nms(dets: Sequence[Detection], iou_threshold: float) -> list[Detection]:
    """Greedy non-maximum suppression over same-class detections.

    Detections are visited in descending score (ties keep input order); one
    is kept iff its IoU with every already-kept detection is <= threshold.
    2D boxes are compared with axis-aligned IoU, 3D boxes with volumetric
    IoU. All boxes in one call must be of the same kind.
    """
    order = sorted(range(len(dets)), key=lambda i: -dets[i].score)
    kept: list[Detection] = []
    for i in order:
        box = dets[i].box
        if isinstance(box, Box2D):
            unsuppressed = all(iou_2d(box, k.box) <= iou_threshold for k in kept)
        else:
            unsuppressed = all(iou_3d(box, k.box) <= iou_threshold for k in kept)
        if unsuppressed:
            kept.append(dets[i])
    return kept


# ---------------------------------------------------------------------------
# Vectorized cost-matrix fills


def _corner_arrays(boxes: Sequence[Box2D], factor: float) -> np.ndarray:
    out = np.empty((len(boxes), 4))
    for i, b in enumerate(boxes):
        hw, hh = b.w * factor / 2.0, b.h * factor / 2.0
        out[i] = (b.cx - hw, b.cy - hh, b.cx + hw, b.cy + hh)
    return out


def iou_dist_matrix(rows: Sequence[Box2D], cols: Sequence[Box2D], factor: float = 1.0) -> np.ndarray:
    """(len(rows), len(cols)) matrix of enlarged-IoU distances."""
    if len(rows) == 0 or len(cols) == 0:
        return np.zeros((len(rows), len(cols)))
    a = _corner_arrays(rows, factor)[:, None, :]
    b = _corner_arrays(cols, factor)[None, :, :]
    iw = np.minimum(a[..., 2], b[..., 2]) - np.maximum(a[..., 0], b[..., 0])
    ih = np.minimum(a[..., 3], b[..., 3]) - np.maximum(a[..., 1], b[..., 1])
    inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
    area_a = (a[..., 2] - a[..., 0]) * (a[..., 3] - a[..., 1])
    area_b = (b[..., 2] - b[..., 0]) * (b[..., 3] - b[..., 1])
    return 1.0 - inter / (area_a + area_b - inter)


def gauss_center_dist_matrix(rows: np.ndarray, cols: np.ndarray, sigma: float) -> np.ndarray:
    """Kernelized center-distance matrix; rows and cols are (n, 3) centers."""
    if len(rows) == 0 or len(cols) == 0:
        return np.zeros((len(rows), len(cols)))
    d2 = np.sum((rows[:, None, :] - cols[None, :, :]) ** 2, axis=-1)
    return -np.expm1(-d2 / (2.0 * sigma * sigma))


def cosine_gallery_dist_matrix(galleries: Sequence[Sequence[np.ndarray]],
                               embeddings: Sequence[np.ndarray | None]) -> np.ndarray:
    """Per-track min cosine distance to each detection embedding.

    Pairs where the gallery is empty or the detection has no embedding get
    +inf (inadmissible).
    """
    n, m = len(galleries), len(embeddings)
    costs = np.full((n, m), np.inf)
    have_emb = [j for j, e in enumerate(embeddings) if e is not None]
    if not have_emb:
        return costs
    emb = np.stack([embeddings[j] for j in have_emb]).T  # (dim, m')
    for i, gallery in enumerate(galleries):
        if len(gallery) == 0:
            continue
        sims = np.stack(tuple(gallery)) @ emb  # (gallery, m')
        costs[i, have_emb] = 1.0 - sims.max(axis=0)
    return costs
