"""Deterministic feature assembly for a target object.

Location encodings, visual/location difference encodings, the
Gaussian-weighted global feature, the target-centered spatial bias on
global attention, and the fused target vector. The numpy functions here
are pure; the ``*_graph`` builders express the same math as engine ops so
the fusion weights and Gaussian widths receive gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ObjectRef, Scene
from .grad import Tensor
from .grad import engine as ops

EPS_VISUAL_DIFF = 1e-9


@dataclass
class TargetParts:
    """Precomputed, parameter-free ingredients of a target encoding."""

    scene_id: str
    object_id: str
    o_i: np.ndarray  # pooled object feature (d,)
    l_i: np.ndarray  # location encoding (5,)
    delta_o: np.ndarray  # visual difference (d,)
    delta_l: np.ndarray  # location differences (5K,)
    d2_global: np.ndarray  # squared normalized distance, cell center -> target center (k,)
    v_global: np.ndarray  # scene feature grid (d, k)
    v_local: np.ndarray  # object feature grid (d, l)


@dataclass
class TargetEncoding:
    """Assembled encoding for one (scene, object) under given parameters."""

    scene_id: str
    object_id: str
    l_i: np.ndarray
    delta_o: np.ndarray
    delta_l: np.ndarray
    g_prime: np.ndarray
    v_i: np.ndarray


@dataclass
class SpatialBias:
    """Per-global-cell weight, peak value 1 when a cell center coincides
    with the target center."""

    weights: np.ndarray  # (k,) in (0, 1]
    sigma: float


def encode_location(box, width: float, height: float) -> np.ndarray:
    x, y, w, h = (float(v) for v in box)
    if w <= 0 or h <= 0:
        raise ValueError(f"degenerate box {box}")
    return np.array(
        [x / width, y / height, (x + w) / width, (y + h) / height, (w * h) / (width * height)]
    )


def encode_location_diff(target_box, other_boxes, slots: int) -> np.ndarray:
    """K-nearest-other location differences, zero-filled when fewer exist."""
    if slots < 1:
        raise ValueError("slots must be >= 1")
    tx, ty, tw, th = (float(v) for v in target_box)
    if tw <= 0 or th <= 0:
        raise ValueError(f"degenerate box {target_box}")
    out = np.zeros(5 * slots)
    if not len(other_boxes):
        return out
    boxes = np.asarray(other_boxes, dtype=np.float64)
    tc = np.array([tx + tw / 2, ty + th / 2])
    centers = boxes[:, :2] + boxes[:, 2:] / 2
    dist = np.hypot(centers[:, 0] - tc[0], centers[:, 1] - tc[1])
    order = np.argsort(dist, kind="stable")[:slots]
    for slot, j in enumerate(order):
        x, y, w, h = boxes[j]
        out[5 * slot : 5 * slot + 5] = [
            (x - tx) / tw,
            (y - ty) / th,
            ((x + w) - (tx + tw)) / tw,
            ((y + h) - (ty + th)) / th,
            (w * h) / (tw * th),
        ]
    return out


def encode_visual_diff(o_i: np.ndarray, others) -> np.ndarray:
    """Mean of unit-normalized feature differences to the other objects."""
    diffs = []
    for o_j in others:
        diff = o_i - o_j
        norm = float(np.linalg.norm(diff))
        if norm > EPS_VISUAL_DIFF:
            diffs.append(diff / norm)
    if not diffs:
        return np.zeros_like(o_i)
    return np.mean(diffs, axis=0)


def gaussian_weights(d2: np.ndarray, sigma: float) -> np.ndarray:
    """Normalized Gaussian cell weights from squared distances.

    Computed as a softmax of -d2/(2 sigma^2): the shift by the nearest
    cell's exponent keeps tiny sigmas from underflowing every weight.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    arg = -d2 / (2.0 * sigma * sigma)
    w = np.exp(arg - arg.max())
    return w / w.sum()


def gaussian_global(v_global: np.ndarray, d2: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussian-weighted mixture of global cell features (d,)."""
    return v_global @ gaussian_weights(d2, sigma)


def spatial_bias(d2: np.ndarray, sigma: float) -> SpatialBias:
    """Unnormalized target-centered cell weights, max 1 at zero distance."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return SpatialBias(weights=np.exp(-d2 / (2.0 * sigma * sigma)), sigma=float(sigma))


def squared_center_distances(scene: Scene, center_px) -> np.ndarray:
    """Squared distances from each cell center to a point, both in
    normalized (x/W, y/H) coordinates."""
    centers = scene.cell_centers()
    nx = centers[:, 0] / scene.width - center_px[0] / scene.width
    ny = centers[:, 1] / scene.height - center_px[1] / scene.height
    return nx * nx + ny * ny


def target_parts(scene: Scene, scene_objects, obj: ObjectRef, slots: int) -> TargetParts:
    others = [o for o in scene_objects if o.object_id != obj.object_id]
    return TargetParts(
        scene_id=scene.scene_id,
        object_id=obj.object_id,
        o_i=obj.feature,
        l_i=encode_location(obj.box, scene.width, scene.height),
        delta_o=encode_visual_diff(obj.feature, [o.feature for o in others]),
        delta_l=encode_location_diff(obj.box, [o.box for o in others], slots),
        d2_global=squared_center_distances(scene, obj.center),
        v_global=scene.v_global,
        v_local=obj.v_local,
    )


def encode_target(parts: TargetParts, w_m: np.ndarray, sigma: float) -> TargetEncoding:
    """Numpy snapshot of the assembled target vector under fixed parameters."""
    g_prime = gaussian_global(parts.v_global, parts.d2_global, sigma)
    cat = np.concatenate([parts.o_i, g_prime, parts.l_i, parts.delta_o, parts.delta_l])
    if w_m.shape[1] != cat.shape[0]:
        raise ValueError(f"fusion weight columns {w_m.shape[1]} != concat length {cat.shape[0]}")
    return TargetEncoding(
        scene_id=parts.scene_id,
        object_id=parts.object_id,
        l_i=parts.l_i,
        delta_o=parts.delta_o,
        delta_l=parts.delta_l,
        g_prime=g_prime,
        v_i=w_m @ cat,
    )


# ---------------------------------------------------------------------------
# engine-graph builders (differentiable w.r.t. w_m, sigma, sigma_b)


def gaussian_weights_graph(d2: Tensor, sigma: Tensor) -> Tensor:
    return ops.softmax(ops.neg(ops.div(d2, 2.0 * sigma * sigma)))


def gaussian_global_graph(v_global: Tensor, d2: Tensor, sigma: Tensor) -> Tensor:
    return ops.matmul(v_global, gaussian_weights_graph(d2, sigma))


def log_spatial_bias_graph(d2: Tensor, sigma: Tensor) -> Tensor:
    """log of the target-centered bias; kept in log domain so tiny sigmas
    cannot underflow to log(0)."""
    return ops.neg(ops.div(d2, 2.0 * sigma * sigma))


def assemble(o_i, g_prime: Tensor, l_i, delta_o, delta_l, w_m: Tensor) -> Tensor:
    """Fused target vector v_i = W_m [o_i, g'_i, l_i, do_i, dl_i]."""
    parts = [
        t if isinstance(t, Tensor) else ops.tensor(t)
        for t in (o_i, g_prime, l_i, delta_o, delta_l)
    ]
    cat = ops.concat(parts, axis=0)
    if w_m.data.shape[1] != cat.data.shape[0]:
        raise ValueError(
            f"fusion weight columns {w_m.data.shape[1]} != concat length {cat.data.shape[0]}"
        )
    return ops.matmul(w_m, cat)


def assemble_graph(parts: TargetParts, w_m: Tensor, sigma: Tensor) -> Tensor:
    g_prime = gaussian_global_graph(
        ops.tensor(parts.v_global), ops.tensor(parts.d2_global), sigma
    )
    return assemble(parts.o_i, g_prime, parts.l_i, parts.delta_o, parts.delta_l, w_m)
