"""Toy layered segmentation decoder and the map-guided planning query.

Each layer refines per-cell features with a shared-width MLP block and lets
a small set of learned queries cross-attend to a strided subset of those
cells. The first four queries are class queries whose dot products with the
cell features give per-class mask logits; the remaining "thing" queries
regress axis-aligned obstacle boxes with a confidence logit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dims import ModelDims
from ..geometry import GridSpec
from ..numerics import SeededRng, Tensor, constant, glorot_uniform, ops, parameter
from ..scenario.bev import CLASSES, BEVGrid, token_index

N_CLASSES = len(CLASSES)


@dataclass(frozen=True, eq=False)
class SegLayer:
    """Outputs of one decoder layer.

    Attributes:
        mask_logits: (cells, 4) per-class logits in ``CLASSES`` order; a
            sigmoid gives the per-class cell probabilities.
        boxes: (n_things, 4) sigmoid-normalized (cx, cy, w, h), relative to
            the grid extent with (0, 0) at the grid origin.
        score_logits: (n_things,) objectness logits.
    """

    mask_logits: Tensor
    boxes: Tensor
    score_logits: Tensor


@dataclass(frozen=True, eq=False)
class SegPrediction:
    layers: tuple[SegLayer, ...]
    grid: GridSpec
    encoder: SegLayer | None = None

    @property
    def final(self) -> SegLayer:
        return self.layers[-1]


@dataclass(frozen=True, eq=False)
class MapMemory:
    """Final-layer features at strided cells plus their world positions.

    Each token is the projected cell feature plus a learned linear embedding
    of its normalized grid position, so the memory itself says where it is.
    """

    features: Tensor
    positions: np.ndarray

    def __post_init__(self) -> None:
        if self.features.shape[0] == 0:
            raise ValueError("map memory must hold at least one token")


def init_mapping_params(rng: SeededRng, dims: ModelDims) -> dict[str, Tensor]:
    d, c = dims.d_map, dims.bev_channels
    n_q = N_CLASSES + dims.n_thing_queries
    p = {
        "map.in.W": glorot_uniform(rng, c, d),
        "map.in.b": np.zeros(d),
        "map.query": glorot_uniform(rng, n_q, d),
        "map.mask.W": glorot_uniform(rng, d, d),
        "map.mask.b": np.zeros(N_CLASSES),
        "map.box.W": glorot_uniform(rng, d, 4),
        "map.box.b": np.array([0.0, 0.0, -3.0, -3.0]),
        "map.score.W": glorot_uniform(rng, d, 1),
        "map.score.b": np.zeros(1),
        "map.mem.W": glorot_uniform(rng, d, dims.d_model),
        "map.mem.b": np.zeros(dims.d_model),
        "map.pos.W": glorot_uniform(rng, 2, dims.d_model),
        "pom.Wq": glorot_uniform(rng, dims.d_ego, dims.d_model),
        "pom.Wk": glorot_uniform(rng, dims.d_model, dims.d_model),
        "pom.head.W": glorot_uniform(rng, dims.d_model, dims.d_model),
        "pom.head.b": np.zeros(dims.d_model),
    }
    for l in range(1, dims.n_layers + 1):
        p[f"map.l{l}.W"] = glorot_uniform(rng, d, d)
        p[f"map.l{l}.b"] = np.zeros(d)
        for k in ("Wq", "Wk", "Wv"):
            p[f"map.l{l}.{k}"] = glorot_uniform(rng, d, d)
    return {k: parameter(v) for k, v in p.items()}


def _heads(H: Tensor, Q: Tensor, W: dict[str, Tensor]) -> SegLayer:
    cls_q = Q[:N_CLASSES]
    things = Q[N_CLASSES:]
    # (cells, d) @ ((d, d) @ (d, 4)) keeps the large product to a single pass
    logits = ops.linear(H, ops.matmul(W["map.mask.W"], ops.transpose(cls_q)), W["map.mask.b"])
    boxes = ops.sigmoid(ops.linear(things, W["map.box.W"], W["map.box.b"]))
    scores = ops.reshape(ops.linear(things, W["map.score.W"], W["map.score.b"]), (things.shape[0],))
    return SegLayer(logits, boxes, scores)


def map_decode(
    bev: BEVGrid, W: dict[str, Tensor], dims: ModelDims, encoder_aux: bool = False
) -> tuple[SegPrediction, MapMemory]:
    """Run the ``dims.n_layers``-layer decoder over the BEV features.

    Returns per-layer predictions and the memory consumed by
    :func:`pom_query`. With ``encoder_aux`` the input projection also emits
    predictions (using the initial queries) for the optional encoder loss.
    """
    X = constant(bev.tokens())
    idx = token_index(bev.grid, dims.token_stride)
    H = ops.tanh(ops.linear(X, W["map.in.W"], W["map.in.b"]))
    Q = W["map.query"]
    encoder = _heads(H, Q, W) if encoder_aux else None
    layers = []
    for l in range(1, dims.n_layers + 1):
        H = ops.tanh(ops.linear(H, W[f"map.l{l}.W"], W[f"map.l{l}.b"]))
        mem = H[idx]
        att = ops.scaled_dot_attention(
            ops.matmul(Q, W[f"map.l{l}.Wq"]),
            ops.matmul(mem, W[f"map.l{l}.Wk"]),
            ops.matmul(mem, W[f"map.l{l}.Wv"]),
        )
        Q = ops.add(Q, att)
        layers.append(_heads(H, Q, W))
    cx, cy = bev.grid.cell_centers()
    positions = np.stack([cx.reshape(-1)[idx], cy.reshape(-1)[idx]], axis=1)
    feats = ops.add(
        ops.linear(mem, W["map.mem.W"], W["map.mem.b"]),
        ops.matmul(constant(_unit_positions(bev.grid, positions)), W["map.pos.W"]),
    )
    return SegPrediction(tuple(layers), bev.grid, encoder), MapMemory(feats, positions)


def _unit_positions(g: GridSpec, positions: np.ndarray) -> np.ndarray:
    """World positions rescaled so the grid spans [-1, 1] on both axes."""
    x0, y0, x1, y1 = g.bounds
    return np.stack(
        [2.0 * (positions[:, 0] - x0) / (x1 - x0) - 1.0, 2.0 * (positions[:, 1] - y0) / (y1 - y0) - 1.0], axis=1
    )


def pom_query(mem: MapMemory, ego: Tensor, W: dict[str, Tensor]) -> Tensor:
    """Map-guided planning query: the ego embedding attends over the memory.

    ``ego`` is a (1, d_ego) row; the result is (1, d_model). Values are the
    memory features themselves, so a single-token memory yields
    ``head(token)`` whatever the ego state.
    """
    q = ops.matmul(ego, W["pom.Wq"])
    k = ops.matmul(mem.features, W["pom.Wk"])
    att = ops.scaled_dot_attention(q, k, mem.features)
    return ops.linear(att, W["pom.head.W"], W["pom.head.b"])
