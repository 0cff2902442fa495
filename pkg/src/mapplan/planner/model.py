"""Ego-status encoder, both planning branches, the fusion adapter and the decoder."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ..dims import ModelDims
from ..errors import ShapeError
from ..mapping import SegPrediction, init_mapping_params, map_decode, pom_query
from ..numerics import SeededRng, Tensor, constant, glorot_uniform, ops, parameter
from ..scenario.bev import BEVGrid, token_index
from ..scenario.types import Command, EgoStatus

# fixed input scaling for (vx, vy, ax, ay); speeds are a few m/s, accelerations ~1 m/s^2
EGO_INPUT_SCALE = np.array([0.1, 0.1, 0.5, 0.5])
SIGMA_FLOOR = 1e-3
RHO_LIMIT = 0.999


class Ablation(str, enum.Enum):
    FULL = "FULL"
    NO_POM = "NO_POM"
    NO_EP = "NO_EP"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Decoded future: ``waypoints`` (T, 2) are cumulative sums of the step means.

    ``offsets`` holds the per-step means, ``sigma`` (T, 2) the standard
    deviations and ``rho`` (T,) the correlations of the per-step Gaussians.
    """

    waypoints: Tensor
    offsets: Tensor
    sigma: Tensor
    rho: Tensor

    def __len__(self) -> int:
        return self.waypoints.shape[0]

    def points(self) -> np.ndarray:
        return self.waypoints.value


@dataclass(frozen=True, eq=False)
class PlanOutput:
    trajectory: Trajectory
    seg: SegPrediction | None
    alpha: Tensor | None
    q_plan: Tensor | None
    q_map: Tensor | None


def init_planner_params(rng: SeededRng, dims: ModelDims) -> dict[str, Tensor]:
    dm, de, c = dims.d_model, dims.d_ego, dims.bev_channels
    p = {
        "ego.W1": glorot_uniform(rng, 6, dims.d_lin),
        "ego.b1": np.zeros(dims.d_lin),
        "ego.W2": glorot_uniform(rng, dims.d_lin, dims.d_lin),
        "ego.b2": np.zeros(dims.d_lin),
        "ego.cmd": rng.normal(0.0, 1.0, (len(Command), dims.d_cmd)),
        "ep.Wq": glorot_uniform(rng, de, dm),
        "ep.Wk": glorot_uniform(rng, c, dm),
        "ep.Wv": glorot_uniform(rng, c, dm),
        "ep.head.W": glorot_uniform(rng, dm, dm),
        "ep.head.b": np.zeros(dm),
        "adapter.W1": glorot_uniform(rng, de, dims.adapter_hidden),
        "adapter.b1": np.zeros(dims.adapter_hidden),
        "adapter.W2": glorot_uniform(rng, dims.adapter_hidden, 1),
        "adapter.b2": np.zeros(1),
        "dec.W1": glorot_uniform(rng, dm, dm),
        "dec.b1": np.zeros(dm),
        "dec.W2": glorot_uniform(rng, dm, dims.horizon * 5),
        "dec.b2": np.zeros(dims.horizon * 5),
    }
    return {k: parameter(v) for k, v in p.items()}


def init_model(seed: int, dims: ModelDims) -> dict[str, Tensor]:
    """All mapping and planning weights, each block from its own named stream."""
    rng = SeededRng(seed)
    params = init_mapping_params(rng.stream("mapping"), dims)
    params.update(init_planner_params(rng.stream("planner"), dims))
    return params


def ego_features(ego: EgoStatus) -> np.ndarray:
    kin = np.array([ego.vx, ego.vy, ego.ax, ego.ay]) * EGO_INPUT_SCALE
    return np.concatenate([kin, [math.sin(ego.heading), math.cos(ego.heading)]])[None, :]


def encode_ego_status(ego: EgoStatus, W: dict[str, Tensor]) -> Tensor:
    """(1, d_lin + d_cmd): MLP over the kinematics, then the command embedding row."""
    x = constant(ego_features(ego))
    h = ops.tanh(ops.linear(x, W["ego.W1"], W["ego.b1"]))
    h = ops.tanh(ops.linear(h, W["ego.W2"], W["ego.b2"]))
    k = ego.command.value
    cmd = W["ego.cmd"][k : k + 1]
    return ops.concat([h, cmd], axis=1)


def ep_query(bev: BEVGrid, ego: Tensor, W: dict[str, Tensor], dims: ModelDims) -> Tensor:
    """Ego-guided planning query from raw BEV features; reads no mapping output."""
    tokens = constant(bev.tokens()[token_index(bev.grid, dims.token_stride)])
    q = ops.matmul(ego, W["ep.Wq"])
    att = ops.scaled_dot_attention(q, ops.matmul(tokens, W["ep.Wk"]), ops.matmul(tokens, W["ep.Wv"]))
    return ops.linear(att, W["ep.head.W"], W["ep.head.b"])


def fusion_weight(ego: Tensor, W: dict[str, Tensor]) -> Tensor:
    """Scalar fusion coefficient in [0, 1] as a (1, 1) tensor."""
    h = ops.tanh(ops.linear(ego, W["adapter.W1"], W["adapter.b1"]))
    return ops.sigmoid(ops.linear(h, W["adapter.W2"], W["adapter.b2"]))


def fuse(q_plan: Tensor, q_map: Tensor, alpha) -> Tensor:
    """``alpha * q_plan + (1 - alpha) * q_map``, coordinatewise.

    The rounded sum is clamped into the interval spanned by the two inputs so
    the result is a convex combination in floating point as well; the clamp
    moves values by at most an ulp and is treated as the identity in the
    backward pass.
    """
    if q_plan.shape != q_map.shape:
        raise ShapeError("fuse", q_plan.shape, q_map.shape)
    a = alpha if isinstance(alpha, Tensor) else constant(np.full((1, 1), float(alpha)))
    mixed = ops.add(ops.mul_scalar(q_plan, a), ops.mul_scalar(q_map, ops.shift(ops.neg(a), 1.0)))
    lo = np.minimum(q_plan.value, q_map.value)
    hi = np.maximum(q_plan.value, q_map.value)
    return ops.custom(np.clip(mixed.value, lo, hi), (mixed,), lambda g: (g,), "fuse_clamp")


def decode_trajectory(q: Tensor, W: dict[str, Tensor], horizon: int) -> Trajectory:
    h = ops.tanh(ops.linear(q, W["dec.W1"], W["dec.b1"]))
    raw = ops.reshape(ops.linear(h, W["dec.W2"], W["dec.b2"]), (horizon, 5))
    offsets = raw[:, 0:2]
    sigma = ops.shift(ops.softplus(raw[:, 2:4]), SIGMA_FLOOR)
    rho = ops.scale(ops.tanh(raw[:, 4]), RHO_LIMIT)
    return Trajectory(ops.cumsum(offsets, axis=0), offsets, sigma, rho)


def forward_plan(
    bev: BEVGrid,
    ego: EgoStatus,
    W: dict[str, Tensor],
    dims: ModelDims,
    ablation: Ablation = Ablation.FULL,
    alpha_override: float | None = None,
    encoder_aux: bool = False,
) -> PlanOutput:
    """Plan one scene.

    FULL decodes the fused query, NO_POM the ego-guided query alone and
    NO_EP the map-guided query alone. ``alpha_override`` replaces the
    adapter output in FULL mode.
    """
    ablation = Ablation(ablation)
    e = encode_ego_status(ego, W)
    seg = q_map = q_plan = alpha = None
    if ablation is not Ablation.NO_POM:
        seg, mem = map_decode(bev, W, dims, encoder_aux=encoder_aux)
        q_map = pom_query(mem, e, W)
    if ablation is not Ablation.NO_EP:
        q_plan = ep_query(bev, e, W, dims)
    if ablation is Ablation.FULL:
        if alpha_override is None:
            alpha = fusion_weight(e, W)
        else:
            alpha = constant(np.full((1, 1), float(alpha_override)))
        q = fuse(q_plan, q_map, alpha)
    else:
        q = q_plan if ablation is Ablation.NO_POM else q_map
    return PlanOutput(decode_trajectory(q, W, dims.horizon), seg, alpha, q_plan, q_map)
