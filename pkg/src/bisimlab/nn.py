"""Encoder, latent dynamics, auxiliary head, and decoder probe.

All components are ReLU MLPs over the autodiff Tensor type. The decoder probe
reconstructs observations from detached latents, so its loss never reaches
the encoder.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from bisimlab.autodiff import Tensor, concat, mse


@dataclass
class ModelConfig:
    obs_kind: str  # "onehot" or "image"
    obs_shape: tuple[int, ...]  # (n,) for one-hot, (C, S, S) for images
    num_actions: int
    latent_dim: int = 32
    aux_dim: int = 1
    encoder_hidden: tuple[int, ...] = (128, 64)
    dynamics_hidden: int = 128
    aux_hidden: int = 128
    decoder_hidden: tuple[int, ...] = (128,)

    def __post_init__(self) -> None:
        if self.obs_kind not in ("onehot", "image"):
            raise ValueError(f"unknown obs_kind {self.obs_kind!r}")

    @property
    def obs_dim(self) -> int:
        return int(np.prod(self.obs_shape))


@dataclass
class Linear:
    W: Tensor
    b: Tensor

    def __call__(self, x: Tensor) -> Tensor:
        return x @ self.W + self.b


def _init_linear(fan_in: int, fan_out: int, rng: np.random.Generator) -> Linear:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    W = Tensor(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
    b = Tensor(np.zeros(fan_out))
    return Linear(W, b)


def _mlp(dims: list[int], rng: np.random.Generator) -> list[Linear]:
    return [_init_linear(dims[i], dims[i + 1], rng) for i in range(len(dims) - 1)]


def _run_mlp(layers: list[Linear], x: Tensor) -> Tensor:
    for k, layer in enumerate(layers):
        x = layer(x)
        if k + 1 < len(layers):
            x = x.relu()
    return x


@dataclass
class ModelParams:
    config: ModelConfig
    encoder: list[Linear]
    dynamics: list[Linear]
    aux_head: list[Linear]
    decoder_probe: list[Linear]

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        out = []
        for comp_name, comp in (
            ("encoder", self.encoder),
            ("dynamics", self.dynamics),
            ("aux_head", self.aux_head),
            ("decoder_probe", self.decoder_probe),
        ):
            for k, layer in enumerate(comp):
                out.append((f"{comp_name}.{k}.W", layer.W))
                out.append((f"{comp_name}.{k}.b", layer.b))
        return out

    def copy(self) -> "ModelParams":
        def clone(layers):
            return [Linear(Tensor(l.W.data.copy()), Tensor(l.b.data.copy())) for l in layers]

        return ModelParams(
            config=self.config,
            encoder=clone(self.encoder),
            dynamics=clone(self.dynamics),
            aux_head=clone(self.aux_head),
            decoder_probe=clone(self.decoder_probe),
        )


def init_params(config: ModelConfig, rng: np.random.Generator) -> ModelParams:
    d = config.obs_dim
    z = config.latent_dim
    return ModelParams(
        config=config,
        encoder=_mlp([d, *config.encoder_hidden, z], rng),
        dynamics=_mlp([z + config.num_actions, config.dynamics_hidden, z], rng),
        aux_head=_mlp([z, config.aux_hidden, config.aux_hidden, config.aux_dim], rng),
        decoder_probe=_mlp([z, *config.decoder_hidden, d], rng),
    )


def preprocess(obs_batch: np.ndarray, config: ModelConfig) -> Tensor:
    """Flatten and, for images, shift pixels from [0, 1] to [-0.5, 0.5]."""
    flat = np.asarray(obs_batch, dtype=np.float64).reshape(obs_batch.shape[0], -1)
    if config.obs_kind == "image":
        flat = flat - 0.5
    return Tensor(flat, requires_grad=False)


def encode(params: ModelParams, obs_batch: np.ndarray) -> Tensor:
    z = _run_mlp(params.encoder, preprocess(obs_batch, params.config))
    if not np.all(np.isfinite(z.data)):
        raise FloatingPointError("non-finite encoder output")
    return z


def one_hot_actions(actions: np.ndarray, num_actions: int) -> np.ndarray:
    eye = np.eye(num_actions)
    return eye[np.asarray(actions, dtype=np.int64)]


def predict_next(params: ModelParams, z_batch: Tensor, action_batch: np.ndarray) -> Tensor:
    a = Tensor(one_hot_actions(action_batch, params.config.num_actions), requires_grad=False)
    out = _run_mlp(params.dynamics, concat([z_batch, a], axis=1))
    if not np.all(np.isfinite(out.data)):
        raise FloatingPointError("non-finite dynamics output")
    return out


def aux_predict(params: ModelParams, z_batch: Tensor) -> Tensor:
    return _run_mlp(params.aux_head, z_batch)


def decode(params: ModelParams, z_batch: Tensor) -> Tensor:
    return _run_mlp(params.decoder_probe, z_batch)


@dataclass
class Batch:
    obs: np.ndarray  # [B, ...obs_shape]
    actions: np.ndarray  # int [B]
    next_obs: np.ndarray  # [B, ...obs_shape]
    aux_targets: np.ndarray  # [B, aux_dim]


@dataclass
class LossReport:
    step: int
    dyn_loss: float
    aux_loss: float
    total: float
    decoder_loss: float
    grad_norms: dict[str, float] = field(default_factory=dict)


def joint_loss(
    params: ModelParams,
    batch: Batch,
    c_p: float = 1.0,
    dyn_loss_enabled: bool = True,
    aux_enabled: bool = True,
    decoder_enabled: bool = True,
    step: int = 0,
) -> tuple[LossReport, Tensor]:
    """Joint objective: dynamics consistency + weighted auxiliary regression.

    dyn loss compares T(E(o_t), a_t) to E(o_{t+1}) with gradients into both
    encoder calls (no stop-gradient, no target network). The decoder probe
    trains on detached latents against images normalized to [-1, 1]; its loss
    is optimized alongside but excluded from `total`.
    """
    z_t = encode(params, batch.obs)
    objective = Tensor(0.0, requires_grad=False)
    dyn_val = 0.0
    aux_val = 0.0
    if dyn_loss_enabled:
        z_next = encode(params, batch.next_obs)
        z_hat = predict_next(params, z_t, batch.actions)
        dyn = mse(z_hat, z_next)
        dyn_val = float(dyn.data)
        objective = objective + dyn
    if aux_enabled:
        aux = mse(aux_predict(params, z_t), Tensor(batch.aux_targets, requires_grad=False))
        aux_val = float(aux.data)
        objective = objective + c_p * aux
    total = dyn_val + c_p * aux_val if aux_enabled else dyn_val
    dec_val = 0.0
    if decoder_enabled:
        flat = np.asarray(batch.obs, dtype=np.float64).reshape(batch.obs.shape[0], -1)
        target = flat * 2.0 - 1.0 if params.config.obs_kind == "image" else flat
        dec = mse(decode(params, z_t.detach()), Tensor(target, requires_grad=False))
        dec_val = float(dec.data)
        objective = objective + dec
    if not np.isfinite(float(objective.data)):
        raise FloatingPointError(f"non-finite loss at step {step}")
    report = LossReport(step=step, dyn_loss=dyn_val, aux_loss=aux_val, total=total, decoder_loss=dec_val)
    return report, objective


def loss_and_grads(
    params: ModelParams,
    batch: Batch,
    c_p: float = 1.0,
    dyn_loss_enabled: bool = True,
    aux_enabled: bool = True,
    decoder_enabled: bool = True,
    step: int = 0,
) -> tuple[LossReport, dict[str, np.ndarray]]:
    named = params.named_parameters()
    for _, p in named:
        p.grad = None
    report, objective = joint_loss(
        params, batch, c_p, dyn_loss_enabled, aux_enabled, decoder_enabled, step
    )
    objective.backward()
    grads = {name: (p.grad if p.grad is not None else np.zeros_like(p.data)) for name, p in named}
    by_comp: dict[str, float] = {}
    for name, g in grads.items():
        comp = name.split(".", 1)[0]
        by_comp[comp] = by_comp.get(comp, 0.0) + float(np.sum(g * g))
    report.grad_norms = {comp: float(np.sqrt(v)) for comp, v in by_comp.items()}
    return report, grads
