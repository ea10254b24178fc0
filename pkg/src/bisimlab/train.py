"""Joint training loop: replay sampling, Adam updates, compactness checkpointing.

Training is a pure function of (config, data): all sampling flows through one
seeded generator, so reruns produce bit-identical metrics logs.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from bisimlab.analysis import nearest_centroid_accuracy
from bisimlab.counting_env import CollectedData
from bisimlab.mdp import DeterministicMDP
from bisimlab.nn import (
    Batch,
    Linear,
    ModelConfig,
    ModelParams,
    encode,
    init_params,
    loss_and_grads,
)
from bisimlab.optim import AdamState, adam_step

CHECKPOINT_MAGIC = b"PJPA"
CHECKPOINT_VERSION = 1


class DivergenceError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    c_p: float = 1.0
    latent_dim: int = 32
    base_lr: float = 3e-4
    encoder_lr_scale: float = 0.3
    batch_size: int = 64
    steps: int = 5000
    seed: int = 0
    aux_mode: str = "reward"  # "reward" | "random:<dim>" | "none"
    dyn_loss_enabled: bool = True
    decoder_enabled: bool = True
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    replay_capacity: int = 10_000
    eval_every: int = 500
    report_every: int = 100
    eval_size: int = 256
    encoder_hidden: tuple[int, ...] = (128, 64)
    dynamics_hidden: int = 128
    aux_hidden: int = 128
    decoder_hidden: tuple[int, ...] = (128,)

    def __post_init__(self) -> None:
        if self.c_p < 0:
            raise ValueError("c_p must be >= 0")
        if not self.dyn_loss_enabled and self.aux_mode == "none":
            raise ValueError("at least one of the dynamics loss and the auxiliary loss must be active")

    @property
    def aux_enabled(self) -> bool:
        return self.aux_mode != "none"

    def random_aux_dim(self) -> int | None:
        if self.aux_mode.startswith("random:"):
            return int(self.aux_mode.split(":", 1)[1])
        return None


@dataclass
class TrainData:
    """Replay contents: aligned observation/transition arrays.

    `labels` is the ground-truth class per record (state id or object count),
    used only for compactness evaluation, never by the model.
    """

    obs: np.ndarray  # [m, ...obs_shape] float in [0, 1] (images) or one-hot
    actions: np.ndarray  # int [m]
    next_obs: np.ndarray
    reward_aux: np.ndarray  # [m, 1]
    labels: np.ndarray  # int [m]
    obs_kind: str
    num_actions: int

    @property
    def obs_shape(self) -> tuple[int, ...]:
        return self.obs.shape[1:]

    def __len__(self) -> int:
        return self.obs.shape[0]

    def truncated(self, capacity: int) -> "TrainData":
        if len(self) <= capacity:
            return self
        return dataclasses.replace(
            self,
            obs=self.obs[-capacity:],
            actions=self.actions[-capacity:],
            next_obs=self.next_obs[-capacity:],
            reward_aux=self.reward_aux[-capacity:],
            labels=self.labels[-capacity:],
        )


def tabular_train_data(mdp: DeterministicMDP) -> TrainData:
    """Full-coverage one-hot data: one record per (observation, action)."""
    n, na = mdp.num_observations, mdp.num_actions
    eye = np.eye(n)
    sources = np.repeat(np.arange(n), na)
    actions = np.tile(np.arange(na), n)
    successors = mdp.transition[sources, actions]
    return TrainData(
        obs=eye[sources],
        actions=actions,
        next_obs=eye[successors],
        reward_aux=mdp.reward[sources].reshape(-1, 1),
        labels=sources,
        obs_kind="onehot",
        num_actions=na,
    )


def collected_train_data(collected: CollectedData) -> TrainData:
    ds = collected.dataset
    return TrainData(
        obs=collected.source_frames.astype(np.float64) / 255.0,
        actions=ds.actions.copy(),
        next_obs=collected.successor_frames.astype(np.float64) / 255.0,
        reward_aux=ds.aux.copy(),
        labels=ds.sources.copy(),
        obs_kind="image",
        num_actions=ds.num_actions,
    )


def random_linear_aux(seed: int, out_dim: int, obs_shape: tuple[int, ...]) -> np.ndarray:
    """Frozen random projection matrix [obs_dim, out_dim], never trained."""
    in_dim = int(np.prod(obs_shape))
    rng = np.random.default_rng(seed)
    return rng.standard_normal((in_dim, out_dim)) / np.sqrt(in_dim)


def resolve_aux_targets(config: TrainConfig, data: TrainData) -> np.ndarray:
    if config.aux_mode == "reward":
        return data.reward_aux
    dim = config.random_aux_dim()
    if dim is not None:
        proj = random_linear_aux(config.seed, dim, data.obs_shape)
        return data.obs.reshape(len(data), -1) @ proj
    return np.zeros((len(data), 1))


@dataclass
class TrainResult:
    params: ModelParams
    best_params: ModelParams
    best_centroid_acc: float
    metrics: list[dict]

    def write_metrics_jsonl(self, path: str) -> None:
        with open(path, "w") as fh:
            for row in self.metrics:
                fh.write(json.dumps(row) + "\n")


def train(config: TrainConfig, data: TrainData) -> TrainResult:
    """Run `config.steps` Adam steps over uniform replay minibatches.

    Checkpoints the parameters with the best nearest-centroid accuracy on a
    fixed held-out evaluation batch, evaluated every `eval_every` steps.
    """
    data = data.truncated(config.replay_capacity)
    rng = np.random.default_rng(config.seed)
    model_config = ModelConfig(
        obs_kind=data.obs_kind,
        obs_shape=data.obs_shape,
        num_actions=data.num_actions,
        latent_dim=config.latent_dim,
        aux_dim=1 if not config.aux_enabled else resolve_aux_targets(config, data).shape[1],
        encoder_hidden=config.encoder_hidden,
        dynamics_hidden=config.dynamics_hidden,
        aux_hidden=config.aux_hidden,
        decoder_hidden=config.decoder_hidden,
    )
    params = init_params(model_config, rng)
    state = AdamState()
    aux_targets = resolve_aux_targets(config, data)
    eval_idx = rng.integers(0, len(data), size=min(config.eval_size, max(len(data), 1)))
    eval_obs = data.obs[eval_idx]
    eval_labels = data.labels[eval_idx]

    metrics: list[dict] = []
    best_params = params.copy()
    best_acc = -1.0
    centroid_acc: float | None = None
    for step in range(1, config.steps + 1):
        idx = rng.integers(0, len(data), size=config.batch_size)
        batch = Batch(
            obs=data.obs[idx],
            actions=data.actions[idx],
            next_obs=data.next_obs[idx],
            aux_targets=aux_targets[idx],
        )
        try:
            report, grads = loss_and_grads(
                params,
                batch,
                c_p=config.c_p,
                dyn_loss_enabled=config.dyn_loss_enabled,
                aux_enabled=config.aux_enabled,
                decoder_enabled=config.decoder_enabled,
                step=step,
            )
        except FloatingPointError as exc:
            raise DivergenceError(f"training diverged at step {step}: {exc}") from exc
        adam_step(
            params,
            grads,
            state,
            base_lr=config.base_lr,
            encoder_lr_scale=config.encoder_lr_scale,
            beta1=config.adam_beta1,
            beta2=config.adam_beta2,
            eps=config.adam_eps,
        )
        if step % config.eval_every == 0 or step == config.steps:
            embs = encode(params, eval_obs).data
            centroid_acc = nearest_centroid_accuracy(embs, eval_labels)
            if centroid_acc > best_acc:
                best_acc = centroid_acc
                best_params = params.copy()
        if step % config.report_every == 0 or step == config.steps:
            metrics.append(
                {
                    "step": step,
                    "dyn_loss": report.dyn_loss,
                    "aux_loss": report.aux_loss,
                    "total": report.total,
                    "decoder_loss": report.decoder_loss,
                    "centroid_acc": centroid_acc,
                }
            )
    return TrainResult(
        params=params, best_params=best_params, best_centroid_acc=best_acc, metrics=metrics
    )


# --- checkpoint file format ---


def save_checkpoint(params: ModelParams, config_echo: dict, path: str) -> None:
    blob = json.dumps(config_echo, sort_keys=True).encode()
    named = params.named_parameters()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<I", len(named)))
        for name, p in named:
            name_b = name.encode()
            fh.write(struct.pack("<H", len(name_b)))
            fh.write(name_b)
            fh.write(struct.pack("<B", p.data.ndim))
            fh.write(struct.pack(f"<{p.data.ndim}I", *p.data.shape))
            fh.write(p.data.astype("<f4").tobytes())


def load_checkpoint(path: str) -> tuple[ModelParams, dict]:
    from bisimlab.autodiff import Tensor

    with open(path, "rb") as fh:
        if fh.read(4) != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: bad checkpoint magic")
        version, blob_len = struct.unpack("<II", fh.read(8))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        config_echo = json.loads(fh.read(blob_len).decode())
        (count,) = struct.unpack("<I", fh.read(4))
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode()
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            size = int(np.prod(shape)) if ndim else 1
            data = np.frombuffer(fh.read(4 * size), dtype="<f4").reshape(shape)
            tensors[name] = data.astype(np.float64)
    mc = config_echo["model_config"]
    model_config = ModelConfig(
        obs_kind=mc["obs_kind"],
        obs_shape=tuple(mc["obs_shape"]),
        num_actions=mc["num_actions"],
        latent_dim=mc["latent_dim"],
        aux_dim=mc["aux_dim"],
        encoder_hidden=tuple(mc["encoder_hidden"]),
        dynamics_hidden=mc["dynamics_hidden"],
        aux_hidden=mc["aux_hidden"],
        decoder_hidden=tuple(mc["decoder_hidden"]),
    )

    def load_component(prefix: str) -> list[Linear]:
        layers = []
        k = 0
        while f"{prefix}.{k}.W" in tensors:
            layers.append(Linear(Tensor(tensors[f"{prefix}.{k}.W"]), Tensor(tensors[f"{prefix}.{k}.b"])))
            k += 1
        return layers

    params = ModelParams(
        config=model_config,
        encoder=load_component("encoder"),
        dynamics=load_component("dynamics"),
        aux_head=load_component("aux_head"),
        decoder_probe=load_component("decoder_probe"),
    )
    return params, config_echo


def model_config_echo(params: ModelParams, train_config: TrainConfig) -> dict:
    mc = params.config
    return {
        "model_config": {
            "obs_kind": mc.obs_kind,
            "obs_shape": list(mc.obs_shape),
            "num_actions": mc.num_actions,
            "latent_dim": mc.latent_dim,
            "aux_dim": mc.aux_dim,
            "encoder_hidden": list(mc.encoder_hidden),
            "dynamics_hidden": mc.dynamics_hidden,
            "aux_hidden": mc.aux_hidden,
            "decoder_hidden": list(mc.decoder_hidden),
        },
        "train_config": {
            k: (list(v) if isinstance(v, tuple) else v)
            for k, v in dataclasses.asdict(train_config).items()
        },
    }
