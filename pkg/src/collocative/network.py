"""A compact convnet with hand-written forward/backward passes and one CAG per block.

Block ``l``: 3x3 same convolution -> bias -> ReLU -> CAG regulation -> 2x2
average pool.  Head: global average pool -> linear -> softmax.  Tensors are
channels-last, ``(batch, height, width, channels)``.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import asdict, dataclass, field

import numpy as np

from . import cag
from .errors import (
    CorruptCheckpoint,
    DivergedLoss,
    EmptyDataset,
    InvalidParams,
    ShapeMismatch,
    StaleCache,
    VersionMismatch,
)

CHECKPOINT_MAGIC = b"CCKP"
CHECKPOINT_VERSION = 1
LR_SCHEDULES = ("constant", "cosine")


@dataclass
class ModelConfig:
    input_size: int = 64
    in_channels: int = 7
    widths: tuple = (8, 16, 32, 64)
    kernel_size: int = 3
    pool: int = 2
    num_classes: int = 2
    learning_rate: float = 0.01
    momentum: float = 0.9
    epochs: int = 20
    batch_size: int = 32
    seed: int = 0
    use_cag: bool = True
    cag_init: tuple = (0.25, 0.0, 0.5, 12.0)
    dtype: str = "float64"
    lr_schedule: str = "cosine"

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        self.cag_init = tuple(float(v) for v in self.cag_init)
        if not self.widths:
            raise InvalidParams("need at least one block")
        if self.lr_schedule not in LR_SCHEDULES:
            raise InvalidParams(f"unknown learning-rate schedule {self.lr_schedule!r}")
        if self.kernel_size % 2 != 1:
            raise InvalidParams("kernel size must be odd for same padding")
        size = self.input_size
        for _ in self.widths:
            if size % self.pool:
                raise InvalidParams(
                    f"spatial size {size} is not divisible by pool {self.pool}"
                )
            size //= self.pool
        if size < 1:
            raise InvalidParams("spatial size vanishes before the last block")

    @property
    def num_blocks(self):
        return len(self.widths)

    def block_sizes(self):
        """Spatial size seen by each block's convolution and CAG."""
        return [self.input_size // self.pool ** l for l in range(self.num_blocks)]

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _glorot(rng, shape, fan_in, fan_out, dtype):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Model:
    """Parameters plus forward/backward passes."""

    def __init__(self, config, params=None):
        self.config = config
        self.dtype = np.dtype(config.dtype)
        self.params = params if params is not None else self._init_params()
        self.version = 0

    def _init_params(self):
        cfg = self.config
        rng = np.random.default_rng(cfg.seed)
        k = cfg.kernel_size
        params = {}
        c_in = cfg.in_channels
        for l, c_out in enumerate(cfg.widths):
            params[f"block{l}.weight"] = _glorot(
                rng, (k, k, c_in, c_out), k * k * c_in, k * k * c_out, self.dtype
            )
            params[f"block{l}.bias"] = np.zeros(c_out, dtype=self.dtype)
            c_in = c_out
        params["fc.weight"] = _glorot(
            rng, (c_in, cfg.num_classes), c_in, cfg.num_classes, self.dtype
        )
        params["fc.bias"] = np.zeros(cfg.num_classes, dtype=self.dtype)
        gates = np.tile(np.array(cfg.cag_init, dtype=np.float64), (cfg.num_blocks, 1))
        for l, m in enumerate(cfg.block_sizes()):
            gates[l, 3] = cag.clamp_period(gates[l, 3], m)
        params["cag"] = gates
        return params

    def cag_params(self, block):
        return cag.CagParams.from_array(self.params["cag"][block])

    def masks(self):
        return [cag.build_mask(self.cag_params(l), m)
                for l, m in enumerate(self.config.block_sizes())]

    def touch(self):
        """Mark parameters as changed, invalidating outstanding caches."""
        self.version += 1

    def forward(self, x):
        """Class probabilities and the cache needed by :meth:`backward`."""
        cfg = self.config
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim == 3:
            x = x[None]
        if x.shape[1:] != (cfg.input_size, cfg.input_size, cfg.in_channels):
            raise ShapeMismatch(
                f"input {x.shape[1:]} does not match "
                f"{(cfg.input_size, cfg.input_size, cfg.in_channels)}"
            )
        k = cfg.kernel_size
        pad = k // 2
        blocks = []
        h = x
        masks = self.masks() if cfg.use_cag else [None] * cfg.num_blocks
        for l in range(cfg.num_blocks):
            w = self.params[f"block{l}.weight"]
            b = self.params[f"block{l}.bias"]
            cols = _im2col(h, k, pad)
            bsz, size = h.shape[0], h.shape[1]
            z = (cols.reshape(-1, cols.shape[-1]) @ w.reshape(-1, w.shape[-1])).reshape(
                bsz, size, size, -1
            )
            z += b
            a = np.maximum(z, 0)
            mask = masks[l]
            f_star = cag.regulate(a, mask) if mask is not None else a
            blocks.append({"cols": cols, "z": z, "a": a, "f_star": f_star, "mask": mask})
            h = _avg_pool(f_star, cfg.pool)
        pooled = h.mean(axis=(1, 2))
        logits = pooled @ self.params["fc.weight"] + self.params["fc.bias"]
        probs = _softmax(logits)
        cache = {
            "version": self.version,
            "model_id": id(self),
            "blocks": blocks,
            "last_shape": h.shape,
            "pooled": pooled,
            "logits": logits,
            "probs": probs,
        }
        return probs, cache

    def backward(self, cache, target):
        """Gradients of the batch-mean cross-entropy against integer ``target``."""
        probs = cache["probs"]
        target = np.atleast_1d(np.asarray(target, dtype=int))
        onehot = np.zeros_like(probs)
        onehot[np.arange(len(target)), target] = 1
        dlogits = (probs - onehot) / len(target)
        grads, _ = self.backward_logits(cache, dlogits)
        return grads

    def backward_logits(self, cache, dlogits, need_maps=False):
        """Back-propagate an arbitrary logit gradient.

        Returns the parameter gradients and, when ``need_maps`` is set, the
        gradient with respect to every block's regulated map.
        """
        if cache.get("model_id") != id(self) or cache.get("version") != self.version:
            raise StaleCache("cache was produced by a different model state")
        cfg = self.config
        k = cfg.kernel_size
        pad = k // 2
        dlogits = np.asarray(dlogits, dtype=self.dtype)
        grads = {
            "fc.weight": cache["pooled"].T @ dlogits,
            "fc.bias": dlogits.sum(axis=0),
        }
        gates = np.zeros_like(self.params["cag"])
        dpooled = dlogits @ self.params["fc.weight"].T
        bsz, hh, ww, cc = cache["last_shape"]
        dh = np.broadcast_to(dpooled[:, None, None, :] / (hh * ww), (bsz, hh, ww, cc))
        map_grads = [None] * cfg.num_blocks
        for l in reversed(range(cfg.num_blocks)):
            blk = cache["blocks"][l]
            df_star = _avg_pool_backward(dh, cfg.pool)
            if need_maps:
                map_grads[l] = df_star
            mask = blk["mask"]
            if mask is not None:
                da, dmask = cag.regulate_backward(df_star, blk["a"], mask)
                gates[l] = cag.param_gradients(
                    dmask, self.cag_params(l), mask.m, mask.clamped
                )
            else:
                da = df_star
            dz = da * (blk["z"] > 0)
            w = self.params[f"block{l}.weight"]
            dz2 = dz.reshape(-1, dz.shape[-1])
            cols = blk["cols"]
            grads[f"block{l}.weight"] = (cols.reshape(-1, cols.shape[-1]).T @ dz2).reshape(w.shape)
            grads[f"block{l}.bias"] = dz2.sum(axis=0)
            if l > 0:
                dcols = (dz2 @ w.reshape(-1, w.shape[-1]).T).reshape(cols.shape)
                dh = _col2im(dcols, k, pad)
        grads["cag"] = gates
        return grads, map_grads

    def loss(self, x, target):
        probs, _ = self.forward(x)
        target = np.atleast_1d(np.asarray(target, dtype=int))
        p = probs[np.arange(len(target)), target].astype(np.float64)
        return float(-np.mean(np.log(np.maximum(p, 1e-300))))

    def predict_proba(self, x, batch_size=64):
        x = np.asarray(x)
        out = []
        for i in range(0, len(x), batch_size):
            out.append(self.forward(x[i:i + batch_size])[0])
        return np.concatenate(out, axis=0)

    def predict(self, x, batch_size=64):
        return np.argmax(self.predict_proba(x, batch_size), axis=1)


def _softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _im2col(x, k, pad):
    b, h, w, c = x.shape
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    cols = np.empty((b, h, w, k, k, c), dtype=x.dtype)
    for i in range(k):
        for j in range(k):
            cols[:, :, :, i, j, :] = xp[:, i:i + h, j:j + w, :]
    return cols.reshape(b, h, w, k * k * c)


def _col2im(dcols, k, pad):
    b, h, w, kkc = dcols.shape
    c = kkc // (k * k)
    d = dcols.reshape(b, h, w, k, k, c)
    dxp = np.zeros((b, h + 2 * pad, w + 2 * pad, c), dtype=dcols.dtype)
    for i in range(k):
        for j in range(k):
            dxp[:, i:i + h, j:j + w, :] += d[:, :, :, i, j, :]
    return dxp[:, pad:pad + h, pad:pad + w, :]


def _avg_pool(x, p):
    b, h, w, c = x.shape
    return x.reshape(b, h // p, p, w // p, p, c).mean(axis=(2, 4))


def _avg_pool_backward(dy, p):
    b, h, w, c = dy.shape
    dx = np.broadcast_to(dy[:, :, None, :, None, :] / (p * p), (b, h, p, w, p, c))
    return dx.reshape(b, h * p, w * p, c)


@dataclass
class Checkpoint:
    model: Model
    epoch: int = 0
    loss_history: list = field(default_factory=list)
    seed: int = 0
    extra: dict = field(default_factory=dict)
    arrays: dict = field(default_factory=dict)  # auxiliary named arrays, e.g. input scaling


def step_size(config, step, total_steps):
    """Learning rate at optimizer step ``step`` of ``total_steps``."""
    if config.lr_schedule == "constant" or total_steps <= 1:
        return config.learning_rate
    return 0.5 * config.learning_rate * (1.0 + np.cos(np.pi * step / total_steps))


def train(x, y, config, log=None):
    """Mini-batch SGD with momentum on the mean cross-entropy.

    ``x`` is ``(records, n, n, views)``; ``y`` holds integer class ids.  The
    run is a pure function of ``(x, y, config)``.
    """
    x = np.asarray(x)
    y = np.asarray(y, dtype=int)
    if len(x) == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    if len(x) != len(y):
        raise ShapeMismatch("inputs and labels differ in length")
    model = Model(config)
    rng = np.random.default_rng(config.seed + 1)
    velocity = {k: np.zeros_like(v) for k, v in model.params.items()}
    sizes = config.block_sizes()
    history = []
    per_epoch = -(-len(x) // config.batch_size)
    total_steps = per_epoch * config.epochs
    step = 0
    for epoch in range(config.epochs):
        order = rng.permutation(len(x))
        total = 0.0
        for start in range(0, len(x), config.batch_size):
            idx = order[start:start + config.batch_size]
            xb = x[idx].astype(model.dtype, copy=False)
            probs, cache = model.forward(xb)
            p = probs[np.arange(len(idx)), y[idx]].astype(np.float64)
            batch_loss = float(-np.sum(np.log(np.maximum(p, 1e-300))))
            if not np.isfinite(batch_loss):
                raise DivergedLoss(f"non-finite loss at epoch {epoch}")
            total += batch_loss
            grads = model.backward(cache, y[idx])
            lr = step_size(config, step, total_steps)
            step += 1
            for name, g in grads.items():
                v = velocity[name]
                v *= config.momentum
                v += g
                model.params[name] -= (lr * v).astype(
                    model.params[name].dtype, copy=False
                )
            for l, m in enumerate(sizes):
                model.params["cag"][l, 3] = cag.clamp_period(model.params["cag"][l, 3], m)
            model.touch()
        mean_loss = total / len(x)
        if not np.isfinite(mean_loss):
            raise DivergedLoss(f"non-finite loss at epoch {epoch}")
        history.append(mean_loss)
        if log is not None:
            log(epoch, mean_loss)
    return Checkpoint(model, epoch=config.epochs, loss_history=history, seed=config.seed)


def save_checkpoint(ckpt):
    """Serialize to bytes: magic, version, JSON header, float64 parameter blocks."""
    model = ckpt.model if isinstance(ckpt, Checkpoint) else ckpt
    if not isinstance(ckpt, Checkpoint):
        ckpt = Checkpoint(model)
    header = {
        "config": model.config.to_dict(),
        "epoch": ckpt.epoch,
        "loss_history": list(ckpt.loss_history),
        "seed": ckpt.seed,
        "extra": ckpt.extra,
        "params": [[name, list(v.shape)] for name, v in model.params.items()],
        "arrays": [[name, list(np.shape(v))] for name, v in ckpt.arrays.items()],
    }
    head = json.dumps(header, sort_keys=True).encode()
    body = [CHECKPOINT_MAGIC, struct.pack("<II", CHECKPOINT_VERSION, len(head)), head]
    for v in (*model.params.values(), *ckpt.arrays.values()):
        body.append(np.ascontiguousarray(v, dtype="<f8").tobytes())
    payload = b"".join(body)
    return payload + struct.pack("<I", zlib.crc32(payload))


def load_checkpoint(data):
    data = bytes(data)
    if len(data) < 4 or data[:4] != CHECKPOINT_MAGIC:
        raise VersionMismatch("not a checkpoint stream (bad magic)")
    if len(data) < 16:
        raise CorruptCheckpoint("truncated checkpoint header")
    version, head_len = struct.unpack_from("<II", data, 4)
    if version != CHECKPOINT_VERSION:
        raise VersionMismatch(f"checkpoint format {version}, expected {CHECKPOINT_VERSION}")
    payload, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(payload) != crc:
        raise CorruptCheckpoint("checksum mismatch (truncated or altered stream)")
    try:
        header = json.loads(payload[12:12 + head_len])
        config = ModelConfig.from_dict(header["config"])
        dtype = np.dtype(config.dtype)
        offset = 12 + head_len
        params = {}
        for name, shape in header["params"]:
            count = int(np.prod(shape))
            raw = np.frombuffer(payload, dtype="<f8", count=count, offset=offset)
            offset += 8 * count
            target = np.float64 if name == "cag" else dtype
            params[name] = raw.reshape(shape).astype(target)
        arrays = {}
        for name, shape in header.get("arrays", []):
            count = int(np.prod(shape))
            raw = np.frombuffer(payload, dtype="<f8", count=count, offset=offset)
            offset += 8 * count
            arrays[name] = raw.reshape(shape).copy()
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptCheckpoint(f"unreadable checkpoint body: {exc}") from exc
    if offset != len(payload):
        raise CorruptCheckpoint("trailing bytes in checkpoint")
    return Checkpoint(
        Model(config, params),
        epoch=header["epoch"],
        loss_history=header["loss_history"],
        seed=header["seed"],
        extra=header["extra"],
        arrays=arrays,
    )
