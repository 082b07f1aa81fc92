"""Trainable encoder-decoder response generator.

GRU encoder and decoder stacks (optionally with dot-product attention over
encoder states), trained with teacher forcing and cross-entropy via
hand-written backprop. Defaults are desk-scale; large shapes like 3 layers
x 1024 units are just another config. Recurrent inner loops live in
kernels.py.
"""

from __future__ import annotations

import json
import struct
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import DialogPair
from .generators import GeneratorOutput
from .kernels import gru_cell, gru_layer_backward, gru_layer_forward

PAD, BOS, EOS, UNK, SEP = "<pad>", "<s>", "</s>", "<unk>", "<sep>"
RESERVED = (PAD, BOS, EOS, UNK, SEP)
PAD_ID, BOS_ID, EOS_ID, UNK_ID, SEP_ID = range(5)

_MAGIC = b"SBS2"
_FORMAT_VERSION = 1


class Vocab:
    def __init__(self, tokens: Sequence[str]):
        # tokens: full id-ordered list, reserved entries first
        self.tokens = list(tokens)
        self.token_to_id = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        return np.array([self.token_to_id.get(t, UNK_ID) for t in tokens], dtype=np.int64)

    def decode(self, ids: Sequence[int]) -> tuple[str, ...]:
        return tuple(self.tokens[i] for i in ids)

    @classmethod
    def build(cls, pairs: Sequence[DialogPair], min_count: int = 1) -> "Vocab":
        counts: Counter = Counter()
        for p in pairs:
            counts.update(p.post)
            counts.update(p.response)
        kept = sorted(t for t, c in counts.items() if c >= min_count and t not in RESERVED)
        return cls(list(RESERVED) + kept)


@dataclass
class Seq2SeqConfig:
    embedding_dim: int = 32
    hidden_dim: int = 64
    num_layers: int = 1
    attention: bool = True


@dataclass
class TrainingConfig:
    epochs: int = 300
    learning_rate: float = 0.01
    clip_norm: float = 5.0
    seed: int = 17
    min_count: int = 1
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8


@dataclass
class DecodeConfig:
    max_len: int = 30
    beam_width: int = 1


def _param_names(cfg: Seq2SeqConfig) -> list[str]:
    names = ["embedding"]
    for side in ("enc", "dec"):
        for layer in range(cfg.num_layers):
            for gate in ("z", "r", "h"):
                names += [f"{side}_w{gate}_{layer}", f"{side}_u{gate}_{layer}", f"{side}_b{gate}_{layer}"]
    names += ["out_w", "out_b"]
    return names


def _param_shape(name: str, cfg: Seq2SeqConfig, vocab_size: int) -> tuple[int, ...]:
    h, d = cfg.hidden_dim, cfg.embedding_dim
    if name == "embedding":
        return (vocab_size, d)
    if name == "out_w":
        return (2 * h if cfg.attention else h, vocab_size)
    if name == "out_b":
        return (vocab_size,)
    side, kind, layer = name.split("_")
    in_dim = d if layer == "0" else h
    if kind[0] == "w":
        return (in_dim, h)
    if kind[0] == "u":
        return (h, h)
    return (h,)


def init_params(cfg: Seq2SeqConfig, vocab_size: int, seed: int) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(cfg.hidden_dim)
    params = {}
    for name in _param_names(cfg):
        shape = _param_shape(name, cfg, vocab_size)
        params[name] = rng.uniform(-scale, scale, size=shape)
    return params


@dataclass
class Seq2SeqModel:
    config: Seq2SeqConfig
    vocab: Vocab
    params: dict[str, np.ndarray]
    trained: bool = False
    epoch_losses: list[float] = field(default_factory=list)

    def save(self, path: str | Path) -> None:
        """Versioned binary: magic, version, JSON header (config, id-ordered
        vocab, tensor manifest), then row-major float64 LE tensor data in
        manifest order."""
        names = sorted(self.params)
        header = {
            "config": {
                "embedding_dim": self.config.embedding_dim,
                "hidden_dim": self.config.hidden_dim,
                "num_layers": self.config.num_layers,
                "attention": self.config.attention,
            },
            "vocab": self.vocab.tokens,
            "trained": self.trained,
            "tensors": [[n, list(self.params[n].shape)] for n in names],
        }
        blob = json.dumps(header, sort_keys=True).encode("utf-8")
        with Path(path).open("wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<I", _FORMAT_VERSION))
            fh.write(struct.pack("<Q", len(blob)))
            fh.write(blob)
            for n in names:
                fh.write(np.ascontiguousarray(self.params[n], dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "Seq2SeqModel":
        raw = Path(path).read_bytes()
        if raw[:4] != _MAGIC:
            raise ValueError("not a seq2seq model file")
        (version,) = struct.unpack("<I", raw[4:8])
        if version != _FORMAT_VERSION:
            raise ValueError(f"unsupported seq2seq model version: {version}")
        (hlen,) = struct.unpack("<Q", raw[8:16])
        header = json.loads(raw[16 : 16 + hlen].decode("utf-8"))
        cfg = Seq2SeqConfig(**header["config"])
        vocab = Vocab(header["vocab"])
        params = {}
        offset = 16 + hlen
        for name, shape in header["tensors"]:
            count = int(np.prod(shape)) if shape else 1
            arr = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(shape)
            params[name] = arr.astype(np.float64).copy()
            offset += count * 8
        return cls(config=cfg, vocab=vocab, params=params, trained=header["trained"])


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _layer_params(params: dict, side: str, layer: int) -> tuple:
    return (
        params[f"{side}_wz_{layer}"], params[f"{side}_uz_{layer}"], params[f"{side}_bz_{layer}"],
        params[f"{side}_wr_{layer}"], params[f"{side}_ur_{layer}"], params[f"{side}_br_{layer}"],
        params[f"{side}_wh_{layer}"], params[f"{side}_uh_{layer}"], params[f"{side}_bh_{layer}"],
    )


def _run_stack(params: dict, cfg: Seq2SeqConfig, side: str, xs: np.ndarray, h0s: list[np.ndarray]):
    """Run a GRU stack over a sequence; returns top outputs and per-layer
    caches (inputs, outputs, gates) for backprop."""
    caches = []
    current = xs
    for layer in range(cfg.num_layers):
        p = _layer_params(params, side, layer)
        hs, zs, rs, cs = gru_layer_forward(np.ascontiguousarray(current), h0s[layer], *p)
        caches.append((current, hs, zs, rs, cs))
        current = hs
    return current, caches


def _stack_backward(
    params: dict,
    cfg: Seq2SeqConfig,
    side: str,
    caches: list,
    h0s: list[np.ndarray],
    d_top: np.ndarray,
    dh_last: list[np.ndarray],
    grads: dict,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Backprop a GRU stack; returns the gradient on the stack input sequence
    and per-layer gradients on the initial states."""
    dh0s: list[np.ndarray] = [np.zeros(cfg.hidden_dim) for _ in range(cfg.num_layers)]
    d_seq = d_top
    for layer in range(cfg.num_layers - 1, -1, -1):
        xs, hs, zs, rs, cs = caches[layer]
        wz, uz, _, wr, ur, _, wh, uh, _ = _layer_params(params, side, layer)
        out = gru_layer_backward(
            np.ascontiguousarray(xs), hs, h0s[layer], zs, rs, cs,
            np.ascontiguousarray(d_seq), dh_last[layer], wz, uz, wr, ur, wh, uh,
        )
        d_seq, dh0 = out[0], out[1]
        dwz, duz, dbz, dwr, dur, dbr, dwh, duh, dbh = out[2:]
        grads[f"{side}_wz_{layer}"] += dwz
        grads[f"{side}_uz_{layer}"] += duz
        grads[f"{side}_bz_{layer}"] += dbz
        grads[f"{side}_wr_{layer}"] += dwr
        grads[f"{side}_ur_{layer}"] += dur
        grads[f"{side}_br_{layer}"] += dbr
        grads[f"{side}_wh_{layer}"] += dwh
        grads[f"{side}_uh_{layer}"] += duh
        grads[f"{side}_bh_{layer}"] += dbh
        dh0s[layer] = dh0
    return d_seq, dh0s


def pair_loss_and_grads(
    params: dict[str, np.ndarray],
    cfg: Seq2SeqConfig,
    src_ids: np.ndarray,
    tgt_ids: np.ndarray,
) -> tuple[float, dict[str, np.ndarray], int]:
    """Teacher-forced cross-entropy (mean over target tokens) for one pair
    and its full analytic gradient. tgt_ids must end with the end token."""
    h = cfg.hidden_dim
    emb = params["embedding"]
    zeros = [np.zeros(h) for _ in range(cfg.num_layers)]

    enc_x = np.ascontiguousarray(emb[src_ids])
    enc_top, enc_caches = _run_stack(params, cfg, "enc", enc_x, zeros)
    enc_finals = [enc_caches[l][1][-1] for l in range(cfg.num_layers)]

    dec_in = np.concatenate(([BOS_ID], tgt_ids[:-1]))
    dec_x = np.ascontiguousarray(emb[dec_in])
    dec_top, dec_caches = _run_stack(params, cfg, "dec", dec_x, enc_finals)

    if cfg.attention:
        scores = dec_top @ enc_top.T
        attn = _softmax_rows(scores)
        ctx = attn @ enc_top
        out_in = np.concatenate([dec_top, ctx], axis=1)
    else:
        out_in = dec_top
    logits = out_in @ params["out_w"] + params["out_b"]
    probs = _softmax_rows(logits)
    n_tok = len(tgt_ids)
    rows = np.arange(n_tok)
    token_logps = np.log(probs[rows, tgt_ids])
    loss = float(-token_logps.mean())

    grads = {name: np.zeros_like(arr) for name, arr in params.items()}

    dlogits = probs.copy()
    dlogits[rows, tgt_ids] -= 1.0
    dlogits /= n_tok
    grads["out_w"] += out_in.T @ dlogits
    grads["out_b"] += dlogits.sum(axis=0)
    d_out_in = dlogits @ params["out_w"].T

    if cfg.attention:
        d_dec_top = d_out_in[:, :h].copy()
        d_ctx = d_out_in[:, h:]
        d_attn = d_ctx @ enc_top.T
        d_enc_top = attn.T @ d_ctx
        d_scores = attn * (d_attn - (d_attn * attn).sum(axis=1, keepdims=True))
        d_dec_top += d_scores @ enc_top
        d_enc_top += d_scores.T @ dec_top
    else:
        d_dec_top = d_out_in
        d_enc_top = np.zeros_like(enc_top)

    d_dec_x, d_enc_finals = _stack_backward(
        params, cfg, "dec", dec_caches, enc_finals, d_dec_top, zeros, grads
    )
    d_enc_x, _ = _stack_backward(
        params, cfg, "enc", enc_caches, zeros, d_enc_top, d_enc_finals, grads
    )
    np.add.at(grads["embedding"], dec_in, d_dec_x)
    np.add.at(grads["embedding"], src_ids, d_enc_x)
    return loss, grads, n_tok


def _clip_global_norm(grads: dict[str, np.ndarray], clip: float) -> None:
    total = 0.0
    for g in grads.values():
        total += float(np.sum(g * g))
    norm = np.sqrt(total)
    if clip > 0 and norm > clip:
        scale = clip / norm
        for g in grads.values():
            g *= scale


def train_seq2seq(
    model_config: Seq2SeqConfig,
    pairs: Sequence[DialogPair],
    training: TrainingConfig | None = None,
) -> Seq2SeqModel:
    """Seeded-init Adam training with teacher forcing; records per-epoch mean
    token loss on the model."""
    training = training or TrainingConfig()
    pairs = list(pairs)
    if not pairs:
        raise ValueError("empty training pairs")
    vocab = Vocab.build(pairs, training.min_count)
    params = init_params(model_config, len(vocab), training.seed)
    encoded = [
        (vocab.encode(p.post), np.append(vocab.encode(p.response), EOS_ID))
        for p in pairs
    ]

    m_state = {n: np.zeros_like(a) for n, a in params.items()}
    v_state = {n: np.zeros_like(a) for n, a in params.items()}
    b1, b2, eps = training.adam_beta1, training.adam_beta2, training.adam_eps
    rng = np.random.default_rng(training.seed)
    step = 0
    epoch_losses = []
    for epoch in range(training.epochs):
        order = rng.permutation(len(encoded))
        total_loss = 0.0
        total_tok = 0
        for idx in order:
            src, tgt = encoded[idx]
            loss, grads, n_tok = pair_loss_and_grads(params, model_config, src, tgt)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch}, pair {idx}: {loss!r}"
                )
            total_loss += loss * n_tok
            total_tok += n_tok
            _clip_global_norm(grads, training.clip_norm)
            step += 1
            for name in params:
                g = grads[name]
                m_state[name] = b1 * m_state[name] + (1 - b1) * g
                v_state[name] = b2 * v_state[name] + (1 - b2) * g * g
                m_hat = m_state[name] / (1 - b1**step)
                v_hat = v_state[name] / (1 - b2**step)
                params[name] -= training.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
        epoch_losses.append(total_loss / total_tok)
    return Seq2SeqModel(
        config=model_config, vocab=vocab, params=params, trained=True, epoch_losses=epoch_losses
    )


def mean_token_loss(model: Seq2SeqModel, pairs: Sequence[DialogPair]) -> float:
    """Token-weighted cross-entropy of the model on the given pairs."""
    total, n = 0.0, 0
    for p in pairs:
        src = model.vocab.encode(p.post)
        tgt = np.append(model.vocab.encode(p.response), EOS_ID)
        loss, _, n_tok = pair_loss_and_grads(model.params, model.config, src, tgt)
        total += loss * n_tok
        n += n_tok
    return total / n


def _decode_step(model: Seq2SeqModel, enc_top: np.ndarray, states: list[np.ndarray], prev_id: int):
    """One greedy/beam step; returns (probs, new_states)."""
    cfg = model.config
    x = model.params["embedding"][prev_id]
    new_states = []
    for layer in range(cfg.num_layers):
        p = _layer_params(model.params, "dec", layer)
        hnew = gru_cell(np.ascontiguousarray(x), states[layer], *p)
        new_states.append(hnew)
        x = hnew
    top = x
    if cfg.attention:
        scores = enc_top @ top
        scores -= scores.max()
        attn = np.exp(scores)
        attn /= attn.sum()
        ctx = attn @ enc_top
        out_in = np.concatenate([top, ctx])
    else:
        out_in = top
    logits = out_in @ model.params["out_w"] + model.params["out_b"]
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    probs = exp / exp.sum()
    return probs, new_states


def _encode_for_decode(model: Seq2SeqModel, post: Sequence[str]):
    src_ids = model.vocab.encode(post)
    zeros = [np.zeros(model.config.hidden_dim) for _ in range(model.config.num_layers)]
    enc_x = np.ascontiguousarray(model.params["embedding"][src_ids])
    enc_top, enc_caches = _run_stack(model.params, model.config, "enc", enc_x, zeros)
    finals = [enc_caches[l][1][-1] for l in range(model.config.num_layers)]
    return enc_top, finals


def greedy_decode(
    model: Seq2SeqModel, post: Sequence[str], max_len: int = 30, collect_probs: bool = False
):
    """Argmax decoding until the end token or max_len; confidence is the mean
    log-probability over all decode steps (end token included)."""
    enc_top, states = _encode_for_decode(model, post)
    prev = BOS_ID
    out_ids: list[int] = []
    logp_sum = 0.0
    steps = 0
    prob_vectors = []
    while steps < max_len:
        probs, states = _decode_step(model, enc_top, states, prev)
        if collect_probs:
            prob_vectors.append(probs)
        choice = int(np.argmax(probs))
        logp_sum += float(np.log(probs[choice]))
        steps += 1
        if choice == EOS_ID:
            break
        out_ids.append(choice)
        prev = choice
    confidence = logp_sum / steps if steps else 0.0
    output = GeneratorOutput(tokens=model.vocab.decode(out_ids), confidence=confidence)
    if collect_probs:
        return output, prob_vectors
    return output


def beam_decode(model: Seq2SeqModel, post: Sequence[str], beam_width: int, max_len: int = 30) -> GeneratorOutput:
    """Beam search keeping length-normalized log-probability."""
    enc_top, init_states = _encode_for_decode(model, post)
    # (ids, states, logp_sum, steps, finished)
    beams = [([], init_states, 0.0, 0, False)]
    for _ in range(max_len):
        if all(b[4] for b in beams):
            break
        expanded = []
        for ids, states, logp, steps, finished in beams:
            if finished:
                expanded.append((ids, states, logp, steps, True))
                continue
            prev = ids[-1] if ids else BOS_ID
            probs, new_states = _decode_step(model, enc_top, states, prev)
            top_ids = np.argsort(-probs, kind="stable")[:beam_width]
            for tid in top_ids:
                tid = int(tid)
                new_logp = logp + float(np.log(probs[tid]))
                if tid == EOS_ID:
                    expanded.append((ids, new_states, new_logp, steps + 1, True))
                else:
                    expanded.append((ids + [tid], new_states, new_logp, steps + 1, False))
        expanded.sort(key=lambda b: -(b[2] / b[3]))
        beams = expanded[:beam_width]
    best = max(beams, key=lambda b: b[2] / b[3])
    ids, _, logp, steps, _ = best
    return GeneratorOutput(tokens=model.vocab.decode(ids), confidence=logp / steps if steps else 0.0)


def generate(model: Seq2SeqModel, post: Sequence[str], decode: DecodeConfig | None = None) -> GeneratorOutput:
    """Decode a response for the post; greedy by default, beam search when
    beam_width > 1."""
    if not model.trained:
        raise ValueError("model not trained")
    decode = decode or DecodeConfig()
    if decode.beam_width <= 1:
        return greedy_decode(model, post, decode.max_len)
    return beam_decode(model, post, decode.beam_width, decode.max_len)


@dataclass
class Seq2SeqGenerator:
    """Generator-protocol adapter around a trained model."""

    model: Seq2SeqModel
    decode: DecodeConfig = field(default_factory=DecodeConfig)

    def generate(self, post: Sequence[str]) -> GeneratorOutput:
        return generate(self.model, post, self.decode)
