"""Benchmark the JIT-compiled recurrent kernels against the pure-numpy path.

Run: python benchmarks/bench_kernels.py
The same comparison end to end: time `pytest tests/test_acceptance.py -k seq2seq`
with and without STYLEBOT_NO_NUMBA=1.
"""

from __future__ import annotations

import time

import numpy as np

from stylebot import kernels
from stylebot.corpus import DialogPair
from stylebot.seq2seq import Seq2SeqConfig, TrainingConfig, train_seq2seq


def bench(fn, *args, repeat: int = 200) -> float:
    fn(*args)  # warm-up (JIT compile on the numba path)
    start = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - start) / repeat


def layer_args(rng, t_len: int, d_in: int, hidden: int):
    def mk(*shape):
        return rng.uniform(-0.3, 0.3, shape)

    xs, h0 = mk(t_len, d_in), mk(hidden)
    params = (
        mk(d_in, hidden), mk(hidden, hidden), mk(hidden),
        mk(d_in, hidden), mk(hidden, hidden), mk(hidden),
        mk(d_in, hidden), mk(hidden, hidden), mk(hidden),
    )
    return xs, h0, params


def bench_kernels() -> None:
    rng = np.random.default_rng(0)
    print(f"numba enabled: {kernels.NUMBA_ENABLED}")
    print(f"{'kernel':<22} {'T':>4} {'hidden':>6} {'jit/np':>10} {'numpy':>10} {'speedup':>8}")
    for t_len, hidden in ((10, 32), (20, 64), (40, 128)):
        xs, h0, params = layer_args(rng, t_len, 32, hidden)
        jit_fwd = bench(kernels.gru_layer_forward, xs, h0, *params)
        np_fwd = bench(kernels.gru_layer_forward_py, xs, h0, *params)
        hs, zs, rs, cs = kernels.gru_layer_forward_py(xs, h0, *params)
        dhs, dhl = rng.uniform(-1, 1, (t_len, hidden)), rng.uniform(-1, 1, hidden)
        back_args = (xs, hs, h0, zs, rs, cs, dhs, dhl,
                     params[0], params[1], params[3], params[4], params[6], params[7])
        jit_bwd = bench(kernels.gru_layer_backward, *back_args)
        np_bwd = bench(kernels.gru_layer_backward_py, *back_args)
        print(f"{'gru_layer_forward':<22} {t_len:>4} {hidden:>6} {jit_fwd*1e6:>9.1f}u {np_fwd*1e6:>9.1f}u {np_fwd/jit_fwd:>7.2f}x")
        print(f"{'gru_layer_backward':<22} {t_len:>4} {hidden:>6} {jit_bwd*1e6:>9.1f}u {np_bwd*1e6:>9.1f}u {np_bwd/jit_bwd:>7.2f}x")


def bench_training_epochs(epochs: int = 30) -> None:
    rng = np.random.default_rng(5)
    words = [f"w{i}" for i in range(30)]
    pairs = []
    seen = set()
    while len(pairs) < 30:
        post = tuple(rng.choice(words, size=rng.integers(2, 6)))
        resp = tuple(rng.choice(words, size=rng.integers(2, 6)))
        if post not in seen:
            seen.add(post)
            pairs.append(DialogPair(post=post, response=resp, domain="bench"))
    start = time.perf_counter()
    train_seq2seq(
        Seq2SeqConfig(embedding_dim=32, hidden_dim=64),
        pairs,
        TrainingConfig(epochs=epochs, learning_rate=0.01, seed=1),
    )
    elapsed = time.perf_counter() - start
    path = "numba" if kernels.NUMBA_ENABLED else "numpy"
    print(f"\ntrain_seq2seq 30 pairs x {epochs} epochs on the {path} path: {elapsed:.2f}s")
    print("(set STYLEBOT_NO_NUMBA=1 and rerun to time the other path)")


if __name__ == "__main__":
    bench_kernels()
    bench_training_epochs()
