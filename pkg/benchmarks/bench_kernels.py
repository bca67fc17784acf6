"""Time each kernel's numba and numpy flavours on training-sized inputs.

    python benchmarks/bench_kernels.py [--repeat N]

The numba flavour is compiled once before timing. Also reports one short
training run under each backend (selected in a subprocess via
SDDA_DISABLE_NUMBA).
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from sdda import kernels
from sdda._accel import NUMBA_AVAILABLE

TRAIN_SNIPPET = """
import time
from sdda.datagen import DomainShiftSpec, generate_pair
from sdda.trainer import TrainerConfig, train
s, t = generate_pair(DomainShiftSpec(samples_per_class=200, target_rotation_deg=35, seed=0))
t0 = time.perf_counter()
train(TrainerConfig(epochs=10, layer_dims=(2, 16, 16, 8, 3), learning_rate=1e-3), s, t)
print(time.perf_counter() - t0)
"""


def cases(rng):
    X = rng.standard_normal((32, 8))
    Z = rng.standard_normal((32, 8))
    W = rng.standard_normal((8, 8))
    rows_a = rng.standard_normal((2, 32))
    rows_b = rng.standard_normal((2, 32))
    sigmas = np.logspace(-6, 6, 19)
    d = kernels.col_sqdist_np(rows_a, rows_b)
    return {
        "xoshiro_fill (4096)": lambda k: getattr(kernels, f"xoshiro_fill_{k}")(
            np.array([1, 2, 3, 4], dtype=np.uint64), np.empty(4096, dtype=np.uint64)),
        "col_sqdist (32x8)": lambda k: getattr(kernels, f"col_sqdist_{k}")(X, Z),
        "radial_grad (32x8)": lambda k: getattr(kernels, f"radial_grad_{k}")(X, Z, W),
        "rbf_mix (32x32, 19 bw)": lambda k: getattr(kernels, f"rbf_mix_{k}")(d, sigmas),
    }


def time_call(fn, repeat):
    number = 200
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def train_seconds(disable):
    env = dict(os.environ, SDDA_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", TRAIN_SNIPPET], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--skip-train", action="store_true")
    args = parser.parse_args(argv)
    if not NUMBA_AVAILABLE:
        print("numba is not installed; nothing to compare")
        return 1

    rng = np.random.default_rng(0)
    print(f"{'kernel':26s} {'numba us':>10s} {'numpy us':>10s} {'speedup':>8s}")
    for name, call in cases(rng).items():
        call("nb")  # compile
        t_nb = time_call(lambda: call("nb"), args.repeat)
        t_np = time_call(lambda: call("np"), args.repeat)
        print(f"{name:26s} {t_nb * 1e6:10.2f} {t_np * 1e6:10.2f} {t_np / t_nb:7.1f}x")

    if not args.skip_train:
        t_nb, t_np = train_seconds(False), train_seconds(True)
        print(f"{'train 10 epochs':26s} {t_nb * 1e3:9.0f}ms {t_np * 1e3:9.0f}ms {t_np / t_nb:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
