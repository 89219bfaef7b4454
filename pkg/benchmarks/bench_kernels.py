"""Compare the numba kernels with their numpy fallbacks.

    python benchmarks/bench_kernels.py            # per-kernel timings
    python benchmarks/bench_kernels.py --model    # plus a train step and a denoiser call per backend

Per-kernel timings run both implementations in one process. The model
timings start a fresh interpreter per backend, since the backend is chosen
at import time from ``VSTAIN_PURE_NUMPY``.
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from vstain import _accel, kernels


def _best(fn, repeat: int) -> float:
    fn()  # warm-up (includes numba compilation)
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_cases(rng):
    # shapes of the default denoiser at a 160 px crop, batch 4 (80 x 80 after the patch stem)
    b, c, h, w, k = 4, 32, 80, 80, 3
    xp = rng.standard_normal((b, c, h + 2, w + 2)).astype(np.float32)
    cols = kernels.im2col_numpy(xp, k, 2, h // 2, w // 2)
    wp = w + 2
    n_out = (h - 1) * wp + w
    offs = np.array([i * wp + j for i in range(k) for j in range(k)], dtype=np.int64)
    ys = rng.standard_normal((b, k * k, c, (h + 2) * wp)).astype(np.float32)
    z = rng.standard_normal((b, k * k, c, n_out)).astype(np.float32)
    n_normals = 3 * 160 * 160
    return {
        "im2col (stride 2)": (lambda f: f(xp, k, 2, h // 2, w // 2), "im2col"),
        "col2im (stride 2)": (lambda f: f(cols, xp.shape, k, 2, h // 2, w // 2), "col2im"),
        "shift_sum": (lambda f: f(ys, offs, n_out), "shift_sum"),
        "shift_scatter": (lambda f: f(z, offs, (h + 2) * wp), "shift_scatter"),
        "counter_normals": (lambda f: f(12345, 0, n_normals), "counter_normals"),
    }


def bench_kernels(repeat: int) -> list[dict]:
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rows = []
    for name, (call, base) in kernel_cases(np.random.default_rng(0)).items():
        t_np = _best(lambda: call(getattr(kernels, f"{base}_numpy")), repeat)
        t_nb = _best(lambda: call(getattr(kernels, f"{base}_numba")), repeat)
        a = call(getattr(kernels, f"{base}_numpy"))
        b = call(getattr(kernels, f"{base}_numba"))
        rows.append({"kernel": name, "numpy_ms": 1e3 * t_np, "numba_ms": 1e3 * t_nb,
                     "speedup": t_np / t_nb, "max_abs_diff": float(np.max(np.abs(a - b)))})
    return rows


_MODEL_SNIPPET = r"""
import json, timeit
import numpy as np
from vstain import _accel
from vstain.config import RunConfig
from vstain.model import denoiser_forward, init_params
from vstain.schedule import build_schedule
from vstain.training import OptimizerState, train_step

cfg = RunConfig()
p = init_params(cfg.conditioner(16), cfg.denoiser(), seed=0)
rng = np.random.default_rng(0)
ions = rng.standard_normal((4, 16, 16, 16)).astype(np.float32)
x0 = np.clip(rng.standard_normal((4, 3, 160, 160)), -1, 1).astype(np.float32)
sched = build_schedule(200, 1.0)
tc = cfg.train()
opt = OptimizerState.zeros(p)
step = lambda: train_step(p, opt, sched, ions, x0, tc, 0)
fwd = lambda: denoiser_forward(p, x0[:1], x0[:1], 100, 200)
step(); fwd()
print(json.dumps({"backend": _accel.backend_name(),
                  "train_step_s": min(timeit.repeat(step, number=1, repeat=REPEAT)),
                  "denoiser_call_s": min(timeit.repeat(fwd, number=1, repeat=REPEAT))}))
"""


def bench_model(repeat: int) -> list[dict]:
    out = []
    for flag in ("0", "1"):
        env = dict(os.environ, VSTAIN_PURE_NUMPY=flag)
        res = subprocess.run([sys.executable, "-c", _MODEL_SNIPPET.replace("REPEAT", str(repeat))],
                             env=env, capture_output=True, text=True, check=True)
        out.append(json.loads(res.stdout.strip().splitlines()[-1]))
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5, help="timing repeats (best is reported)")
    ap.add_argument("--model", action="store_true", help="also time a train step and a denoiser call")
    args = ap.parse_args(argv)

    print(f"{'kernel':<20}{'numpy ms':>10}{'numba ms':>10}{'speedup':>9}{'max |diff|':>12}")
    for r in bench_kernels(args.repeat):
        print(f"{r['kernel']:<20}{r['numpy_ms']:>10.2f}{r['numba_ms']:>10.2f}{r['speedup']:>8.2f}x"
              f"{r['max_abs_diff']:>12.2e}")
    if args.model:
        print()
        print(f"{'backend':<10}{'train step s':>14}{'denoiser call s':>17}")
        for r in bench_model(args.repeat):
            print(f"{r['backend']:<10}{r['train_step_s']:>14.3f}{r['denoiser_call_s']:>17.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
