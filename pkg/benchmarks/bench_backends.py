"""Time the compiled stencil kernels against the numpy fallback.

    python3 benchmarks/bench_backends.py [--repeat 20]
"""
import argparse
import timeit

import numpy as np

from nlskt._backend import implementations
from nlskt.grid import Domain
from nlskt.kernel import KernelSpec, build_table

CASES = [
    ("1d n=256 rho=0.25", Domain.interval(0.0, 1.0, 256), KernelSpec("uniform-ball", 0.25)),
    ("1d n=1024 rho=0.05", Domain.interval(0.0, 1.0, 1024), KernelSpec("uniform-ball", 0.05)),
    ("2d 64x64 rho=0.1", Domain.box((0, 0), (1, 1), (64, 64)), KernelSpec("uniform-ball", 0.1, dim=2)),
    ("2d 128x128 rho=0.05", Domain.box((0, 0), (1, 1), (128, 128)),
     KernelSpec("truncated-gaussian", 0.05, dim=2, width=0.02)),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    impls = implementations()
    rng = np.random.default_rng(0)
    print(f"backends: {', '.join(impls)}")
    print(f"{'case':<22}{'kernel':<14}" + "".join(f"{n + ' ms':>12}" for n in impls) + f"{'speedup':>10}")
    for label, dom, spec in CASES:
        tab = build_table(spec, dom)
        g = np.ascontiguousarray(rng.random(dom.grid_shape).reshape(tab.domain.grid_shape))
        for kernel, call in (
            ("stencil_sum", lambda m: m.stencil_sum(g, tab.offsets, tab.weights)),
            ("pair_energy", lambda m: m.pair_energy(g, tab.offsets, tab.weights)),
            ("bilateral", lambda m: m.bilateral_rhs(g, tab.offsets, tab.weights, 25.0)),
        ):
            ref = np.asarray(call(impls["python"]))
            times = {}
            for name, mod in impls.items():
                assert np.allclose(np.asarray(call(mod)), ref, rtol=1e-12, atol=1e-12), (label, kernel, name)
                times[name] = min(timeit.repeat(lambda: call(mod), number=1, repeat=args.repeat)) * 1e3
            speed = times["python"] / times["cython"] if "cython" in times else float("nan")
            print(f"{label:<22}{kernel:<14}" + "".join(f"{t:>12.3f}" for t in times.values()) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
