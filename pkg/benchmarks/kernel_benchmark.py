"""Throughput comparison of the integrator backends.

Runs identical noise through the compiled kernel and the NumPy fallback on
two patch sizes, reports steps/second and the speedup, and checks that the
trajectories agree to rounding over a short horizon.

    python benchmarks/kernel_benchmark.py [--steps 20000]
"""

import argparse
import time

import numpy as np

from rigidbrown._kernels import available_backends
from rigidbrown.crystal import lattice_patch
from rigidbrown.potential import PotentialSpec


def bench(kernel, c, spec, steps, seed=0):
    rng = np.random.default_rng(seed)
    x = c.positions.copy()
    noise = rng.standard_normal((steps, c.n_particles, c.dim))
    adjacency = c.adjacency().astype(np.uint8)
    beta, dt = 200.0, 5e-6
    t0 = time.perf_counter()
    status, _, _ = kernel.integrate_chunk(
        x, noise, 0.5 * beta * dt, np.sqrt(dt), spec.a, spec.w, spec.k, spec.b,
        adjacency)
    elapsed = time.perf_counter() - t0
    assert status == 0
    return elapsed, x


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=20000)
    args = parser.parse_args()

    spec = PotentialSpec()
    backends = available_backends()
    if "compiled" not in backends:
        print("compiled backend not built; showing python backend only")

    for radius, label in ((0.505, "hex7"), (1.505, "hex37")):
        c = lattice_patch(spec, 2, {"shape": "ball", "center": [0, 0],
                                    "radius": radius}, 0.5)
        print(f"\n{label}: N={c.n_particles}, {args.steps} steps")
        results = {}
        for name, kernel in sorted(backends.items()):
            steps = args.steps if name == "compiled" else max(args.steps // 10, 1000)
            elapsed, x = bench(kernel, c, spec, steps)
            rate = steps / elapsed
            results[name] = rate
            print(f"  {name:>9}: {rate:12.0f} steps/s  ({elapsed:.3f}s for {steps})")
        if len(results) == 2:
            print(f"  speedup: {results['compiled'] / results['python']:.1f}x")

        # agreement on identical noise over a short horizon
        if len(backends) == 2:
            short = 200
            xs = {}
            for name, kernel in backends.items():
                _, xs[name] = bench(kernel, c, spec, short, seed=1)
            dev = np.abs(xs["compiled"] - xs["python"]).max()
            print(f"  trajectory deviation over {short} shared-noise steps: {dev:.3g}")


if __name__ == "__main__":
    main()
