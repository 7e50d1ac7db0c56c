"""Compare the compiled MPFR orbit kernel with the pure-Python fallback.

    python benchmarks/bench_kernel.py [--steps 20000] [--bits 128,256,1024]

Both backends iterate the canonical map (b = 1/2, nu = 3) from the same
point and must return bit-identical results; the script prints the time
per step and the speed-up.
"""

from __future__ import annotations

import argparse
import sys
import time

from mpmath import mpf

from flatspot.bigreal import to_raw, working
from flatspot.flatmap import canonical
from flatspot.kernel import backends

T = "0.8163501549510784519972224691483575"


def run(impl, spec, x, steps: int, bits: int):
    t0 = time.perf_counter()
    out = impl.advance(spec, x, steps, bits, 0.0)
    return out, time.perf_counter() - t0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--bits", default="128,256,1024")
    args = ap.parse_args(argv)

    impls = backends()
    if "mpfr" not in impls:
        print("compiled kernel not built; only the Python backend is available", file=sys.stderr)
    print(f"{'bits':>6} {'backend':>8} {'us/step':>10} {'speed-up':>9}")
    for bits in (int(b) for b in args.bits.split(",")):
        with working(bits):
            m = canonical(mpf("0.5"), mpf(T), mpf(3))
            spec = m.kernel_spec()
            x = to_raw(+mpf(T))
        results = {name: run(impl, spec, x, args.steps, bits) for name, impl in impls.items()}
        base = results["python"][1]
        ref = results["python"][0]
        for name, (out, dt) in results.items():
            if out[:2] != ref[:2]:
                print(f"backend {name} disagrees with python at {bits} bits", file=sys.stderr)
                return 1
            print(f"{bits:>6} {name:>8} {1e6 * dt / args.steps:>10.2f} {base / dt:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
