"""Time norm_M and dual_norm_M on random inputs, per base space and support size.

    python scripts/norm_timing.py --spaces c0 lp:2 --samples 30
"""
import argparse
import random
import statistics
import time

from xmspace import base_spaces as bs
from xmspace import quotient as q
from xmspace.construction import standard_setup
from xmspace.norm_engine import dual_norm_M, norm_M


def timed(fn):
    t = time.perf_counter()
    fn()
    return time.perf_counter() - t


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--spaces", nargs="+", default=["c0", "lp:2"])
    p.add_argument("--supports", nargs="+", type=int, default=[4, 8, 12])
    p.add_argument("--samples", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    print("space,operation,support,median_s,max_s")
    for name in args.spaces:
        space = bs.parse_space(name)
        setup = q.Setup(*standard_setup(space))
        rng = random.Random(args.seed)
        for k in args.supports:
            xs = [q.gen_vector(rng, setup.blocks, support=k) for _ in range(args.samples)]
            norm_t = [timed(lambda x=x: norm_M(x, space, setup.blocks)) for x in xs]
            print(f"{name},norm,{k},{statistics.median(norm_t):.4f},{max(norm_t):.4f}", flush=True)
        coeffs = [q.gen_coefficients(rng, setup) for _ in range(args.samples)]
        dual_t = [timed(lambda a=a: dual_norm_M(q.u_combination(a, setup.blocks), space, setup.blocks))
                  for a in coeffs]
        print(f"{name},dual_u_combination,-,{statistics.median(dual_t):.4f},{max(dual_t):.4f}", flush=True)


if __name__ == "__main__":
    main()
