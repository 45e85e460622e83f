#!/usr/bin/env python3
"""Probe the symbol of a bundled model over a frequency grid and print
analytic vs Monte-Carlo values side by side.

    python3 scripts/symbol_probe_demo.py --model cauchy --x 0 --samples 50000
"""

import argparse

import numpy as np

from symbolkit.config import compile_model, load_config, resolve_model_path
from symbolkit.simulate import PathSampler
from symbolkit.symbol import ProbeSettings, estimate_symbol


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--model", default="bm")
    ap.add_argument("--x", type=float, default=0.0)
    ap.add_argument("--samples", type=int, default=50_000)
    ap.add_argument("--k-radius", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = load_config(resolve_model_path(args.model))
    model = compile_model(cfg)
    settings = ProbeSettings(k_radius=args.k_radius, n_samples=args.samples)
    sampler = PathSampler(model=model, dt=settings.step, seed=args.seed)

    print(f"model {cfg.name}, start x = {args.x}, n = {args.samples}")
    print(f"{'xi':>6} {'analytic':>22} {'estimate':>22} {'stderr':>9} {'rel':>7}")
    for xi in np.linspace(0.5, 3.0, 6):
        rep = estimate_symbol(sampler, [args.x], [xi], settings)
        rel = "" if rep.rel_error is None else f"{rep.rel_error:7.2%}"
        print(f"{xi:6.2f} {rep.analytic:22.5g} {rep.extrapolated:22.5g} "
              f"{rep.extrapolated_stderr:9.3g} {rel}")


if __name__ == "__main__":
    main()
