"""Regenerate the reference numbers stored in ``frozen_values.py``.

Run ``python tests/freeze_oracles.py`` and paste the output over the file.
Everything here is computed without the package: high-precision
integration with mpmath, dense grids, and the quadrature-based max-min
oracle from ``oracles.py``.
"""

import os
import sys
import time

import mpmath as mp
import numpy as np
from scipy.special import erfc, ndtri

sys.path.insert(0, os.path.dirname(__file__))
import oracles  # noqa: E402

mp.mp.dps = 40


def mp_phi(z):
    return mp.exp(-z * z / 2) / mp.sqrt(2 * mp.pi)


def mp_Phi(z):
    return mp.ncdf(z)


def mp_expect(f, kinks):
    pts = [-mp.inf] + sorted(kinks) + [mp.inf]
    return mp.quad(lambda z: f(z) * mp_phi(z), pts)


def mp_soft(x, t):
    return mp.sign(x) * max(abs(x) - t, 0)


def np_tail(a):
    # (1 + a^2) Phi(-a) - a phi(a) with Phi from erfc
    return (1 + a * a) * 0.5 * erfc(a / np.sqrt(2)) - a * np.exp(-a * a / 2) / np.sqrt(2 * np.pi)


def main():
    out = {}
    out["ATOM_MSE_0_1"] = mp_expect(lambda z: mp_soft(z, 1) ** 2, [-1, 1])
    out["ACTIVE_0_1"] = mp_expect(lambda z: 1 if abs(z) >= 1 else 0, [-1, 1])
    out["DELTA_0_1"] = mp_expect(lambda z: z * z / 2 if abs(z) <= 1 else abs(z) - mp.mpf(1) / 2, [-1, 1])
    x, a = mp.mpf("0.7"), mp.mpf("0.9")
    out["H_07_09"] = mp_expect(lambda z: abs(mp_soft(x + z, a)), [a - x, -a - x]) - x
    out["ALPHA_MIN_05"] = mp.findroot(lambda t: (1 + t * t) * mp_Phi(-t) - t * mp_phi(t) - mp.mpf("0.25"), 0.6)

    for d in (0.3, 0.5, 0.8):
        def ratio(al, d=d):
            g = np_tail(al)
            with np.errstate(divide="ignore", invalid="ignore"):
                val = (1 - 2 * g / d) / (1 + al * al - 2 * g)
            return np.where(np.isfinite(val), val, -np.inf)
        _, best = oracles.grid_argmax(ratio, 0.0, 20.0, 10 ** 6)
        out[f"S_MAX_{int(d * 10):02d}"] = d * best

    # minimax lambda for s0 = 0.3, delta = 0.8, sigma = 0.2 via a 1e6 grid over alpha
    s0, d, sig = 0.3, 0.8, 0.2
    def neg_m(al):
        return -(s0 * (1 + al * al) + 2 * (1 - s0) * np_tail(al))
    a0, m = oracles.grid_argmax(neg_m, 0.0, 10.0, 10 ** 6)
    out["ALPHA0_03"] = a0
    out["LAMBDA_MM_03_08_02"] = a0 * sig * np.sqrt(1 + m / d)

    # tau fixed point for a point mass at 0, delta = 0.8, sigma = 0.2, alpha = 2
    c = 2 * ((1 + 4) * mp_Phi(-2) - 2 * mp_phi(2))
    out["TAU_PM0_08_02_2"] = mp.sqrt(mp.mpf("0.04") / (1 - c / mp.mpf("0.8")))

    # max-min value for 0.1 N(0,1) + 0.9 delta_0 with 1000 Gaussian atoms
    n_atoms = 1000
    q = ndtri((np.arange(1, n_atoms + 1) - 0.5) / n_atoms)
    vals = np.concatenate(([0.0], q))
    w = np.concatenate(([0.9], np.full(n_atoms, 0.1 / n_atoms)))
    t0 = time.time()
    value, beta, tau = oracles.maximin_oracle(vals, w, 0.8, 0.2, 0.3, beta_hi=0.6, tau_hi=1.5)
    out["MAXMIN_VALUE"] = value
    out["MAXMIN_BETA"] = beta
    out["MAXMIN_TAU"] = tau
    print(f"# max-min oracle took {time.time() - t0:.0f}s", file=sys.stderr)

    # mutual information, s = 0.1, r = 1: Monte-Carlo entropy with 1e7 samples
    rng = np.random.default_rng(20240501)
    s, r, M = 0.1, 1.0, 10 ** 7
    theta = np.where(rng.random(M) < s, rng.standard_normal(M), 0.0)
    y = np.sqrt(r) * theta + rng.standard_normal(M)
    dens = s * np.exp(-y * y / (2 * (1 + r))) / np.sqrt(2 * np.pi * (1 + r)) \
        + (1 - s) * np.exp(-y * y / 2) / np.sqrt(2 * np.pi)
    logs = -np.log(dens)
    out["MI_01_1_MC"] = logs.mean() - 0.5 * np.log(2 * np.pi * np.e)
    out["MI_01_1_MC_SE"] = logs.std(ddof=1) / np.sqrt(M)

    print('"""Reference numbers produced by ``freeze_oracles.py``; do not edit by hand."""\n')
    for k, v in out.items():
        print(f"{k} = {float(v)!r}")


if __name__ == "__main__":
    main()
