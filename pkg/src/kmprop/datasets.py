"""Bundled synthetic cause-effect pairs.

Twelve additive-noise pairs with known direction, covering a range of
smooth nonlinear mechanisms, cause distributions, and noise laws. Half
the pairs are stored with the columns swapped so that the correct
answer alternates between 'x->y' and 'y->x'.
"""

from __future__ import annotations

import csv
import os

import numpy as np

from .anm import PairedSample

_DEFAULT_SIZE = 300


def _uniform(lo, hi):
    return lambda rng, n: rng.uniform(lo, hi, n)


def _normal(mean, sd):
    return lambda rng, n: rng.normal(mean, sd, n)


# name, cause sampler, mechanism, noise sampler
_MECHANISMS = [
    ("cubic_drift", _uniform(-1.0, 1.0), lambda c: c + c ** 3, _normal(0.0, 0.10)),
    ("quadratic", _uniform(-1.0, 1.0), lambda c: 2.0 * c + 0.5 * c ** 2, _normal(0.0, 0.15)),
    ("cubic_gauss", _normal(0.0, 1.0), lambda c: c ** 3 / 3.0, _normal(0.0, 0.20)),
    ("exp_growth", _uniform(0.0, 2.0), lambda c: np.exp(c) - 1.0, _normal(0.0, 0.10)),
    ("sine_trend", _uniform(-2.0, 2.0), lambda c: np.sin(c) + 0.5 * c, _normal(0.0, 0.10)),
    ("skew_bend", _uniform(-1.2, 1.2), lambda c: c + 0.8 * c ** 2 + 0.5 * c ** 3, _normal(0.0, 0.10)),
    ("odd_cubic", _uniform(-1.5, 1.5), lambda c: 0.5 * c ** 3 - c, _uniform(-0.2, 0.2)),
    ("log_shift", _normal(1.0, 0.5), lambda c: np.log(c + 2.0), _normal(0.0, 0.05)),
    ("linear_unif", _uniform(-1.0, 1.0), lambda c: 3.0 * c, _uniform(-0.3, 0.3)),
    ("reciprocal", _uniform(0.5, 2.5), lambda c: 1.0 / c, _normal(0.0, 0.05)),
    ("cosine_mix", _uniform(-1.5, 1.5), lambda c: 0.3 * c + np.cos(c), _normal(0.0, 0.10)),
    ("damped_odd", _uniform(-1.0, 1.0), lambda c: 2.0 * c * np.exp(-(c ** 2)), _normal(0.0, 0.08)),
]


def synthetic_pair_suite(seed: int = 0, size: int = _DEFAULT_SIZE) -> list[PairedSample]:
    """Generate the twelve bundled pairs.

    Even-indexed pairs store (cause, effect) as (x, y) with ground truth
    'x->y'; odd-indexed pairs are stored swapped with ground truth
    'y->x'.
    """
    samples = []
    for idx, (name, draw_cause, mech, draw_noise) in enumerate(_MECHANISMS):
        rng = np.random.default_rng([seed, idx])
        c = draw_cause(rng, size)
        e = mech(c) + draw_noise(rng, size)
        pair_id = f"pair{idx + 1:02d}_{name}"
        if idx % 2 == 0:
            samples.append(PairedSample(x=c, y=e, pair_id=pair_id, ground_truth="x->y"))
        else:
            samples.append(PairedSample(x=e, y=c, pair_id=pair_id, ground_truth="y->x"))
    return samples


def write_pair_dir(samples: list[PairedSample], directory) -> str:
    """Write pairs as whitespace-separated two-column files plus a
    metadata CSV; returns the metadata path."""
    os.makedirs(directory, exist_ok=True)
    meta_path = os.path.join(directory, "metadata.csv")
    with open(meta_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["pair_id", "ground_truth"])
        for s in samples:
            fname = os.path.join(directory, f"{s.pair_id}.txt")
            with open(fname, "w") as pf:
                for xv, yv in zip(s.x, s.y):
                    pf.write(f"{float(xv)!r} {float(yv)!r}\n")
            writer.writerow([s.pair_id, s.ground_truth])
    return meta_path
