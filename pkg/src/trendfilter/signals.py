"""Synthetic series for demos, benchmarks, and tests.

Signals live on [0,1]. The doppler wave compresses its oscillations
toward t=0, so its smoothness varies along the domain; the other kinds
are homogeneous. Designs are even spacing, uniform random draws, or a
two-component Gaussian mixture that concentrates points in two clumps,
leaving long gaps elsewhere.

All randomness flows through one seeded generator, with the design drawn
before the noise, so a (kind, n, noise_sd, design, seed) tuple pins the
output exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("constant", "sinusoid", "doppler", "piecewise-linear")
DESIGNS = ("even", "uniform-random", "gaussian-mixture")


@dataclass(frozen=True)
class SignalSpec:
    """What to simulate: signal kind, size, noise level, design, seed."""

    kind: str
    n: int
    noise_sd: float
    design: str = "even"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown signal kind {self.kind!r}")
        if self.design not in DESIGNS:
            raise ValueError(f"unknown design {self.design!r}")
        if self.n < 10:
            raise ValueError("n must be >= 10")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")


def make_design(design, n, rng):
    """Draw n strictly increasing points in [0,1]."""
    if design == "even":
        return np.linspace(0.0, 1.0, n)
    if design == "uniform-random":
        while True:
            x = np.sort(rng.uniform(0.0, 1.0, size=n))
            if (np.diff(x) > 0).all():
                return x
    if design == "gaussian-mixture":
        while True:
            x = np.empty(n)
            comp = rng.uniform(size=n) < 0.5
            x[comp] = rng.normal(0.3, 0.1, size=int(comp.sum()))
            x[~comp] = rng.normal(0.75, 0.05, size=int((~comp).sum()))
            # resample out-of-range points rather than clipping, which
            # would pile duplicates onto the interval ends
            bad = (x <= 0.0) | (x >= 1.0)
            while bad.any():
                redraw = rng.uniform(size=int(bad.sum())) < 0.5
                fresh = np.where(redraw, rng.normal(0.3, 0.1, size=redraw.size),
                                 rng.normal(0.75, 0.05, size=redraw.size))
                x[np.flatnonzero(bad)] = fresh
                bad = (x <= 0.0) | (x >= 1.0)
            x = np.sort(x)
            if (np.diff(x) > 0).all():
                return x
    raise ValueError(f"unknown design {design!r}")


def make_signal(kind, t):
    """Evaluate the named signal at points t in [0,1]."""
    t = np.asarray(t, dtype=np.float64)
    if kind == "constant":
        return np.ones_like(t)
    if kind == "sinusoid":
        return np.sin(2.0 * np.pi * 3.0 * t)
    if kind == "doppler":
        eps = 0.05
        return np.sin(2.0 * np.pi * (1.0 + eps) / (t + eps))
    if kind == "piecewise-linear":
        xp = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
        fp = np.array([0.0, 1.0, -1.0, 1.0, 0.0])
        return np.interp(t, xp, fp)
    raise ValueError(f"unknown signal kind {kind!r}")


def simulate(spec):
    """Draw (x, y) for a SignalSpec: y = signal(x) + noise_sd * N(0,1)."""
    rng = np.random.default_rng(spec.seed)
    x = make_design(spec.design, spec.n, rng)
    f = make_signal(spec.kind, x)
    y = f + spec.noise_sd * rng.standard_normal(spec.n)
    return x, y
