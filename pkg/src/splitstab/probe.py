"""Empirical estimate of the Aubin modulus by random matrix perturbations.

For each radius ``r`` we draw two perturbed data matrices ``P'`` and ``P``
from the Frobenius ball of radius ``r`` around the reference data, locate a
solution ``s'`` of the ``P'`` problem near the reference point, and measure
how far ``s'`` is from the solution set of the ``P`` problem. A
Lipschitz-like solution map keeps ``dist(s', S(P)) / |P' - P|_F`` bounded as
``r -> 0``; a ratio that keeps growing suggests it is not.

This is a heuristic. It can neither prove nor refute the property, and its
output is meant to sit next to a certificate, never to replace one.

Sample ``i`` uses its own RNG stream derived from ``(seed, i)`` and the same
normalized perturbation at every radius, so the schedule compares like with
like and serial or parallel evaluation gives identical reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .certify import SEP
from .solve import nearest_solution

DIVERGENCE_FACTOR = 10.0


@dataclass(frozen=True)
class ProbeConfig:
    radii: tuple = tuple(0.1 * 2.0 ** -k for k in range(6))
    samples_per_radius: int = 64
    neighborhood: float = 1.0
    seed: int = 0
    solve_tol: float = 1e-10
    max_iters: int = 2_000

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        if not radii or any(r <= 0 for r in radii):
            raise ValueError("radii must be positive")
        if any(a <= b for a, b in zip(radii, radii[1:])):
            raise ValueError("radii must be strictly decreasing")
        if self.samples_per_radius < 1:
            raise ValueError("samples_per_radius must be >= 1")
        if self.neighborhood <= 0:
            raise ValueError("neighborhood must be positive")
        object.__setattr__(self, "radii", radii)

    @classmethod
    def geometric(cls, r0=0.1, levels=6, **kw):
        return cls(radii=tuple(r0 * 2.0 ** -k for k in range(levels)), **kw)


@dataclass
class RadiusStats:
    radius: float
    max_ratio: float
    mean_ratio: float
    failures: int
    skipped: int
    numerators: list = field(default_factory=list)
    denominators: list = field(default_factory=list)

    def to_dict(self):
        return {
            "radius": self.radius,
            "max_ratio": self.max_ratio,
            "mean_ratio": self.mean_ratio,
            "failures": self.failures,
            "skipped": self.skipped,
            "numerators": self.numerators,
            "denominators": self.denominators,
        }


@dataclass
class ProbeReport:
    per_radius: list
    modulus_estimate: float
    diverging: bool
    config: Optional[ProbeConfig] = None

    def to_dict(self):
        out = {
            "heuristic": True,
            "per_radius": [s.to_dict() for s in self.per_radius],
            "modulus_estimate": self.modulus_estimate,
            "diverging": self.diverging,
        }
        if self.config is not None:
            out["config"] = {
                "radii": list(self.config.radii),
                "samples_per_radius": self.config.samples_per_radius,
                "neighborhood": self.config.neighborhood,
                "seed": self.config.seed,
                "solve_tol": self.config.solve_tol,
                "max_iters": self.config.max_iters,
            }
        return out


def is_diverging(max_ratios):
    """Largest-to-smallest-radius growth of the max ratio exceeds DIVERGENCE_FACTOR."""
    if len(max_ratios) < 2:
        return False
    first, last = max_ratios[0], max_ratios[-1]
    return bool(last > 0 and last > DIVERGENCE_FACTOR * first)


def _unit_ball_sample(rng, dim):
    """Uniform direction times a radial fraction distributed as U**(1/dim)."""
    d = rng.standard_normal(dim)
    d /= np.linalg.norm(d)
    return d * rng.random() ** (1.0 / dim)


def run_probe(spec, cfg=None):
    cfg = cfg or ProbeConfig()
    spec.check_solution()
    sep = spec.kind == SEP
    shapes = [spec.A.shape] + ([spec.B.shape] if sep else [])
    sizes = [int(np.prod(s)) for s in shapes]
    ref = np.concatenate([spec.A.ravel()] + ([spec.B.ravel()] if sep else []))
    ref_point = np.concatenate([spec.xbar, spec.ybar]) if sep else spec.xbar
    n = spec.C.dim

    def unpack(flat):
        A = flat[:sizes[0]].reshape(shapes[0])
        B = flat[sizes[0]:].reshape(shapes[1]) if sep else None
        return A, B

    def nearest(flat, anchor):
        A, B = unpack(flat)
        if sep:
            res = nearest_solution(A, spec.C, spec.Q, (anchor[:n], anchor[n:]), B=B,
                                   tol=cfg.solve_tol, max_iters=cfg.max_iters)
            return res, np.concatenate([res.x, res.y])
        res = nearest_solution(A, spec.C, spec.Q, anchor, tol=cfg.solve_tol,
                               max_iters=cfg.max_iters)
        return res, res.x

    dim = ref.shape[0]
    draws = []
    for i in range(cfg.samples_per_radius):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, i]))
        draws.append((_unit_ball_sample(rng, dim), _unit_ball_sample(rng, dim)))

    stats = []
    for r in cfg.radii:
        nums, dens = [], []
        failures = skipped = 0
        for u_prime, u in draws:
            P_prime = ref + r * u_prime
            P = ref + r * u
            first, s_prime = nearest(P_prime, ref_point)
            if not first.converged:
                failures += 1
                continue
            if np.linalg.norm(s_prime - ref_point) > cfg.neighborhood:
                skipped += 1
                continue
            second, _ = nearest(P, s_prime)
            if not second.converged:
                failures += 1
                continue
            den = float(np.linalg.norm(P_prime - P))
            if den == 0.0:
                skipped += 1
                continue
            nums.append(second.distance)
            dens.append(den)
        ratios = [a / b for a, b in zip(nums, dens)]
        stats.append(RadiusStats(
            radius=r,
            max_ratio=max(ratios, default=0.0),
            mean_ratio=float(np.mean(ratios)) if ratios else 0.0,
            failures=failures,
            skipped=skipped,
            numerators=nums,
            denominators=dens,
        ))
    max_ratios = [s.max_ratio for s in stats]
    return ProbeReport(
        per_radius=stats,
        modulus_estimate=max(max_ratios, default=0.0),
        diverging=is_diverging(max_ratios),
        config=cfg,
    )
