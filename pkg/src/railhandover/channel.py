"""Received-signal-strength models for each transmission scheme.

A link's RSS in dBm is transmit power minus log-distance path loss minus
a zero-mean Gaussian shadow-fading term; shadowing draws are independent
across links, cells, antennas and measurement positions. Per scheme a
train antenna sees one RSS random variable per cell:

* PROPOSED / DAS_SINGLE: the cell powers its best RAU, so the cell RSS
  is the maximum of the per-RAU Gaussians (full power each).
* DAS_BLANKET: every RAU transmits at tx_power / n_raus; the cell RSS is
  the dB value of the linear power sum, approximated by a single
  Gaussian through linear-domain moment matching.
* TRADITIONAL: a single base-station link at full power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special as _sci_special

from .scenario import (
    AntennaId,
    CellId,
    Scenario,
    Scheme,
    SelectionRule,
    antenna_x,
    bs_position,
    link_distance,
    rau_positions,
)
from .statfun import (
    Quadrature,
    integrate,
    lognormal_sum_approx,
    std_normal_cdf,
    std_normal_pdf,
)

_SELECTION_SCHEMES = (Scheme.PROPOSED, Scheme.DAS_SINGLE)


def path_loss(sc: Scenario, distance: float) -> float:
    """Log-distance path loss in dB at the given link distance in meters."""
    if not (distance > 0.0):
        raise ValueError(f"path loss requires distance > 0, got {distance!r}")
    return sc.pathloss_a + 10.0 * sc.pathloss_gamma * math.log10(distance)


def per_rau_power(sc: Scenario) -> float:
    """Transmit power per RAU in dBm under the scenario's scheme."""
    if sc.scheme is Scheme.DAS_BLANKET:
        return sc.tx_power - 10.0 * math.log10(sc.n_raus)
    return sc.tx_power


@dataclass(frozen=True)
class LinkStat:
    """Gaussian RSS statistics of one link: mean dBm, shadow sigma dB."""

    mu: float
    sigma: float

    def __post_init__(self) -> None:
        if not (self.sigma > 0.0):
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not math.isfinite(self.mu):
            raise ValueError(f"mu must be finite, got {self.mu}")


class DistributionKind(Enum):
    MAX_OF_GAUSSIANS = "max-of-gaussians"
    SINGLE_GAUSSIAN = "single-gaussian"


@dataclass(frozen=True)
class RssDistribution:
    """RSS distribution of one (antenna, cell) pair at one position."""

    kind: DistributionKind
    components: tuple[LinkStat, ...]

    def __post_init__(self) -> None:
        if len(self.components) == 0:
            raise ValueError("a distribution needs at least one component")
        if self.kind is DistributionKind.SINGLE_GAUSSIAN and len(self.components) != 1:
            raise ValueError("single-gaussian distribution must have exactly one component")


def link_stat(sc: Scenario, front_x: float, rau_index: int, antenna: AntennaId,
              cell: CellId) -> LinkStat:
    """RSS statistics of the link from one RAU to one train antenna."""
    if not (1 <= rau_index <= sc.n_raus):
        raise ValueError(f"rau_index must be in 1..{sc.n_raus}, got {rau_index}")
    node = rau_positions(sc, cell)[rau_index - 1]
    d = link_distance(antenna_x(sc, front_x, antenna), node)
    return LinkStat(per_rau_power(sc) - path_loss(sc, d), sc.rau_sigma(rau_index))


def _bs_link_stat(sc: Scenario, front_x: float, antenna: AntennaId, cell: CellId) -> LinkStat:
    node = bs_position(sc, cell)
    d = link_distance(antenna_x(sc, front_x, antenna), node)
    return LinkStat(sc.tx_power - path_loss(sc, d), sc.shadow_sigma)


def rss_distribution(sc: Scenario, front_x: float, antenna: AntennaId,
                     cell: CellId) -> RssDistribution:
    """Per-cell RSS distribution seen by a train antenna at front_x."""
    if sc.scheme is Scheme.TRADITIONAL:
        return RssDistribution(DistributionKind.SINGLE_GAUSSIAN,
                               (_bs_link_stat(sc, front_x, antenna, cell),))

    links = tuple(link_stat(sc, front_x, n, antenna, cell)
                  for n in range(1, sc.n_raus + 1))
    if sc.scheme is Scheme.DAS_BLANKET:
        mu, sigma = lognormal_sum_approx([l.mu for l in links], [l.sigma for l in links])
        return RssDistribution(DistributionKind.SINGLE_GAUSSIAN, (LinkStat(mu, sigma),))
    if sc.selection is SelectionRule.MEAN_PATHLOSS:
        best = max(links, key=lambda l: l.mu)
        return RssDistribution(DistributionKind.SINGLE_GAUSSIAN, (best,))
    return RssDistribution(DistributionKind.MAX_OF_GAUSSIANS, links)


def trigger_pair(sc: Scenario, front_x: float, antenna: AntennaId) -> tuple[LinkStat, LinkStat]:
    """The (serving, target) Gaussian comparands of the handover rule.

    Under RAU selection, handover compares the serving cell's last RAU
    against the target cell's first RAU (the links that face each other
    across the cell boundary, and the RAU the target powers during a
    handover). Blanket and traditional schemes compare their per-cell
    RSS variables directly.
    """
    if sc.scheme in _SELECTION_SCHEMES:
        serving = link_stat(sc, front_x, sc.n_raus, antenna, CellId.SERVING)
        target = link_stat(sc, front_x, 1, antenna, CellId.TARGET)
        return serving, target
    serving_dist = rss_distribution(sc, front_x, antenna, CellId.SERVING)
    target_dist = rss_distribution(sc, front_x, antenna, CellId.TARGET)
    return serving_dist.components[0], target_dist.components[0]


# === Distribution evaluations ===


def cdf(dist: RssDistribution, r: float) -> float:
    """P(RSS <= r): product of the per-component Gaussian CDFs."""
    out = 1.0
    for c in dist.components:
        out *= std_normal_cdf((r - c.mu) / c.sigma)
    return out


def pdf(dist: RssDistribution, r: float) -> float:
    """Density of the distribution at r.

    For the max of independent Gaussians: sum over components of that
    component's density times the probability every other component is
    below r.
    """
    total = 0.0
    for n, cn in enumerate(dist.components):
        term = std_normal_pdf((r - cn.mu) / cn.sigma) / cn.sigma
        for j, cj in enumerate(dist.components):
            if j != n:
                term *= std_normal_cdf((r - cj.mu) / cj.sigma)
        total += term
    return total


def cdf_array(dist: RssDistribution, r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    out = np.ones_like(r)
    for c in dist.components:
        out *= _sci_special.ndtr((r - c.mu) / c.sigma)
    return out


def support(dists: "RssDistribution | list[RssDistribution]",
            n_sigma: float = 10.0) -> tuple[float, float]:
    """Interval outside which the distributions' mass is negligible."""
    if isinstance(dists, RssDistribution):
        dists = [dists]
    comps = [c for d in dists for c in d.components]
    sig = max(c.sigma for c in comps)
    return (min(c.mu for c in comps) - n_sigma * sig,
            max(c.mu for c in comps) + n_sigma * sig)


def distribution_mean(dist: RssDistribution, quadrature: Quadrature | None = None) -> float:
    """Mean RSS in dBm; numeric for the max distribution, exact otherwise."""
    if len(dist.components) == 1:
        return dist.components[0].mu
    lo, hi = support(dist)
    return integrate(lambda r: r * pdf(dist, r), lo, hi, quadrature).require()


# === Sampling ===


def sample_rss(dist: RssDistribution, rng: np.random.Generator) -> float:
    """One RSS draw: an independent Gaussian per component, then the max."""
    draws = [c.mu + c.sigma * rng.standard_normal() for c in dist.components]
    return max(draws)


def sample_rss_block(dist: RssDistribution, rng: np.random.Generator,
                     n: int) -> np.ndarray:
    """n independent RSS draws as an array (vectorized form of sample_rss)."""
    k = len(dist.components)
    z = rng.standard_normal((n, k))
    mus = np.array([c.mu for c in dist.components])
    sigmas = np.array([c.sigma for c in dist.components])
    return np.max(mus + sigmas * z, axis=1)
