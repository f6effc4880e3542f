"""Seeded synthetic data: consumer archetypes and solar producers.

Stands in for the unavailable monitoring data so clustering and admission
scoring stay testable at desk scale. Three archetypes with distinct daily
peaks and weekday/weekend rhythm; producers follow a daylight sine bell.
"""

from __future__ import annotations

import datetime as dt
import enum
import math
from dataclasses import dataclass

import numpy as np

from .community import ProducerSpec
from .profiles import ConsumptionRecord, ConsumerDataset


class Archetype(enum.Enum):
    FAMILY_NO_CHILDREN = "FAMILY_NO_CHILDREN"
    FAMILY_WITH_CHILDREN = "FAMILY_WITH_CHILDREN"
    COMMERCIAL = "COMMERCIAL"


@dataclass(frozen=True)
class ArchetypeParams:
    archetype: Archetype
    base_load: float
    peak_hours: frozenset[int]
    peak_multiplier: float
    weekend_factor: float
    noise_sigma: float
    seed: int

    def __post_init__(self):
        if self.base_load <= 0:
            raise ValueError("base_load must be > 0")
        if not (0.0 <= self.noise_sigma < 1.0):
            raise ValueError("noise_sigma must be in [0, 1)")
        if self.peak_multiplier < 1.0:
            raise ValueError("peak_multiplier must be >= 1")
        if self.weekend_factor <= 0:
            raise ValueError("weekend_factor must be > 0")


_ARCHETYPE_DEFAULTS = {
    Archetype.FAMILY_NO_CHILDREN: dict(base_load=0.25, peak_hours=frozenset({7, 8, 19, 20}), peak_multiplier=3.0, weekend_factor=1.2),
    Archetype.FAMILY_WITH_CHILDREN: dict(base_load=0.35, peak_hours=frozenset({7, 8, 13, 14, 18, 19, 20, 21}), peak_multiplier=2.6, weekend_factor=1.4),
    Archetype.COMMERCIAL: dict(base_load=0.9, peak_hours=frozenset(range(9, 18)), peak_multiplier=4.0, weekend_factor=0.2),
}


def default_params(archetype: Archetype, seed: int, noise_sigma: float = 0.1) -> ArchetypeParams:
    return ArchetypeParams(archetype=archetype, noise_sigma=noise_sigma, seed=seed, **_ARCHETYPE_DEFAULTS[archetype])


def gen_consumer(
    params: ArchetypeParams,
    days: int,
    start: dt.date = dt.date(2023, 1, 2),
    consumer_id: str | None = None,
) -> ConsumerDataset:
    """Generate ``days`` full days of hourly readings starting at ``start``.

    kwh = base * peak_multiplier[hour] * weekend_factor[day] * lognormal(0, sigma),
    sampled chronologically so a given seed always yields the same dataset.
    """
    if days < 1:
        raise ValueError("days must be >= 1")
    rng = np.random.default_rng(params.seed)
    cid = consumer_id or f"{params.archetype.value.lower()}-{params.seed}"

    records = []
    for d in range(days):
        date = start + dt.timedelta(days=d)
        weekend = date.weekday() >= 5
        for hour in range(24):
            kwh = params.base_load
            if hour in params.peak_hours:
                kwh *= params.peak_multiplier
            if weekend:
                kwh *= params.weekend_factor
            kwh *= float(rng.lognormal(0.0, params.noise_sigma))
            records.append(ConsumptionRecord(date.year, date.month, date.day, hour, kwh))
    return ConsumerDataset(cid, tuple(records), 1.0)


# Discrete sum of the daylight bell sin(pi*(h-6)/12) over h=6..18,
# i.e. cot(pi/24); frozen as the golden value for profile totals.
PRODUCER_PROFILE_SUM = 7.59575411272515


def gen_producer(p_max: float, seed: int = 0) -> ProducerSpec:
    """Solar producer with a daylight sine-bell profile peaking at noon.

    avg_profile[h] = p_max * max(0, sin(pi*(h-6)/12)) for h in [6, 18],
    zero at night. Storage defaults: capacity 2*p_max kWh, efficiency 0.9,
    power limit p_max kW.
    """
    if p_max <= 0:
        raise ValueError("p_max must be > 0")
    profile = tuple(
        p_max * max(0.0, math.sin(math.pi * (h - 6) / 12)) if 6 <= h <= 18 else 0.0
        for h in range(24)
    )
    return ProducerSpec(
        producer_id=f"pv-{p_max:g}kw-{seed}",
        p_max=p_max,
        avg_profile=profile,
        storage_capacity=2.0 * p_max,
        storage_efficiency=0.9,
        storage_power_limit=p_max,
    )


# Default corpus mirrors the monitored setup: 10 consumers split 4/3/3
# across the archetypes.
CORPUS_MIX = (
    (Archetype.FAMILY_NO_CHILDREN, 4),
    (Archetype.FAMILY_WITH_CHILDREN, 3),
    (Archetype.COMMERCIAL, 3),
)


def gen_corpus(
    seed: int = 7,
    days: int = 60,
    noise_sigma: float = 0.1,
    start: dt.date = dt.date(2023, 1, 2),
) -> list[tuple[ConsumerDataset, Archetype]]:
    """The standard 10-consumer test corpus (4/3/3 archetype mix).

    Consumer ``i`` draws from seed ``seed*1000 + i`` so streams are
    independent while the whole corpus stays reproducible from one seed.
    """
    corpus = []
    index = 0
    for archetype, count in CORPUS_MIX:
        for n in range(count):
            consumer_seed = seed * 1000 + index
            params = default_params(archetype, consumer_seed, noise_sigma)
            cid = f"{archetype.value.lower()}_{n + 1:02d}"
            corpus.append((gen_consumer(params, days, start, consumer_id=cid), archetype))
            index += 1
    return corpus
