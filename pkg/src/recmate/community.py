"""Community energy model: solar producers, pooled storage, and the hourly
greedy dispatch that determines how much production is consumed locally.

Shared energy = community production consumed within the community in the
same hour, either directly or via storage discharge. Dispatch is myopic:
direct use first, then charge/discharge, then grid export/import. Round-trip
efficiency is split sqrt(eta) per leg.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass

import numpy as np


class CommunityError(Exception):
    """Base class for community-model failures."""


class SocOutOfRange(CommunityError):
    pass


class HorizonMismatch(CommunityError):
    pass


class MissingStartDate(CommunityError):
    """A month-resolved production profile needs a calendar anchor."""


@dataclass(frozen=True)
class ProducerSpec:
    """Solar producer: peak power, average hourly production, and storage.

    ``avg_profile`` has 24 entries (mean kWh per hour of day) or 288 entries
    (month x hour cells, index (month-1)*24 + hour). No hour may produce
    more than ``p_max`` kW for one hour.
    """

    producer_id: str
    p_max: float
    avg_profile: tuple[float, ...]
    storage_capacity: float
    storage_efficiency: float = 0.9
    storage_power_limit: float | None = None

    def __post_init__(self):
        if self.p_max <= 0:
            raise ValueError("p_max must be > 0")
        if len(self.avg_profile) not in (24, 288):
            raise ValueError(f"avg_profile must have 24 or 288 entries, got {len(self.avg_profile)}")
        for v in self.avg_profile:
            if not (0.0 <= v <= self.p_max * 1.0 + 1e-12) or not math.isfinite(v):
                raise ValueError(f"profile value {v} outside [0, p_max*1h]")
        if self.storage_capacity < 0:
            raise ValueError("storage_capacity must be >= 0")
        if not (0.0 < self.storage_efficiency <= 1.0):
            raise ValueError("storage_efficiency must be in (0, 1]")
        if self.storage_power_limit is None:
            # default: full charge/discharge in 2 hours
            object.__setattr__(self, "storage_power_limit", self.storage_capacity / 2.0)
        if self.storage_power_limit < 0:
            raise ValueError("storage_power_limit must be >= 0")


@dataclass(frozen=True)
class Member:
    consumer_id: str
    series: tuple[float, ...]

    def __post_init__(self):
        for v in self.series:
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"member {self.consumer_id!r} has invalid consumption {v}")


@dataclass(frozen=True)
class CommunityState:
    """Admitted members plus producers over a fixed hourly horizon.

    ``start`` anchors hour 0 to a calendar date; it is required only when a
    producer carries a 288-length month-resolved profile, and it defines the
    weekday structure used when members are re-profiled for clustering.
    """

    members: tuple[Member, ...]
    producers: tuple[ProducerSpec, ...]
    horizon_hours: int
    initial_soc: float = 0.0
    start: dt.date | None = None

    def __post_init__(self):
        if self.horizon_hours < 1:
            raise ValueError("horizon_hours must be >= 1")
        cap = sum(p.storage_capacity for p in self.producers)
        if not (0.0 <= self.initial_soc <= cap + 1e-12):
            raise ValueError(f"initial_soc {self.initial_soc} outside [0, {cap}]")

    def total_storage_capacity(self) -> float:
        return sum(p.storage_capacity for p in self.producers)


@dataclass(frozen=True)
class HourlyFlow:
    production: float
    consumption: float
    direct_use: float
    charge: float
    discharge: float
    soc_end: float
    shared: float
    exported: float
    imported: float


@dataclass(frozen=True)
class DispatchResult:
    direct_use: float
    charge: float
    discharge: float
    exported: float
    imported: float
    soc_next: float
    shared: float
    soc_production_next: float


@dataclass(frozen=True)
class SharingReport:
    total_production: float
    total_consumption: float
    shared_energy: float
    exported: float
    imported: float
    self_consumption_ratio: float
    self_sufficiency: float
    hourly_trace: tuple[HourlyFlow, ...]


def expand_production(
    producers: tuple[ProducerSpec, ...] | list[ProducerSpec],
    horizon_hours: int,
    start: dt.date | None = None,
) -> np.ndarray:
    """Tile producer average profiles over the horizon and sum them.

    24-length profiles repeat daily. 288-length profiles pick the
    (month, hour) cell of the calendar hour, which requires ``start``.
    """
    if horizon_hours < 1:
        raise ValueError("horizon_hours must be >= 1")
    production = np.zeros(horizon_hours)
    hours = np.arange(horizon_hours)
    for producer in producers:
        profile = np.asarray(producer.avg_profile, dtype=float)
        if len(profile) == 24:
            production += profile[hours % 24]
        else:
            if start is None:
                raise MissingStartDate(f"producer {producer.producer_id!r} has a month-resolved profile but no start date was given")
            t0 = dt.datetime(start.year, start.month, start.day)
            for t in range(horizon_hours):
                ts = t0 + dt.timedelta(hours=t)
                production[t] += profile[(ts.month - 1) * 24 + ts.hour]
    return production


def dispatch_step(
    soc: float,
    capacity: float,
    efficiency: float,
    power_limit: float,
    production_t: float,
    consumption_t: float,
    soc_production: float | None = None,
) -> DispatchResult:
    """Greedy self-consumption dispatch for one hour.

    Direct use covers min(production, consumption). Surplus charges the
    battery up to the power limit and the remaining headroom; deficit is
    served from storage under the same power limit. Whatever is left is
    exported or imported. Charging stores charge*sqrt(eta); discharging
    withdraws delivered/sqrt(eta).

    ``soc_production`` is the part of the stored energy that came from
    community production within the accounting horizon; only discharge
    drawn from it counts as shared, which keeps shared energy bounded by
    total production even when the battery starts pre-charged. When the
    whole store is production-sourced (the default), shared is simply
    direct_use + discharge.
    """
    if not (0.0 <= soc <= capacity):
        raise SocOutOfRange(f"soc {soc} outside [0, {capacity}]")
    for name, v in (("production", production_t), ("consumption", consumption_t)):
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"{name} must be finite and >= 0, got {v}")
    if soc_production is None:
        soc_production = soc
    soc_production = min(soc_production, soc)

    sqrt_eta = math.sqrt(efficiency)
    direct_use = min(production_t, consumption_t)
    surplus = production_t - direct_use
    deficit = consumption_t - direct_use

    charge = min(surplus, power_limit, (capacity - soc) / sqrt_eta)
    discharge = min(deficit, power_limit, soc * sqrt_eta)
    exported = surplus - charge
    imported = deficit - discharge

    withdrawal = discharge / sqrt_eta  # energy leaving the store
    production_withdrawal = min(withdrawal, soc_production)
    shared_discharge = production_withdrawal * sqrt_eta

    soc_next = soc + charge * sqrt_eta - withdrawal
    soc_next = min(max(soc_next, 0.0), capacity)  # absorb float rounding at the bounds
    soc_production_next = soc_production + charge * sqrt_eta - production_withdrawal
    soc_production_next = min(max(soc_production_next, 0.0), soc_next)

    return DispatchResult(
        direct_use=direct_use,
        charge=charge,
        discharge=discharge,
        exported=exported,
        imported=imported,
        soc_next=soc_next,
        shared=direct_use + shared_discharge,
        soc_production_next=soc_production_next,
    )


def _pooled_storage(producers: tuple[ProducerSpec, ...]) -> tuple[float, float, float]:
    """Aggregate all producer batteries into one equivalent unit.

    Capacity and power limits add; efficiency is the capacity-weighted mean
    (1.0 when there is no storage at all).
    """
    capacity = sum(p.storage_capacity for p in producers)
    power_limit = sum(p.storage_power_limit for p in producers)
    if capacity > 0:
        efficiency = sum(p.storage_efficiency * p.storage_capacity for p in producers) / capacity
    else:
        efficiency = 1.0
    return capacity, efficiency, power_limit


def simulate(state: CommunityState) -> SharingReport:
    """Fold the hourly dispatch over the horizon and aggregate the totals.

    Members are pooled into one community load. Ratios are defined as 0
    when their denominator is 0.
    """
    horizon = state.horizon_hours
    for member in state.members:
        if len(member.series) != horizon:
            raise HorizonMismatch(f"member {member.consumer_id!r} series has {len(member.series)} hours, horizon is {horizon}")

    production = expand_production(state.producers, horizon, state.start)
    consumption = np.zeros(horizon)
    for member in state.members:
        consumption += np.asarray(member.series, dtype=float)

    capacity, efficiency, power_limit = _pooled_storage(state.producers)
    soc = float(state.initial_soc)
    soc_production = 0.0  # the initial endowment was not produced this horizon
    trace: list[HourlyFlow] = []
    for t in range(horizon):
        step = dispatch_step(soc, capacity, efficiency, power_limit, float(production[t]), float(consumption[t]), soc_production)
        trace.append(
            HourlyFlow(
                production=float(production[t]),
                consumption=float(consumption[t]),
                direct_use=step.direct_use,
                charge=step.charge,
                discharge=step.discharge,
                soc_end=step.soc_next,
                shared=step.shared,
                exported=step.exported,
                imported=step.imported,
            )
        )
        soc = step.soc_next
        soc_production = step.soc_production_next

    total_production = float(production.sum())
    total_consumption = float(consumption.sum())
    shared = float(sum(h.shared for h in trace))
    exported = float(sum(h.exported for h in trace))
    imported = float(sum(h.imported for h in trace))
    return SharingReport(
        total_production=total_production,
        total_consumption=total_consumption,
        shared_energy=shared,
        exported=exported,
        imported=imported,
        self_consumption_ratio=shared / total_production if total_production > 0 else 0.0,
        self_sufficiency=shared / total_consumption if total_consumption > 0 else 0.0,
        hourly_trace=tuple(trace),
    )


def daily_average_traces(report: SharingReport) -> tuple[list[float], list[float]]:
    """Mean production and consumption per hour of day, for display."""
    prod = np.zeros(24)
    cons = np.zeros(24)
    counts = np.zeros(24)
    for t, flow in enumerate(report.hourly_trace):
        prod[t % 24] += flow.production
        cons[t % 24] += flow.consumption
        counts[t % 24] += 1
    counts = np.maximum(counts, 1)
    return list(prod / counts), list(cons / counts)


# --- serialization -----------------------------------------------------------

TRACE_CSV_HEADER = "t,production,consumption,direct_use,charge,discharge,soc_end,shared,exported,imported"


def producer_to_dict(p: ProducerSpec) -> dict:
    return {
        "producer_id": p.producer_id,
        "p_max": p.p_max,
        "avg_profile": list(p.avg_profile),
        "storage_capacity": p.storage_capacity,
        "storage_efficiency": p.storage_efficiency,
        "storage_power_limit": p.storage_power_limit,
    }


def producer_from_dict(doc: dict) -> ProducerSpec:
    return ProducerSpec(
        producer_id=str(doc["producer_id"]),
        p_max=float(doc["p_max"]),
        avg_profile=tuple(float(v) for v in doc["avg_profile"]),
        storage_capacity=float(doc["storage_capacity"]),
        storage_efficiency=float(doc.get("storage_efficiency", 0.9)),
        storage_power_limit=None if doc.get("storage_power_limit") is None else float(doc["storage_power_limit"]),
    )


def community_to_dict(state: CommunityState) -> dict:
    doc = {
        "members": [{"consumer_id": m.consumer_id, "series": list(m.series)} for m in state.members],
        "producers": [producer_to_dict(p) for p in state.producers],
        "horizon_hours": state.horizon_hours,
        "initial_soc": state.initial_soc,
    }
    if state.start is not None:
        doc["start"] = state.start.isoformat()
    return doc


def community_from_dict(doc: dict) -> CommunityState:
    start = doc.get("start")
    return CommunityState(
        members=tuple(Member(str(m["consumer_id"]), tuple(float(v) for v in m["series"])) for m in doc["members"]),
        producers=tuple(producer_from_dict(p) for p in doc["producers"]),
        horizon_hours=int(doc["horizon_hours"]),
        initial_soc=float(doc.get("initial_soc", 0.0)),
        start=dt.date.fromisoformat(start) if start else None,
    )


def report_summary_dict(report: SharingReport) -> dict:
    return {
        "total_production": report.total_production,
        "total_consumption": report.total_consumption,
        "shared_energy": report.shared_energy,
        "exported": report.exported,
        "imported": report.imported,
        "self_consumption_ratio": report.self_consumption_ratio,
        "self_sufficiency": report.self_sufficiency,
    }


def report_to_dict(report: SharingReport) -> dict:
    doc = report_summary_dict(report)
    doc["hourly_trace"] = [
        {
            "production": h.production,
            "consumption": h.consumption,
            "direct_use": h.direct_use,
            "charge": h.charge,
            "discharge": h.discharge,
            "soc_end": h.soc_end,
            "shared": h.shared,
            "exported": h.exported,
            "imported": h.imported,
        }
        for h in report.hourly_trace
    ]
    return doc


def trace_to_csv(report: SharingReport) -> str:
    rows = [TRACE_CSV_HEADER]
    for t, h in enumerate(report.hourly_trace):
        rows.append(
            f"{t},{h.production!r},{h.consumption!r},{h.direct_use!r},{h.charge!r},"
            f"{h.discharge!r},{h.soc_end!r},{h.shared!r},{h.exported!r},{h.imported!r}"
        )
    return "\n".join(rows) + "\n"
