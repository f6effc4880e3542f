"""Production expansion, battery dispatch, and shared-energy simulation."""

import datetime as dt
import json

import numpy as np
import pytest

from recmate.community import (
    CommunityState,
    HorizonMismatch,
    Member,
    MissingStartDate,
    ProducerSpec,
    SocOutOfRange,
    TRACE_CSV_HEADER,
    community_from_dict,
    community_to_dict,
    dispatch_step,
    expand_production,
    report_to_dict,
    simulate,
    trace_to_csv,
)


def producer(profile, capacity=0.0, efficiency=1.0, power_limit=None, p_max=None):
    profile = list(profile)
    peak = p_max if p_max is not None else max(max(profile), 1e-9)
    return ProducerSpec(
        producer_id="p",
        p_max=peak,
        avg_profile=tuple(profile),
        storage_capacity=capacity,
        storage_efficiency=efficiency,
        storage_power_limit=power_limit,
    )


def random_state(rng, horizon=None):
    """Random but valid community for property tests."""
    horizon = horizon or int(rng.integers(24, 73))
    producers = []
    for _ in range(int(rng.integers(1, 4))):
        p_max = float(rng.uniform(0.5, 5.0))
        profile = rng.uniform(0, p_max, size=24)
        capacity = float(rng.uniform(0, 3) * p_max) if rng.random() < 0.8 else 0.0
        producers.append(
            ProducerSpec(
                producer_id=f"p{len(producers)}",
                p_max=p_max,
                avg_profile=tuple(float(v) for v in profile),
                storage_capacity=capacity,
                storage_efficiency=float(rng.uniform(0.5, 1.0)),
                storage_power_limit=float(rng.uniform(0, 2) * p_max),
            )
        )
    members = tuple(
        Member(f"m{i}", tuple(float(v) for v in rng.uniform(0, 2, size=horizon)))
        for i in range(int(rng.integers(0, 4)))
    )
    capacity = sum(p.storage_capacity for p in producers)
    return CommunityState(
        members=members,
        producers=tuple(producers),
        horizon_hours=horizon,
        initial_soc=float(rng.uniform(0, capacity)) if capacity > 0 else 0.0,
    )


class TestExpandProduction:
    def test_no_sun(self):
        p = producer([0.0] * 24, p_max=1.0)
        assert expand_production([p], 48).tolist() == [0.0] * 48

    def test_two_identical_producers_double(self):
        profile = [0.0] * 12 + [1.5, 2.0, 1.5] + [0.0] * 9
        one = expand_production([producer(profile)], 72)
        two = expand_production([producer(profile), producer(profile)], 72)
        assert two.tolist() == (2 * one).tolist()

    def test_periodic_tiling(self):
        profile = [0.0] * 24
        profile[12] = 3.0
        series = expand_production([producer(profile)], 48)
        expected = np.zeros(48)
        expected[12] = expected[36] = 3.0
        assert series.tolist() == expected.tolist()

    def test_month_aware_profile_needs_start(self):
        profile = [0.0] * 288
        profile[(1 - 1) * 24 + 12] = 1.0  # January noon only
        p = ProducerSpec("p", 1.0, tuple(profile), 0.0)
        with pytest.raises(MissingStartDate):
            expand_production([p], 24)
        jan = expand_production([p], 24, start=dt.date(2023, 1, 31))
        assert jan[12] == 1.0
        feb = expand_production([p], 48, start=dt.date(2023, 1, 31))
        assert feb[12] == 1.0 and feb[36] == 0.0  # second day is February

    def test_profile_bounded_by_p_max(self):
        with pytest.raises(ValueError):
            ProducerSpec("p", 1.0, tuple([2.0] + [0.0] * 23), 0.0)


class TestDispatchStep:
    def test_nothing_to_share(self):
        step = dispatch_step(soc=0.0, capacity=2.0, efficiency=1.0, power_limit=1.0, production_t=0.0, consumption_t=1.0)
        assert step.direct_use == 0.0
        assert step.discharge == 0.0
        assert step.imported == 1.0
        assert step.shared == 0.0

    def test_exact_match(self):
        step = dispatch_step(soc=1.0, capacity=2.0, efficiency=1.0, power_limit=1.0, production_t=1.0, consumption_t=1.0)
        assert step.direct_use == 1.0
        assert step.shared == 1.0
        assert step.soc_next == 1.0

    def test_surplus_charges_then_exports(self):
        step = dispatch_step(soc=0.0, capacity=1.0, efficiency=1.0, power_limit=100.0, production_t=3.0, consumption_t=1.0)
        assert step.direct_use == 1.0
        assert step.charge == 1.0
        assert step.exported == 1.0
        assert step.soc_next == 1.0
        assert step.shared == 1.0

    def test_split_efficiency_model(self):
        eta = 0.81  # sqrt(eta) = 0.9 per leg
        charge_step = dispatch_step(soc=0.0, capacity=10.0, efficiency=eta, power_limit=10.0, production_t=2.0, consumption_t=0.0)
        assert charge_step.charge == 2.0
        assert charge_step.soc_next == pytest.approx(1.8)
        discharge_step = dispatch_step(soc=1.8, capacity=10.0, efficiency=eta, power_limit=10.0, production_t=0.0, consumption_t=5.0)
        assert discharge_step.discharge == pytest.approx(1.8 * 0.9)
        assert discharge_step.soc_next == pytest.approx(0.0)

    def test_power_limit_caps_both_directions(self):
        step = dispatch_step(soc=0.0, capacity=10.0, efficiency=1.0, power_limit=0.5, production_t=3.0, consumption_t=0.0)
        assert step.charge == 0.5
        assert step.exported == 2.5
        step = dispatch_step(soc=10.0, capacity=10.0, efficiency=1.0, power_limit=0.5, production_t=0.0, consumption_t=3.0)
        assert step.discharge == 0.5
        assert step.imported == 2.5

    def test_soc_out_of_range(self):
        with pytest.raises(SocOutOfRange):
            dispatch_step(soc=3.0, capacity=2.0, efficiency=1.0, power_limit=1.0, production_t=0.0, consumption_t=0.0)


class TestSimulate:
    def golden_state(self):
        profile = [0.0] * 24
        profile[0] = 2.0
        pv = producer(profile, capacity=2.0, efficiency=1.0)  # power limit defaults to 1.0
        member = Member("m", (1.0, 1.0, 1.0))
        return CommunityState(members=(member,), producers=(pv,), horizon_hours=3)

    def test_golden_three_hour_trace(self):
        report = simulate(self.golden_state())
        assert report.shared_energy == 2.0
        assert report.total_production == 2.0
        assert report.total_consumption == 3.0
        assert report.self_consumption_ratio == 1.0
        assert report.self_sufficiency == pytest.approx(2.0 / 3.0)

        h0, h1, h2 = report.hourly_trace
        assert (h0.direct_use, h0.charge, h0.soc_end, h0.shared, h0.exported, h0.imported) == (1.0, 1.0, 1.0, 1.0, 0.0, 0.0)
        assert (h1.direct_use, h1.discharge, h1.soc_end, h1.shared, h1.imported) == (0.0, 1.0, 0.0, 1.0, 0.0)
        assert (h2.discharge, h2.imported, h2.shared) == (0.0, 1.0, 0.0)

    def test_zero_producers(self):
        member = Member("m", tuple([0.5] * 24))
        state = CommunityState(members=(member,), producers=(), horizon_hours=24)
        report = simulate(state)
        assert report.shared_energy == 0.0
        assert report.imported == pytest.approx(12.0)
        assert report.self_consumption_ratio == 0.0

    def test_perfect_match_without_storage(self):
        profile = [0.5] * 24
        pv = producer(profile, capacity=0.0)
        member = Member("m", tuple([0.5] * 48))
        state = CommunityState(members=(member,), producers=(pv,), horizon_hours=48)
        report = simulate(state)
        assert report.shared_energy == pytest.approx(report.total_production)
        assert report.exported == 0.0
        assert report.imported == 0.0

    def test_horizon_mismatch(self):
        state = self.golden_state()
        bad = CommunityState(
            members=(Member("m", (1.0, 1.0)),),
            producers=state.producers,
            horizon_hours=3,
        )
        with pytest.raises(HorizonMismatch):
            simulate(bad)

    def test_conservation_and_bounds_randomized(self):
        rng = np.random.default_rng(123)
        for trial in range(150):
            state = random_state(rng)
            capacity = state.total_storage_capacity()
            report = simulate(state)
            for flow in report.hourly_trace:
                assert flow.production == pytest.approx(flow.direct_use + flow.charge + flow.exported, abs=1e-9)
                assert flow.consumption == pytest.approx(flow.direct_use + flow.discharge + flow.imported, abs=1e-9)
                assert -1e-9 <= flow.soc_end <= capacity + 1e-9
            assert report.shared_energy <= min(report.total_production, report.total_consumption) + 1e-9

    def test_load_monotonicity_randomized(self):
        rng = np.random.default_rng(321)
        for trial in range(60):
            state = random_state(rng)
            if not state.members:
                continue
            base = simulate(state).shared_energy
            bump = tuple(float(v) for v in rng.uniform(0, 1, size=state.horizon_hours))
            target = rng.integers(0, len(state.members))
            boosted = []
            for i, m in enumerate(state.members):
                if i == target:
                    boosted.append(Member(m.consumer_id, tuple(a + b for a, b in zip(m.series, bump))))
                else:
                    boosted.append(m)
            state2 = CommunityState(tuple(boosted), state.producers, state.horizon_hours, state.initial_soc)
            assert simulate(state2).shared_energy >= base - 1e-9

    def test_storage_never_hurts_at_unit_efficiency(self):
        rng = np.random.default_rng(77)
        for trial in range(40):
            horizon = 48
            p_max = float(rng.uniform(1, 4))
            profile = tuple(float(v) for v in rng.uniform(0, p_max, size=24))
            members = (Member("m", tuple(float(v) for v in rng.uniform(0, 2, size=horizon))),)
            with_storage = CommunityState(
                members=members,
                producers=(ProducerSpec("p", p_max, profile, storage_capacity=4.0, storage_efficiency=1.0, storage_power_limit=2.0),),
                horizon_hours=horizon,
            )
            without = CommunityState(
                members=members,
                producers=(ProducerSpec("p", p_max, profile, storage_capacity=0.0, storage_efficiency=1.0, storage_power_limit=0.0),),
                horizon_hours=horizon,
            )
            assert simulate(with_storage).shared_energy >= simulate(without).shared_energy - 1e-9

    def test_simulation_is_pure(self):
        state = self.golden_state()
        assert simulate(state) == simulate(state)


class TestSerialization:
    def test_community_round_trip(self):
        profile = [0.0] * 24
        profile[12] = 1.0
        state = CommunityState(
            members=(Member("m1", tuple([0.25] * 24)),),
            producers=(producer(profile, capacity=2.0, efficiency=0.9, power_limit=1.0),),
            horizon_hours=24,
            initial_soc=0.5,
            start=dt.date(2023, 1, 2),
        )
        doc = json.loads(json.dumps(community_to_dict(state)))
        assert community_from_dict(doc) == state

    def test_report_dict_fields(self):
        report = simulate(TestSimulate().golden_state())
        doc = report_to_dict(report)
        assert set(doc) == {
            "total_production", "total_consumption", "shared_energy", "exported", "imported",
            "self_consumption_ratio", "self_sufficiency", "hourly_trace",
        }
        assert set(doc["hourly_trace"][0]) == {
            "production", "consumption", "direct_use", "charge", "discharge",
            "soc_end", "shared", "exported", "imported",
        }

    def test_trace_csv_header_and_balance(self):
        report = simulate(TestSimulate().golden_state())
        csv_text = trace_to_csv(report)
        lines = csv_text.strip().split("\n")
        assert lines[0] == TRACE_CSV_HEADER
        assert lines[0] == "t,production,consumption,direct_use,charge,discharge,soc_end,shared,exported,imported"
        assert len(lines) == 1 + 3
        first = lines[1].split(",")
        assert first[0] == "0"
        assert float(first[1]) == 2.0
