"""Building mapping: water-filling, proportional allocation, GPS joins."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import make_building, residential_table, single_class_trajectory
from vrimap.activities import Activity, N_CLASSES, STEPS_PER_DAY
from vrimap.allocation import (
    ActivityPlacementTable,
    allocate,
    allocation_weight,
    join_gps,
    largest_remainder_round,
    water_fill,
)
from vrimap.ingest import TimeLocationPath, ZoneDemographics
from vrimap.markov import TrajectoryMatrix

C02, C03, C04 = Activity.BIOLOGICAL_NEEDS, Activity.WORKING, Activity.EDUCATION
C06, C08 = Activity.PERSONAL_OBLIGATIONS, Activity.OTHER


def table_of(**class_rules) -> ActivityPlacementTable:
    shares = {a: () for a in Activity}
    for code, rules in class_rules.items():
        shares[Activity.from_code(code)] = tuple(sorted(rules.items()))
    return ActivityPlacementTable(shares)


def demo(zone_id="Z1", population=100, **shares) -> ZoneDemographics:
    return ZoneDemographics(zone_id, population, frozenset(shares.items()))


class TestWaterFill:
    def test_small_vessel_caps_first(self):
        fills = water_fill([10.0, 100.0], [60.0])
        assert np.abs(fills[0] - [10.0, 50.0]).max() < 1e-12

    def test_order_preserved(self):
        fills = water_fill([100.0, 10.0], [60.0])
        assert np.abs(fills[0] - [50.0, 10.0]).max() < 1e-12

    def test_equal_level_below_any_cap(self):
        fills = water_fill([10.0, 100.0], [14.0])
        assert np.abs(fills[0] - [7.0, 7.0]).max() < 1e-12

    def test_mass_beyond_total_capacity_caps_everything(self):
        fills = water_fill([10.0, 100.0], [500.0])
        assert np.array_equal(fills[0], [10.0, 100.0])

    def test_many_masses_vectorized(self):
        fills = water_fill([10.0, 100.0], [0.0, 14.0, 60.0, 500.0])
        assert fills.shape == (4, 2)
        assert np.array_equal(fills[0], [0.0, 0.0])
        assert np.abs(fills[2] - [10.0, 50.0]).max() < 1e-12

    @given(st.integers(0, 10**6))
    def test_conserves_and_respects_caps(self, seed):
        rng = np.random.Generator(np.random.PCG64(seed))
        caps = rng.uniform(0.0, 50.0, size=rng.integers(1, 8))
        masses = rng.uniform(0.0, caps.sum() * 1.5 + 1.0, size=5)
        fills = water_fill(caps, masses)
        assert (fills <= caps[None, :] + 1e-9).all()
        expect = np.minimum(masses, caps.sum())
        assert np.abs(fills.sum(axis=1) - expect).max() < 1e-9

    @given(st.integers(0, 10**6))
    def test_monotone_in_mass(self, seed):
        rng = np.random.Generator(np.random.PCG64(seed))
        caps = rng.uniform(0.1, 20.0, size=4)
        m = rng.uniform(0.0, caps.sum(), size=2)
        lo, hi = sorted(m)
        fills = water_fill(caps, [lo, hi])
        assert (fills[0] <= fills[1] + 1e-12).all()


class TestAllocate:
    def test_residential_proportional_to_weight(self):
        # bedrooms 3 vs 1, no vacancy: 75/25 split of every step's mass
        buildings = [
            make_building("B1", bedrooms=3.0),
            make_building("B2", bedrooms=1.0),
        ]
        traj = TrajectoryMatrix(single_class_trajectory(C02))
        occ = allocate(traj, 100.0, buildings, residential_table(C02), [demo()])
        assert np.abs(occ.counts[:, 0, C02] - 75.0).max() < 1e-9
        assert np.abs(occ.counts[:, 1, C02] - 25.0).max() < 1e-9
        assert np.abs(occ.unplaced).max() == 0.0

    def test_vacancy_discounts_weight(self):
        b = make_building("B1", bedrooms=4.0, vacancy_rate=0.5)
        assert allocation_weight(b) == 2.0

    def test_capacity_type_water_fills(self):
        buildings = [
            make_building("B1", btype="mercantile", capacity=10.0),
            make_building("B2", btype="mercantile", capacity=100.0),
        ]
        traj = TrajectoryMatrix(single_class_trajectory(C06))
        table = table_of(c06={"mercantile": 1.0})
        occ = allocate(traj, 60.0, buildings, table, [demo()])
        assert np.abs(occ.counts[:, 0, C06] - 10.0).max() < 1e-9
        assert np.abs(occ.counts[:, 1, C06] - 50.0).max() < 1e-9

    def test_overflow_reported_unplaced(self):
        buildings = [make_building("B1", btype="mercantile", capacity=10.0)]
        traj = TrajectoryMatrix(single_class_trajectory(C06))
        occ = allocate(traj, 25.0, buildings, table_of(c06={"mercantile": 1.0}), [demo()])
        assert np.abs(occ.counts[:, 0, C06] - 10.0).max() < 1e-9
        assert np.abs(occ.unplaced[:, C06] - 15.0).max() < 1e-9

    def test_unrouted_class_is_unplaced_by_design(self):
        traj = TrajectoryMatrix(single_class_trajectory(C08))
        occ = allocate(
            traj, 50.0, [make_building("B1")], residential_table(C02), [demo()]
        )
        assert np.abs(occ.unplaced[:, C08] - 50.0).max() == 0.0
        assert occ.counts.sum() == 0.0

    def test_routing_to_empty_type_is_an_error(self):
        traj = TrajectoryMatrix(single_class_trajectory(C03))
        with pytest.raises(ValueError, match="c03 routes to business"):
            allocate(
                traj,
                10.0,
                [make_building("B1")],
                table_of(c03={"business": 1.0}),
                [demo()],
            )

    def test_invalid_building_rejected(self):
        bad = make_building("B1", btype="assembly", capacity=-3.0)
        traj = TrajectoryMatrix(single_class_trajectory(C02))
        with pytest.raises(ValueError, match="invalid building B1"):
            allocate(traj, 10.0, [bad], residential_table(C02), [demo()])

    def test_education_levels_follow_demographics(self):
        buildings = [
            make_building("B1", btype="education", capacity=10.0, school_level="primary"),
            make_building("B2", btype="education", capacity=100.0, school_level="college"),
        ]
        traj = TrajectoryMatrix(single_class_trajectory(C04))
        zones = [
            demo(population=100, share_school_primary=0.03, share_school_college=0.07)
        ]
        occ = allocate(traj, 20.0, buildings, table_of(c04={"education": 1.0}), zones)
        # level shares renormalize to 0.3/0.7: primary 6, college 14
        assert np.abs(occ.counts[:, 0, C04] - 6.0).max() < 1e-9
        assert np.abs(occ.counts[:, 1, C04] - 14.0).max() < 1e-9

    def test_education_overflow_respills_to_other_levels(self):
        buildings = [
            make_building("B1", btype="education", capacity=10.0, school_level="primary"),
            make_building("B2", btype="education", capacity=100.0, school_level="college"),
        ]
        traj = TrajectoryMatrix(single_class_trajectory(C04))
        zones = [
            demo(population=100, share_school_primary=0.03, share_school_college=0.07)
        ]
        # primary level mass 15 > cap 10: the extra 5 lands in college
        occ = allocate(traj, 50.0, buildings, table_of(c04={"education": 1.0}), zones)
        assert np.abs(occ.counts[:, 0, C04] - 10.0).max() < 1e-9
        assert np.abs(occ.counts[:, 1, C04] - 40.0).max() < 1e-9

    def test_class_composition_preserved_within_type(self):
        # two classes pool into residential 50/50; per-building split keeps
        # each class's share of the pooled mass
        values = np.zeros((STEPS_PER_DAY, N_CLASSES))
        values[:, C02] = 0.5
        values[:, C06] = 0.5
        traj = TrajectoryMatrix(values)
        table = table_of(c02={"residential": 1.0}, c06={"residential": 1.0})
        buildings = [make_building("B1", bedrooms=1.0), make_building("B2", bedrooms=3.0)]
        occ = allocate(traj, 40.0, buildings, table, [demo()])
        assert np.abs(occ.counts[:, 1, C02] - 15.0).max() < 1e-9
        assert np.abs(occ.counts[:, 1, C06] - 15.0).max() < 1e-9

    def test_field_helpers(self):
        traj = TrajectoryMatrix(single_class_trajectory(C02))
        occ = allocate(traj, 10.0, [make_building("B7")], residential_table(C02), [demo()])
        assert occ.building_index("B7") == 0
        assert occ.step_total(0) == pytest.approx(10.0)
        assert occ.building_totals(0)[0] == pytest.approx(10.0)

    @given(st.integers(0, 10**6))
    def test_conservation_on_random_inventories(self, seed):
        rng = np.random.Generator(np.random.PCG64(seed))
        buildings = [
            make_building(f"R{i}", bedrooms=float(rng.integers(1, 6)),
                          vacancy_rate=float(rng.uniform(0, 0.5)))
            for i in range(rng.integers(1, 4))
        ] + [
            make_building(f"M{i}", btype="mercantile",
                          capacity=float(rng.uniform(1, 30)))
            for i in range(rng.integers(1, 4))
        ]
        values = rng.dirichlet(np.ones(N_CLASSES), size=STEPS_PER_DAY)
        traj = TrajectoryMatrix(values)
        table = table_of(
            c02={"residential": 1.0},
            c06={"mercantile": 1.0},
            c07={"residential": 0.5, "mercantile": 0.5},
        )
        population = float(rng.uniform(10, 500))
        occ = allocate(traj, population, buildings, table, [demo()])
        for t in (0, 31, 95):
            assert occ.step_total(t) == pytest.approx(population, abs=1e-6)
        caps = np.array([b.capacity for b in buildings if b.btype == "mercantile"])
        merc = [i for i, b in enumerate(buildings) if b.btype == "mercantile"]
        merc_totals = occ.counts[:, merc, :].sum(axis=2)
        assert (merc_totals <= caps[None, :] + 1e-9).all()


class TestJoinGps:
    def make_world(self):
        buildings = [
            make_building("B1", x=0.0, y=0.0),
            make_building("B2", btype="mercantile", x=50.0, y=0.0, capacity=10.0),
        ]
        values = np.zeros((STEPS_PER_DAY, N_CLASSES))
        values[:48, C02] = 0.6
        values[:48, C06] = 0.4
        values[48:, C06] = 0.7
        values[48:, C02] = 0.3
        traj = TrajectoryMatrix(values)
        table = table_of(c02={"residential": 1.0}, c06={"mercantile": 1.0})
        return buildings, traj, table

    def test_snaps_to_nearest_in_radius(self):
        buildings, traj, table = self.make_world()
        path = TimeLocationPath("A", ((0.0, 1.0, 1.0),))
        steps = join_gps([path], traj, buildings, table, radius=100.0)["A"]
        assert steps[0] == (C02, "B1")

    def test_out_of_radius_keeps_argmax_class(self):
        buildings, traj, table = self.make_world()
        path = TimeLocationPath("A", ((0.0, 500.0, 500.0),))
        steps = join_gps([path], traj, buildings, table, radius=100.0)["A"]
        assert steps[0] == (C02, None)
        assert steps[95] == (C06, None)

    def test_building_type_constrains_class(self):
        buildings, traj, table = self.make_world()
        # at the store early in the day: c02 is globally likelier but the
        # building only hosts c06
        path = TimeLocationPath("A", ((0.0, 50.0, 0.0),))
        steps = join_gps([path], traj, buildings, table, radius=30.0)["A"]
        assert steps[0] == (C06, "B2")

    def test_uses_last_fix_at_or_before_midpoint(self):
        buildings, traj, table = self.make_world()
        # fixes at t=0 (home) and t=100 (store): step 6 midpoint is 97.5,
        # so the home fix still applies; step 7 midpoint 112.5 uses the store
        path = TimeLocationPath("A", ((0.0, 0.0, 0.0), (100.0, 50.0, 0.0)))
        steps = join_gps([path], traj, buildings, table, radius=30.0)["A"]
        assert steps[6][1] == "B1"
        assert steps[7][1] == "B2"

    def test_distance_tie_prefers_lower_id(self):
        buildings = [
            make_building("B9", x=-10.0, y=0.0),
            make_building("B2", x=10.0, y=0.0),
        ]
        values = np.zeros((STEPS_PER_DAY, N_CLASSES))
        values[:, C02] = 1.0
        traj = TrajectoryMatrix(values)
        path = TimeLocationPath("A", ((0.0, 0.0, 0.0),))
        steps = join_gps([path], traj, buildings, residential_table(C02))["A"]
        assert steps[0][1] == "B2"


class TestLargestRemainderRound:
    def test_hand_case(self):
        out = largest_remainder_round([1.4, 2.4, 3.2])
        assert out.tolist() == [2, 2, 3]

    def test_preserves_requested_total(self):
        out = largest_remainder_round([0.5, 0.5, 0.5], total=2)
        assert out.sum() == 2
        assert out.tolist() == [1, 1, 0]

    def test_total_below_floors_rejected(self):
        with pytest.raises(ValueError, match="below the sum of floors"):
            largest_remainder_round([2.0, 3.0], total=4)

    @given(st.integers(0, 10**6))
    def test_sum_preserved(self, seed):
        rng = np.random.Generator(np.random.PCG64(seed))
        v = rng.uniform(0, 10, size=6)
        out = largest_remainder_round(v)
        assert out.sum() == int(round(v.sum()))
