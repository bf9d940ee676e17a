import math

import numpy as np
import pytest

from conftest import band_zone, make_point
from tarmac.errors import ContractViolation, ValidationError
from tarmac.trajectory import (
    EARTH_RADIUS_M,
    ZoneMap,
    clean_points,
    compute_kinematics,
    haversine_m,
    label_zones,
    load_zone_map,
    point_in_ring,
    segment,
)


def law_of_cosines_m(lat1, lon1, lat2, lon2):
    """Independent oracle: R * central angle via the spherical law of cosines."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dl = math.radians(lon2 - lon1)
    cos_sigma = math.sin(p1) * math.sin(p2) + math.cos(p1) * math.cos(p2) * math.cos(dl)
    return EARTH_RADIUS_M * math.acos(max(-1.0, min(1.0, cos_sigma)))


class TestHaversine:
    def test_identity(self):
        assert haversine_m(33.9425, -118.4081, 33.9425, -118.4081) == 0.0

    def test_one_degree_of_longitude_at_equator(self):
        # R * pi/180 = 111194.93 m by the law-of-cosines oracle
        assert haversine_m(0.0, 0.0, 0.0, 1.0) == pytest.approx(111195.0, abs=1.0)
        assert haversine_m(0.0, 0.0, 0.0, 1.0) == pytest.approx(
            law_of_cosines_m(0.0, 0.0, 0.0, 1.0), abs=1e-6
        )

    def test_symmetry_on_seeded_pairs(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            lat1, lat2 = rng.uniform(-89, 89, 2)
            lon1, lon2 = rng.uniform(-180, 180, 2)
            d_ab = haversine_m(lat1, lon1, lat2, lon2)
            assert d_ab == haversine_m(lat2, lon2, lat1, lon1)
            assert d_ab >= 0.0


class TestCleanPoints:
    def test_missing_altitude_dropped(self):
        pts = [make_point(seconds=0), make_point(seconds=1, altitude=None)]
        kept, stats = clean_points(pts)
        assert len(kept) == 1
        assert stats.missing_altitude == 1

    def test_discontinuity_dropped_by_implied_speed(self):
        # 10 km in 1 s is 10,000 m/s, far above the 150 m/s default
        pts = [make_point(seconds=0, lat=0.0), make_point(seconds=1, lat=0.09)]
        kept, stats = clean_points(pts)
        assert [p.timestamp for p in kept] == [pts[0].timestamp]
        assert stats.discontinuity == 1

    def test_stationary_pair_kept(self):
        pts = [make_point(seconds=0), make_point(seconds=1)]
        kept, stats = clean_points(pts)
        assert len(kept) == 2 and stats.total == 0

    def test_duplicate_timestamp_dropped(self):
        pts = [make_point(seconds=0), make_point(seconds=0, lat=0.0006)]
        kept, stats = clean_points(pts)
        assert len(kept) == 1 and stats.duplicate_timestamp == 1

    def test_conservation_across_vehicles(self):
        rng = np.random.default_rng(1)
        pts = []
        for v in range(5):
            for s in range(20):
                pts.append(
                    make_point(
                        seconds=s,
                        vehicle_id=f"N{v}",
                        lat=float(rng.uniform(0, 0.001)),
                        altitude=None if rng.random() < 0.2 else 30.0,
                    )
                )
        kept, stats = clean_points(pts)
        assert len(kept) + stats.total == len(pts)


class TestSegment:
    def test_contiguous_track_is_one_trajectory(self):
        pts = [make_point(seconds=s) for s in range(10)]
        trajs = segment(pts)
        assert len(trajs) == 1 and len(trajs[0].points) == 10

    def test_long_silence_splits(self):
        pts = [make_point(minutes=0), make_point(minutes=1), make_point(minutes=121)]
        trajs = segment(pts, gap_threshold_s=900.0)
        assert [len(t.points) for t in trajs] == [2, 1]

    def test_two_call_signs_one_tail(self):
        pts = [make_point(seconds=0, call_sign="FL1"), make_point(seconds=1, call_sign="FL2")]
        assert len(segment(pts)) == 2

    def test_every_point_in_exactly_one_trajectory(self):
        pts = [make_point(minutes=m, vehicle_id=f"N{m % 3}") for m in range(30)]
        trajs = segment(pts, gap_threshold_s=60.0)
        total = sum(len(t.points) for t in trajs)
        assert total == len(pts)


class TestComputeKinematics:
    def test_hand_arithmetic_speed(self):
        # ~100 m north in 10 s -> 10 m/s
        dlat = 100.0 / (EARTH_RADIUS_M * math.pi / 180.0)
        pts = [make_point(seconds=0, lat=0.0), make_point(seconds=10, lat=dlat)]
        t = segment(pts)[0]
        speeds = [tp.speed_mps for tp in compute_kinematics(t).points]
        assert speeds[0] is None
        assert speeds[1] == pytest.approx(10.0, abs=1e-6)

    def test_single_point_no_error(self):
        t = segment([make_point()])[0]
        out = compute_kinematics(t)
        assert out.points[0].speed_mps is None

    def test_zero_time_delta_is_contract_violation(self):
        t = segment([make_point(seconds=0)])[0]
        bad = t.points + (t.points[0],)
        t = type(t)(t.traj_id, t.vehicle_id, t.call_sign, t.date, bad)
        with pytest.raises(ContractViolation, match="zero time delta at index 1"):
            compute_kinematics(t)

    def test_speeds_nonnegative_finite_on_cleaned(self):
        rng = np.random.default_rng(3)
        pts = [
            make_point(seconds=s, lat=float(rng.uniform(0, 0.0012)))
            for s in range(0, 120, 2)
        ]
        kept, _ = clean_points(pts)
        for t in segment(kept):
            for tp in compute_kinematics(t).points[1:]:
                assert tp.speed_mps >= 0.0 and math.isfinite(tp.speed_mps)


class TestLabelZones:
    def test_runway_centroid(self, zone_map):
        t = segment([make_point(lat=0.0025, lon=0.0005)])[0]
        assert label_zones(t, zone_map).points[0].zone == "runway"

    def test_outside_all_zones(self, zone_map):
        t = segment([make_point(lat=0.05, lon=0.05)])[0]
        assert label_zones(t, zone_map).points[0].zone == "other"

    def test_overlap_resolved_by_priority(self):
        # apron and runway both cover the probe point; runway must win
        zm = ZoneMap(
            zones=(
                band_zone("apron", 0.0, 0.002),
                band_zone("runway", 0.001, 0.003),
            )
        )
        t = segment([make_point(lat=0.0015, lon=0.0005)])[0]
        assert label_zones(t, zm).points[0].zone == "runway"

    def test_idempotent_and_order_independent(self, zone_map):
        pts = [make_point(seconds=s, lat=0.0005 + 0.0002 * s) for s in range(10)]
        t = segment(pts)[0]
        once = label_zones(t, zone_map)
        twice = label_zones(once, zone_map)
        assert [tp.zone for tp in twice.points] == [tp.zone for tp in once.points]
        rev = segment(list(reversed(pts)))[0]
        rev_lab = label_zones(rev, zone_map)
        assert [tp.zone for tp in rev_lab.points] == [tp.zone for tp in once.points]

    def test_boundary_point_counts_inside(self, zone_map):
        assert point_in_ring(0.001, 0.0005, zone_map.zones[0].ring)  # shared edge
        assert zone_map.classify(0.001, 0.0005) == "apron"  # overlap -> priority

    def test_convex_half_plane_oracle(self):
        ring = ((0.0, 0.0), (0.0, 4.0), (3.0, 5.0), (5.0, 2.0), (3.0, -1.0), (0.0, 0.0))

        def half_plane_inside(lat, lon):
            sign = 0
            for (y1, x1), (y2, x2) in zip(ring, ring[1:]):
                cross = (x2 - x1) * (lat - y1) - (y2 - y1) * (lon - x1)
                if cross == 0.0:
                    continue
                s = 1 if cross > 0 else -1
                if sign == 0:
                    sign = s
                elif s != sign:
                    return False
            return True

        rng = np.random.default_rng(7)
        for _ in range(2000):
            lat = float(rng.uniform(-2, 6))
            lon = float(rng.uniform(-2, 6))
            assert point_in_ring(lat, lon, ring) == half_plane_inside(lat, lon)


class TestZoneMapLoading:
    def test_load_and_classify(self, zone_map):
        doc = {
            "zones": [
                {"name": z.name, "ring": [[la, lo] for la, lo in z.ring]}
                for z in zone_map.zones
            ]
        }
        zm = load_zone_map(doc)
        assert zm.classify(0.0005, 0.0005) == "parking"

    def test_unclosed_ring_rejected(self):
        doc = {"zones": [{"name": "runway", "ring": [[0, 0], [0, 1], [1, 1], [1, 0]]}]}
        with pytest.raises(ValidationError, match="not closed"):
            load_zone_map(doc)

    def test_too_few_vertices_rejected(self):
        doc = {"zones": [{"name": "runway", "ring": [[0, 0], [1, 1], [0, 0]]}]}
        with pytest.raises(ValidationError, match="4 vertices"):
            load_zone_map(doc)

    def test_unknown_zone_name_rejected(self):
        doc = {"zones": [{"name": "taxiway", "ring": [[0, 0], [0, 1], [1, 1], [0, 0]]}]}
        with pytest.raises(ValidationError, match="unknown zone name"):
            load_zone_map(doc)
