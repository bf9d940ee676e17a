"""Surface-trajectory processing: cleaning, segmentation, speeds, zone labels.

A movement is keyed by (vehicle_id, call_sign, date) because the same flight
number reuses its call sign on different dates; time gaps beyond a threshold
split a key into separate trajectories.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from datetime import date
from typing import Iterable, Optional, Sequence, Union

from .errors import ContractViolation, ValidationError
from .ingest import GpsPoint, format_timestamp, parse_timestamp

EARTH_RADIUS_M = 6_371_000.0

ZONE_NAMES = ("parking", "apron", "runway")
DEFAULT_ZONE_PRIORITY = ("runway", "apron", "parking")

DEFAULT_MAX_GROUND_SPEED_MPS = 150.0
DEFAULT_GAP_THRESHOLD_S = 900.0


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters between two WGS-84 points."""
    phi1 = math.radians(lat1)
    phi2 = math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(a)))


@dataclass(frozen=True)
class Zone:
    name: str
    ring: tuple[tuple[float, float], ...]  # closed: first vertex == last vertex


@dataclass(frozen=True)
class ZoneMap:
    zones: tuple[Zone, ...]
    priority: tuple[str, ...] = DEFAULT_ZONE_PRIORITY

    def classify(self, lat: float, lon: float) -> str:
        """Zone label for a point; overlaps resolve by priority, misses are 'other'."""
        for name in self.priority:
            for zone in self.zones:
                if zone.name == name and point_in_ring(lat, lon, zone.ring):
                    return name
        return "other"


def point_in_ring(lat: float, lon: float, ring: Sequence[tuple[float, float]]) -> bool:
    """Ray-casting even-odd test on (lat, lon) vertices; boundary points count
    as inside (exact-zero cross product on an edge)."""
    x, y = lon, lat
    inside = False
    for i in range(len(ring) - 1):
        y1, x1 = ring[i]
        y2, x2 = ring[i + 1]
        # exact on-edge check keeps boundary labeling deterministic
        cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
        if (
            cross == 0.0
            and min(x1, x2) <= x <= max(x1, x2)
            and min(y1, y2) <= y <= max(y1, y2)
        ):
            return True
        if (y1 > y) != (y2 > y):
            x_int = x1 + (x2 - x1) * (y - y1) / (y2 - y1)
            if x < x_int:
                inside = not inside
    return inside


def _validate_ring(name: str, ring: Sequence[Sequence[float]]) -> tuple[tuple[float, float], ...]:
    if len(ring) < 4:
        raise ValidationError(f"zone '{name}': ring needs >= 4 vertices including closure")
    verts = tuple((float(lat), float(lon)) for lat, lon in ring)
    if verts[0] != verts[-1]:
        raise ValidationError(f"zone '{name}': ring is not closed (first vertex != last)")
    for lat, lon in verts:
        if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
            raise ValidationError(f"zone '{name}': vertex out of coordinate range")
    return verts


def load_zone_map(source: Union[str, bytes, dict]) -> ZoneMap:
    """Load a zone map from a JSON file path, bytes, or already-parsed dict.

    Expected shape: {"zones": [{"name": "runway", "ring": [[lat, lon], ...]}]}
    with an optional "priority" list.
    """
    if isinstance(source, dict):
        doc = source
    elif isinstance(source, (bytes, bytearray)):
        doc = json.loads(source.decode("utf-8"))
    else:
        with open(source, "rb") as fh:
            doc = json.load(fh)
    if "zones" not in doc or not isinstance(doc["zones"], list):
        raise ValidationError("zone map: missing 'zones' list")
    zones = []
    for entry in doc["zones"]:
        name = entry.get("name")
        if name not in ZONE_NAMES:
            raise ValidationError(f"zone map: unknown zone name {name!r}")
        zones.append(Zone(name=name, ring=_validate_ring(name, entry.get("ring", []))))
    priority = tuple(doc.get("priority", DEFAULT_ZONE_PRIORITY))
    if set(priority) != set(DEFAULT_ZONE_PRIORITY):
        raise ValidationError("zone map: priority must order exactly runway/apron/parking")
    return ZoneMap(zones=tuple(zones), priority=priority)


def zone_map_to_dict(zm: ZoneMap) -> dict:
    return {
        "priority": list(zm.priority),
        "zones": [
            {"name": z.name, "ring": [[lat, lon] for lat, lon in z.ring]} for z in zm.zones
        ],
    }


@dataclass(frozen=True)
class TrackPoint:
    gps: GpsPoint
    speed_mps: Optional[float] = None  # undefined for the first point
    zone: Optional[str] = None


@dataclass(frozen=True)
class Trajectory:
    traj_id: str
    vehicle_id: str
    call_sign: Optional[str]
    date: date
    points: tuple[TrackPoint, ...] = field(default_factory=tuple)


@dataclass
class DropStats:
    missing_altitude: int = 0
    discontinuity: int = 0
    duplicate_timestamp: int = 0

    @property
    def total(self) -> int:
        return self.missing_altitude + self.discontinuity + self.duplicate_timestamp

    def as_dict(self) -> dict:
        return {
            "missing_altitude": self.missing_altitude,
            "discontinuity": self.discontinuity,
            "duplicate_timestamp": self.duplicate_timestamp,
            "total": self.total,
        }


def clean_points(
    points: Sequence[GpsPoint],
    max_ground_speed_mps: float = DEFAULT_MAX_GROUND_SPEED_MPS,
) -> tuple[list[GpsPoint], DropStats]:
    """Drop unusable points: absent altitude, non-increasing timestamps, and
    discontinuities whose implied speed from the previous kept point exceeds
    ``max_ground_speed_mps``. Kept + dropped always accounts for every input
    point. Output is grouped by vehicle_id (sorted) and time-ordered within.
    """
    stats = DropStats()
    groups: dict[str, list[GpsPoint]] = {}
    for p in points:
        groups.setdefault(p.vehicle_id, []).append(p)

    kept: list[GpsPoint] = []
    for vid in sorted(groups):
        track = sorted(groups[vid], key=lambda p: p.timestamp)
        prev: Optional[GpsPoint] = None
        for p in track:
            if p.altitude is None:
                stats.missing_altitude += 1
                continue
            if prev is not None:
                dt = (p.timestamp - prev.timestamp).total_seconds()
                if dt <= 0.0:
                    stats.duplicate_timestamp += 1
                    continue
                if haversine_m(prev.lat, prev.lon, p.lat, p.lon) / dt > max_ground_speed_mps:
                    stats.discontinuity += 1
                    continue
            kept.append(p)
            prev = p
    return kept, stats


def segment(
    points: Sequence[GpsPoint],
    gap_threshold_s: float = DEFAULT_GAP_THRESHOLD_S,
) -> list[Trajectory]:
    """Partition cleaned points into per-movement trajectories.

    The key is (vehicle_id, call_sign, UTC date); within a key, a silence
    longer than ``gap_threshold_s`` starts a new trajectory. Every input point
    lands in exactly one trajectory.
    """
    groups: dict[tuple[str, str, date], list[GpsPoint]] = {}
    for p in points:
        key = (p.vehicle_id, p.call_sign or "", p.timestamp.date())
        groups.setdefault(key, []).append(p)

    trajectories: list[Trajectory] = []
    for vid, call_sign, day in sorted(groups):
        track = sorted(groups[(vid, call_sign, day)], key=lambda p: p.timestamp)
        runs: list[list[GpsPoint]] = [[track[0]]]
        for prev, cur in zip(track, track[1:]):
            if (cur.timestamp - prev.timestamp).total_seconds() > gap_threshold_s:
                runs.append([cur])
            else:
                runs[-1].append(cur)
        for k, run in enumerate(runs):
            traj_id = f"{vid}|{call_sign}|{day.isoformat()}|{k}"
            trajectories.append(
                Trajectory(
                    traj_id=traj_id,
                    vehicle_id=vid,
                    call_sign=call_sign or None,
                    date=day,
                    points=tuple(TrackPoint(gps=p) for p in run),
                )
            )
    return trajectories


def compute_kinematics(t: Trajectory) -> Trajectory:
    """Fill per-point speeds from time and distance deltas.

    speed_i = haversine(p_{i-1}, p_i) / (t_i - t_{i-1}); the first point's
    speed stays undefined. Non-increasing timestamps are a contract violation.
    """
    if not t.points:
        return t
    out = [replace(t.points[0], speed_mps=None)]
    for i in range(1, len(t.points)):
        a = t.points[i - 1].gps
        b = t.points[i].gps
        dt = (b.timestamp - a.timestamp).total_seconds()
        if dt == 0.0:
            raise ContractViolation(f"zero time delta at index {i} in {t.traj_id}")
        if dt < 0.0:
            raise ContractViolation(f"negative time delta at index {i} in {t.traj_id}")
        speed = haversine_m(a.lat, a.lon, b.lat, b.lon) / dt
        out.append(replace(t.points[i], speed_mps=speed))
    return replace(t, points=tuple(out))


def label_zones(t: Trajectory, zm: ZoneMap) -> Trajectory:
    """Label every point with its tarmac zone (or 'other')."""
    out = tuple(
        replace(tp, zone=zm.classify(tp.gps.lat, tp.gps.lon)) for tp in t.points
    )
    return replace(t, points=out)


def process_points(
    points: Sequence[GpsPoint],
    zm: ZoneMap,
    max_ground_speed_mps: float = DEFAULT_MAX_GROUND_SPEED_MPS,
    gap_threshold_s: float = DEFAULT_GAP_THRESHOLD_S,
) -> tuple[list[Trajectory], DropStats]:
    """Full chain: clean -> segment -> speeds -> zone labels."""
    kept, stats = clean_points(points, max_ground_speed_mps)
    trajectories = [
        label_zones(compute_kinematics(t), zm) for t in segment(kept, gap_threshold_s)
    ]
    return trajectories, stats


LABELED_COLUMNS = (
    "traj_id",
    "vehicle_id",
    "call_sign",
    "date",
    "timestamp",
    "lat",
    "lon",
    "altitude",
    "vehicle_class",
    "speed_mps",
    "zone",
)


def write_labeled_trajectories(trajectories: Iterable[Trajectory], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(LABELED_COLUMNS)
    for t in trajectories:
        for tp in t.points:
            p = tp.gps
            writer.writerow(
                [
                    t.traj_id,
                    t.vehicle_id,
                    t.call_sign or "",
                    t.date.isoformat(),
                    format_timestamp(p.timestamp),
                    repr(p.lat),
                    repr(p.lon),
                    repr(p.altitude) if p.altitude is not None else "",
                    p.vehicle_class,
                    repr(tp.speed_mps) if tp.speed_mps is not None else "",
                    tp.zone or "",
                ]
            )


def read_labeled_trajectories(stream) -> list[Trajectory]:
    reader = csv.reader(stream)
    header = next(reader)
    if tuple(header) != LABELED_COLUMNS:
        raise ValidationError("labeled trajectory file: unexpected header")
    by_id: dict[str, list[TrackPoint]] = {}
    meta: dict[str, tuple[str, str, date]] = {}
    order: list[str] = []
    for row in reader:
        (traj_id, vid, call_sign, day, ts, lat, lon, alt, vclass, speed, zone) = row
        if traj_id not in by_id:
            by_id[traj_id] = []
            meta[traj_id] = (vid, call_sign, date.fromisoformat(day))
            order.append(traj_id)
        gps = GpsPoint(
            vehicle_id=vid,
            call_sign=call_sign or None,
            timestamp=parse_timestamp(ts),
            lat=float(lat),
            lon=float(lon),
            altitude=float(alt) if alt else None,
            vehicle_class=vclass,
        )
        by_id[traj_id].append(
            TrackPoint(gps=gps, speed_mps=float(speed) if speed else None, zone=zone or None)
        )
    out = []
    for traj_id in order:
        vid, call_sign, day = meta[traj_id]
        out.append(
            Trajectory(
                traj_id=traj_id,
                vehicle_id=vid,
                call_sign=call_sign or None,
                date=day,
                points=tuple(by_id[traj_id]),
            )
        )
    return out
