"""Seeded synthetic airport scenario with a planted congestion -> delay effect.

The generator emits the three canonical input files (schedule, weather,
trajectories) plus a ground-truth sidecar. Each departure's delay follows

    delay = base + beta_atc * runway_occupancy(predicting_time)
                 + beta_wx  * adverse_weather(predicting_time)
                 + carryover(inbound delay)
                 + Gaussian(0, sigma)

where runway occupancy is the number of distinct aircraft with a runway-zone
point inside the observation window ending at predicting time, i.e. exactly
the quantity the feature extractor can observe. All delay terms are quantized
to integer microseconds so the planted equation holds exactly in the written
timestamps; every latent is recorded in the sidecar.

Carryover uses a buffered hinge — schedule slack absorbs small inbound
delays: carryover = coef * max(0, inbound_delay - buffer).
"""

from __future__ import annotations

import bisect
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass
from datetime import date, datetime, timedelta, timezone
from typing import Optional

import numpy as np

from .errors import ValidationError
from .ingest import (
    FlightRecord,
    GpsPoint,
    WeatherObservation,
    write_schedule,
    write_trajectories,
    write_weather,
)
from .trajectory import EARTH_RADIUS_M, Zone, ZoneMap, zone_map_to_dict

M_PER_DEG_LAT = EARTH_RADIUS_M * math.pi / 180.0

# stylized airport geometry: three stacked rectangles, gates in the parking
# band, a straight taxi path north into the runway band
_LAT0 = 33.9400
_LON_W, _LON_E = -118.4100, -118.4000
_BAND = 0.0010  # deg of latitude per zone band
_GATE_LAT = _LAT0 + 0.5 * _BAND
_RUNWAY_LAT = _LAT0 + 2.5 * _BAND
_N_GATES = 18

_COMPASS = (
    "N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE",
    "S", "SSW", "SW", "WSW", "W", "WNW", "NW", "NNW",
)
_ADVERSE_CONDITIONS = ("Rain", "Fog")
_FAIR_CONDITIONS = ("Clear", "Cloudy", "Overcast")
_DELAY_CAUSES = ("carrier", "weather", "nas", "security", "late_aircraft")

_US_PER_MIN = 60_000_000


def default_zone_map() -> ZoneMap:
    def band(name, lo, hi):
        ring = (
            (lo, _LON_W),
            (lo, _LON_E),
            (hi, _LON_E),
            (hi, _LON_W),
            (lo, _LON_W),
        )
        return Zone(name=name, ring=ring)

    return ZoneMap(
        zones=(
            band("parking", _LAT0, _LAT0 + _BAND),
            band("apron", _LAT0 + _BAND, _LAT0 + 2 * _BAND),
            band("runway", _LAT0 + 2 * _BAND, _LAT0 + 3 * _BAND),
        )
    )


@dataclass(frozen=True)
class ScenarioSpec:
    n_days: int = 7
    flights_per_day: int = 200
    beta_atc: float = 1.5
    beta_wx: float = 2.0
    noise_sigma_min: float = 2.5
    base_delay_min: float = 5.0
    carryover_coef: float = 1.2
    carryover_buffer_min: float = 6.0
    gap_min: float = 240.0
    window_min: float = 60.0
    seed: int = 0
    start_date: str = "2016-07-01"
    airport: str = "SYN"


def _quantize_us(minutes: float) -> int:
    return int(round(minutes * _US_PER_MIN))


def _us_to_min(us: int) -> float:
    return (us / 1e6) / 60.0


def _round7(x: float) -> float:
    return round(x, 7)


class _RunwayLog:
    """Sorted (epoch, vehicle) log of runway-zone aircraft points."""

    def __init__(self):
        self._events: list[tuple[float, str]] = []

    def add(self, ts: float, vehicle: str) -> None:
        bisect.insort(self._events, (ts, vehicle))

    def occupancy(self, t0: float, t1: float) -> int:
        lo = bisect.bisect_left(self._events, (t0, ""))
        hi = bisect.bisect_right(self._events, (t1, "￿"))
        return len({v for _, v in self._events[lo:hi]})


def _simulate_taxi_out(
    rng: np.random.Generator,
    tail: str,
    call_sign: str,
    start: datetime,
    gate_lon: float,
    zm: ZoneMap,
) -> tuple[list[GpsPoint], list[tuple[float, str]]]:
    """Straight taxi from gate through the apron into the runway band at 1 Hz.
    Returns the points and the (epoch, vehicle) pairs classified as runway."""
    taxi_speed = float(rng.uniform(7.5, 10.5))  # m/s, below any cleaning threshold
    roll_s = int(rng.integers(3, 7))
    north_deg = _RUNWAY_LAT - _GATE_LAT
    north_s = north_deg * M_PER_DEG_LAT / taxi_speed
    total_s = int(north_s) + roll_s
    m_per_deg_lon = M_PER_DEG_LAT * math.cos(math.radians(_GATE_LAT))

    points = []
    runway_events = []
    for k in range(total_s + 1):
        if k <= north_s:
            lat = _GATE_LAT + north_deg * (k / north_s)
            lon = gate_lon
        else:
            lat = _RUNWAY_LAT
            lon = gate_lon + 10.0 * (k - north_s) / m_per_deg_lon
        p = GpsPoint(
            vehicle_id=tail,
            call_sign=call_sign,
            timestamp=start + timedelta(seconds=k),
            lat=_round7(lat),
            lon=_round7(lon),
            altitude=38.0,
            vehicle_class="aircraft",
        )
        points.append(p)
        if zm.classify(p.lat, p.lon) == "runway":
            runway_events.append((p.timestamp.timestamp(), tail))
    return points, runway_events


def _vehicle_patrols(rng: np.random.Generator, day_start: datetime) -> list[GpsPoint]:
    """Short apron patrol bursts for two ground vehicles."""
    points = []
    apron_lat = _LAT0 + 1.5 * _BAND
    m_per_deg_lon = M_PER_DEG_LAT * math.cos(math.radians(apron_lat))
    for v in range(2):
        vid = f"GV{v + 1:02d}"
        for hour in (7, 11, 15, 19):
            start = day_start + timedelta(hours=hour, minutes=int(rng.integers(0, 50)))
            lon0 = float(rng.uniform(_LON_W + 0.001, _LON_E - 0.002))
            for k in range(30):
                points.append(
                    GpsPoint(
                        vehicle_id=vid,
                        call_sign=None,
                        timestamp=start + timedelta(seconds=k),
                        lat=_round7(apron_lat),
                        lon=_round7(lon0 + 4.0 * k / m_per_deg_lon),
                        altitude=38.0,
                        vehicle_class="ground_vehicle",
                    )
                )
    return points


def _hour_weights() -> np.ndarray:
    hours = np.arange(6, 22, dtype=float)
    w = 1.0 + 2.0 * np.exp(-(((hours - 8.5) / 2.0) ** 2)) + 2.0 * np.exp(
        -(((hours - 17.5) / 2.0) ** 2)
    )
    return w / w.sum()


def generate(spec: ScenarioSpec, out_dir: str, zone_map: Optional[ZoneMap] = None) -> dict:
    """Write schedule.csv, weather.csv, trajectories.csv, ground_truth.json and
    zones.json under ``out_dir``. Byte-identical output for identical spec."""
    zm = zone_map if zone_map is not None else default_zone_map()
    have = {z.name for z in zm.zones}
    missing = {"parking", "apron", "runway"} - have
    if missing:
        raise ValidationError(f"scenario zone map missing required zones: {sorted(missing)}")

    rng = np.random.default_rng(spec.seed)
    start_day = date.fromisoformat(spec.start_date)
    day0 = datetime(start_day.year, start_day.month, start_day.day, tzinfo=timezone.utc)

    # hourly weather with adverse regimes drawn per 6-hour block
    observations: list[WeatherObservation] = []
    adverse_by_hour: list[bool] = []
    n_hours = spec.n_days * 24
    block_adverse = rng.random(math.ceil(n_hours / 6)) < 0.25
    for h in range(n_hours):
        adverse = bool(block_adverse[h // 6])
        adverse_by_hour.append(adverse)
        if adverse:
            condition = str(rng.choice(_ADVERSE_CONDITIONS))
            visibility = float(rng.uniform(1.0, 5.0))
            precipitation = float(rng.uniform(0.5, 4.0))
            wind_speed = float(rng.uniform(6.0, 14.0))
            humidity = float(np.clip(80.0 + rng.normal(0.0, 5.0), 5.0, 100.0))
        else:
            condition = str(rng.choice(_FAIR_CONDITIONS, p=[0.5, 0.3, 0.2]))
            visibility = float(rng.uniform(8.0, 16.0))
            precipitation = 0.0
            wind_speed = float(rng.uniform(1.0, 7.0))
            humidity = float(np.clip(55.0 + rng.normal(0.0, 8.0), 5.0, 100.0))
        observations.append(
            WeatherObservation(
                timestamp=day0 + timedelta(hours=h),
                temperature=round(18.0 + 6.0 * math.sin(2 * math.pi * (h % 24 - 14) / 24.0)
                                  + float(rng.normal(0.0, 0.8)), 2),
                humidity=round(humidity, 2),
                pressure=round(1013.0 + float(rng.normal(0.0, 2.0)), 2),
                wind_speed=round(wind_speed, 2),
                visibility=round(visibility, 2),
                precipitation=round(precipitation, 2),
                condition=condition,
                wind_direction=str(rng.choice(_COMPASS)),
            )
        )

    hour_choices = np.arange(6, 22)
    hour_p = _hour_weights()
    gap = timedelta(minutes=spec.gap_min)
    window_s = spec.window_min * 60.0

    records: list[FlightRecord] = []
    points: list[GpsPoint] = []
    truth_flights: list[dict] = []
    runway_log = _RunwayLog()

    for d in range(spec.n_days):
        day_start = day0 + timedelta(days=d)

        # draw and sort departure schedule times for the day
        dep_minutes = sorted(
            int(h) * 60 + int(m)
            for h, m in zip(
                rng.choice(hour_choices, size=spec.flights_per_day, p=hour_p),
                rng.integers(0, 60, size=spec.flights_per_day),
            )
        )

        deps = []
        for i, minute in enumerate(dep_minutes):
            sched_out = day_start + timedelta(minutes=minute)
            tail = f"N{i:03d}SY"
            call_sign = f"SY{i:03d}"
            turnaround_min = int(rng.integers(280, 421))
            inbound_delay_us = _quantize_us(
                float(np.clip(rng.normal(4.0, 10.0), -10.0, 30.0))
            )
            gate = int(rng.integers(0, _N_GATES))
            taxi_noise = float(rng.normal(0.0, spec.noise_sigma_min))
            deps.append(
                (sched_out, tail, call_sign, turnaround_min, inbound_delay_us, gate, taxi_noise)
            )

        for sched_out, tail, call_sign, turnaround_min, inbound_delay_us, gate, noise in deps:
            # inbound leg of the same tail, long enough before departure to be
            # visible at predicting time
            inb_sched_in = sched_out - timedelta(minutes=turnaround_min)
            inb_actual_in = inb_sched_in + timedelta(microseconds=inbound_delay_us)
            inb_sched_out = inb_sched_in - timedelta(minutes=135)
            inbound = FlightRecord(
                flight_id=f"IN{call_sign[2:]}",
                tail_number=tail,
                date=inb_sched_out.date(),
                sched_gate_out=inb_sched_out,
                actual_gate_out=inb_sched_out + timedelta(microseconds=inbound_delay_us),
                sched_gate_in=inb_sched_in,
                actual_gate_in=inb_actual_in,
                origin="ORG",
                destination=spec.airport,
                delay_cause=None,
            )
            records.append(inbound)

            pt = sched_out - gap
            pt_epoch = pt.timestamp()
            occupancy = runway_log.occupancy(pt_epoch - window_s, pt_epoch)
            hour_index = int((pt - day0).total_seconds() // 3600)
            adverse = adverse_by_hour[hour_index] if 0 <= hour_index < n_hours else False

            base_us = _quantize_us(spec.base_delay_min)
            atc_us = _quantize_us(spec.beta_atc * occupancy)
            wx_us = _quantize_us(spec.beta_wx * (1.0 if adverse else 0.0))
            inbound_delay_min = _us_to_min(inbound_delay_us)
            carry_us = _quantize_us(
                spec.carryover_coef * max(0.0, inbound_delay_min - spec.carryover_buffer_min)
            )
            noise_us = _quantize_us(noise)
            delay_us = base_us + atc_us + wx_us + carry_us + noise_us
            delay_us = max(delay_us, -30 * _US_PER_MIN)  # pushback at most 30 min early

            actual_out = sched_out + timedelta(microseconds=delay_us)
            sched_in = sched_out + timedelta(minutes=150)
            dominant = max(
                (atc_us, "nas"), (wx_us, "weather"), (carry_us, "late_aircraft")
            )
            departure = FlightRecord(
                flight_id=call_sign,
                tail_number=tail,
                date=sched_out.date(),
                sched_gate_out=sched_out,
                actual_gate_out=actual_out,
                sched_gate_in=sched_in,
                actual_gate_in=sched_in + timedelta(microseconds=delay_us),
                origin=spec.airport,
                destination="DST",
                delay_cause=dominant[1] if _us_to_min(delay_us) > 15.0 else None,
            )
            records.append(departure)

            gate_lon = _LON_W + 0.0005 + gate * 0.0005
            taxi_points, runway_events = _simulate_taxi_out(
                rng, tail, call_sign, actual_out, gate_lon, zm
            )
            points.extend(taxi_points)
            for ts, vid in runway_events:
                runway_log.add(ts, vid)

            truth_flights.append(
                {
                    "flight_id": call_sign,
                    "date": sched_out.date().isoformat(),
                    "sched_gate_out": sched_out.isoformat(),
                    "runway_occupancy": occupancy,
                    "adverse_weather": int(adverse),
                    "inbound_delay_min": inbound_delay_min,
                    "base_us": base_us,
                    "atc_us": atc_us,
                    "wx_us": wx_us,
                    "carry_us": carry_us,
                    "noise_us": noise_us,
                    "delay_us": delay_us,
                    "delay_min": _us_to_min(delay_us),
                }
            )

        points.extend(_vehicle_patrols(rng, day_start))

    records.sort(key=lambda r: (r.sched_gate_out, r.flight_id))

    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "schedule": os.path.join(out_dir, "schedule.csv"),
        "weather": os.path.join(out_dir, "weather.csv"),
        "trajectories": os.path.join(out_dir, "trajectories.csv"),
        "ground_truth": os.path.join(out_dir, "ground_truth.json"),
        "zones": os.path.join(out_dir, "zones.json"),
    }
    with open(paths["schedule"], "w", encoding="utf-8", newline="") as fh:
        write_schedule(records, fh)
    with open(paths["weather"], "w", encoding="utf-8", newline="") as fh:
        write_weather(observations, fh)
    with open(paths["trajectories"], "w", encoding="utf-8", newline="") as fh:
        write_trajectories(points, fh)
    truth = {
        "spec": asdict(spec),
        "flights": truth_flights,
    }
    with open(paths["ground_truth"], "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(paths["zones"], "w", encoding="utf-8") as fh:
        json.dump(zone_map_to_dict(zm), fh, indent=2, sort_keys=True)
        fh.write("\n")

    return {
        "paths": paths,
        "n_flights": len(records),
        "n_departures": len(truth_flights),
        "n_observations": len(observations),
        "n_points": len(points),
    }


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()
