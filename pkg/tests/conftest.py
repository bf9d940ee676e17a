"""Shared fixtures: record factories, a stacked-band zone map, and one pair of
full desk-scale pipeline runs reused by the synth and acceptance tests."""

import time
from datetime import datetime, timedelta, timezone

import pytest

from tarmac.cli import main as cli_main
from tarmac.ingest import FlightRecord, GpsPoint
from tarmac.trajectory import Zone, ZoneMap

T0 = datetime(2016, 7, 1, 0, 0, 0, tzinfo=timezone.utc)


def at(minutes: float, seconds: float = 0.0) -> datetime:
    return T0 + timedelta(minutes=minutes, seconds=seconds)


def make_point(
    minutes=0.0,
    seconds=0.0,
    lat=0.0005,
    lon=0.0005,
    vehicle_id="N1",
    call_sign="FL1",
    altitude=30.0,
    vehicle_class="aircraft",
) -> GpsPoint:
    return GpsPoint(
        vehicle_id=vehicle_id,
        call_sign=call_sign,
        timestamp=at(minutes, seconds),
        lat=lat,
        lon=lon,
        altitude=altitude,
        vehicle_class=vehicle_class,
    )


def make_flight(
    flight_id="FL1",
    tail="N1",
    sched_out_min=600.0,
    delay_min=None,
    sched_in_min=None,
    arr_delay_min=None,
    origin="SYN",
    destination="DST",
) -> FlightRecord:
    sched_out = at(sched_out_min)
    sched_in = at(sched_in_min if sched_in_min is not None else sched_out_min + 120.0)
    return FlightRecord(
        flight_id=flight_id,
        tail_number=tail,
        date=sched_out.date(),
        sched_gate_out=sched_out,
        actual_gate_out=None if delay_min is None else sched_out + timedelta(minutes=delay_min),
        sched_gate_in=sched_in,
        actual_gate_in=None
        if arr_delay_min is None
        else sched_in + timedelta(minutes=arr_delay_min),
        origin=origin,
        destination=destination,
    )


def band_zone(name: str, lat_lo: float, lat_hi: float, lon_lo=0.0, lon_hi=0.001) -> Zone:
    return Zone(
        name=name,
        ring=(
            (lat_lo, lon_lo),
            (lat_lo, lon_hi),
            (lat_hi, lon_hi),
            (lat_hi, lon_lo),
            (lat_lo, lon_lo),
        ),
    )


@pytest.fixture()
def zone_map() -> ZoneMap:
    return ZoneMap(
        zones=(
            band_zone("parking", 0.0, 0.001),
            band_zone("apron", 0.001, 0.002),
            band_zone("runway", 0.002, 0.003),
        )
    )


@pytest.fixture(scope="session")
def desk_runs(tmp_path_factory):
    """Two identical desk-scale `all` runs (seed 7, single-threaded)."""
    base = tmp_path_factory.mktemp("desk")
    runs = {}
    for name in ("a", "b"):
        out = base / name
        started = time.perf_counter()
        rc = cli_main(["all", "--out", str(out), "--seed", "7", "--threads", "1"])
        elapsed = time.perf_counter() - started
        assert rc == 0, f"desk run {name} failed"
        runs[name] = out
        runs[f"elapsed_{name}"] = elapsed
    return runs
