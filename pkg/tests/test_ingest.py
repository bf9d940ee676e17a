import io

import pytest

from tarmac.errors import SchemaError
from tarmac.ingest import (
    parse_schedule,
    parse_timestamp,
    parse_trajectory_stream,
    parse_weather,
    write_schedule,
    write_trajectories,
    write_weather,
)

SCHEDULE_HEADER = (
    "flight_id,tail_number,date,sched_gate_out,actual_gate_out,"
    "sched_gate_in,actual_gate_in,origin,destination,delay_cause"
)


def schedule_bytes(*rows: str) -> bytes:
    return ("\n".join([SCHEDULE_HEADER, *rows]) + "\n").encode()


WEATHER_HEADER = (
    "timestamp,temperature,humidity,pressure,wind_speed,visibility,"
    "precipitation,condition,wind_direction"
)


def weather_bytes(*rows: str) -> bytes:
    return ("\n".join([WEATHER_HEADER, *rows]) + "\n").encode()


class TestParseSchedule:
    def test_positive_delay(self):
        records, diags = parse_schedule(
            schedule_bytes(
                "FL1,N1,2016-07-01,2016-07-01T10:00:00Z,2016-07-01T10:15:00Z,"
                "2016-07-01T12:00:00Z,2016-07-01T12:20:00Z,SYN,DST,"
            )
        )
        assert diags == []
        assert records[0].dep_delay_min == 15.0

    def test_negative_delay_kept(self):
        records, diags = parse_schedule(
            schedule_bytes(
                "FL1,N1,2016-07-01,2016-07-01T10:00:00Z,2016-07-01T09:55:00Z,"
                "2016-07-01T12:00:00Z,,SYN,DST,"
            )
        )
        assert diags == []
        assert records[0].dep_delay_min == -5.0

    def test_missing_tail_number_becomes_diagnostic(self):
        records, diags = parse_schedule(
            schedule_bytes(
                "FL1,,2016-07-01,2016-07-01T10:00:00Z,,2016-07-01T12:00:00Z,,SYN,DST,"
            )
        )
        assert records == []
        assert len(diags) == 1 and "tail_number" in diags[0].reason

    def test_missing_required_column_is_fatal(self):
        with pytest.raises(SchemaError, match="tail_number"):
            parse_schedule(b"flight_id,sched_gate_out\nFL1,2016-07-01T10:00:00Z\n")

    def test_unparseable_timestamp_is_diagnostic(self):
        records, diags = parse_schedule(
            schedule_bytes("FL1,N1,,not-a-time,,2016-07-01T12:00:00Z,,SYN,DST,")
        )
        assert records == []
        assert "timestamp" in diags[0].reason

    def test_schema_column_renaming(self):
        raw = (
            "CALLSIGN,TAIL,OUT_SCHED,IN_SCHED,FROM,TO\n"
            "FL9,N9,2016-07-02T08:00:00Z,2016-07-02T10:00:00Z,SYN,DST\n"
        ).encode()
        schema = {
            "flight_id": "CALLSIGN",
            "tail_number": "TAIL",
            "sched_gate_out": "OUT_SCHED",
            "sched_gate_in": "IN_SCHED",
            "origin": "FROM",
            "destination": "TO",
        }
        records, diags = parse_schedule(raw, schema=schema)
        assert diags == []
        assert records[0].flight_id == "FL9"
        assert records[0].actual_gate_out is None

    def test_naive_timestamp_requires_timezone(self):
        row = "FL1,N1,,2016-07-01 10:00:00,,2016-07-01 12:00:00,,SYN,DST,"
        _, diags = parse_schedule(schedule_bytes(row))
        assert any("timezone" in d.reason for d in diags)
        records, diags = parse_schedule(schedule_bytes(row), airport_tz="America/Los_Angeles")
        assert diags == []
        assert records[0].sched_gate_out.hour == 17  # 10:00 PDT -> 17:00 UTC

    def test_conservation_and_purity(self):
        raw = schedule_bytes(
            "FL1,N1,,2016-07-01T10:00:00Z,,2016-07-01T12:00:00Z,,SYN,DST,",
            "FL2,,,2016-07-01T10:00:00Z,,2016-07-01T12:00:00Z,,SYN,DST,",
            "FL3,N3,,bogus,,2016-07-01T12:00:00Z,,SYN,DST,",
        )
        records, diags = parse_schedule(raw)
        assert len(records) + len(diags) == 3
        again = parse_schedule(raw)
        assert again == (records, diags)

    def test_round_trip(self):
        records, _ = parse_schedule(
            schedule_bytes(
                "FL1,N1,2016-07-01,2016-07-01T10:00:00Z,2016-07-01T10:15:30.250000Z,"
                "2016-07-01T12:00:00Z,2016-07-01T12:20:00Z,SYN,DST,weather"
            )
        )
        buf = io.StringIO()
        write_schedule(records, buf)
        reparsed, diags = parse_schedule(buf.getvalue().encode())
        assert diags == []
        assert reparsed == records


class TestParseWeather:
    def test_two_hourly_rows(self):
        obs, diags = parse_weather(
            weather_bytes(
                "2016-07-01T00:00:00Z,18.0,60.0,1013.0,3.0,12.0,0.0,Clear,N",
                "2016-07-01T01:00:00Z,17.5,61.0,1013.2,3.5,12.0,0.0,Clear,NNE",
            )
        )
        assert len(obs) == 2 and diags == []

    def test_duplicate_timestamp_rejected(self):
        obs, diags = parse_weather(
            weather_bytes(
                "2016-07-01T00:00:00Z,18.0,60.0,1013.0,3.0,12.0,0.0,Clear,N",
                "2016-07-01T00:00:00Z,18.1,60.0,1013.0,3.0,12.0,0.0,Clear,N",
            )
        )
        assert len(obs) == 1
        assert len(diags) == 1 and diags[0].reason == "duplicate timestamp"

    def test_wind_direction_is_categorical(self):
        obs, _ = parse_weather(
            weather_bytes("2016-07-01T00:00:00Z,18.0,60.0,1013.0,3.0,12.0,0.0,Fog,NNE")
        )
        assert obs[0].wind_direction == "NNE"

    def test_non_numeric_field_is_diagnostic(self):
        obs, diags = parse_weather(
            weather_bytes("2016-07-01T00:00:00Z,warm,60.0,1013.0,3.0,12.0,0.0,Clear,N")
        )
        assert obs == []
        assert "temperature" in diags[0].reason

    def test_output_sorted_by_timestamp(self):
        obs, _ = parse_weather(
            weather_bytes(
                "2016-07-01T02:00:00Z,18.0,60.0,1013.0,3.0,12.0,0.0,Clear,N",
                "2016-07-01T01:00:00Z,18.0,60.0,1013.0,3.0,12.0,0.0,Clear,N",
            )
        )
        assert [o.timestamp.hour for o in obs] == [1, 2]

    def test_round_trip(self):
        raw = weather_bytes(
            "2016-07-01T00:00:00Z,18.25,60.5,1013.0,3.0,12.5,0.0,Clear,N",
            "2016-07-01T01:00:00Z,17.5,61.0,1013.2,3.5,12.0,0.25,Rain,SSW",
        )
        obs, _ = parse_weather(raw)
        buf = io.StringIO()
        write_weather(obs, buf)
        reparsed, diags = parse_weather(buf.getvalue().encode())
        assert diags == []
        assert reparsed == obs


TRAJ_HEADER = "vehicle_id,call_sign,timestamp,lat,lon,altitude,vehicle_class"


class TestParseTrajectories:
    def test_valid_delimited_line(self):
        raw = f"{TRAJ_HEADER}\nN1,FL1,2016-07-01T10:00:00.500000Z,33.9425,-118.4081,30.0,aircraft\n"
        points, diags = parse_trajectory_stream(raw.encode())
        assert diags == []
        assert points[0].lat == 33.9425 and points[0].timestamp.microsecond == 500000

    def test_lat_out_of_range(self):
        raw = f"{TRAJ_HEADER}\nN1,FL1,2016-07-01T10:00:00Z,95.0,-118.4,30.0,aircraft\n"
        points, diags = parse_trajectory_stream(raw.encode())
        assert points == []
        assert diags[0].reason == "lat out of range"

    def test_missing_altitude_kept_as_absent(self):
        raw = f"{TRAJ_HEADER}\nN1,FL1,2016-07-01T10:00:00Z,33.9,-118.4,,aircraft\n"
        points, diags = parse_trajectory_stream(raw.encode())
        assert diags == []
        assert points[0].altitude is None

    def test_jsonl_autodetect_and_missing_altitude(self):
        raw = (
            '{"vehicle_id": "N1", "call_sign": "FL1", "timestamp": "2016-07-01T10:00:00Z",'
            ' "lat": 33.9, "lon": -118.4, "vehicle_class": "aircraft"}\n'
        ).encode()
        points, diags = parse_trajectory_stream(raw)
        assert diags == []
        assert points[0].altitude is None and points[0].vehicle_id == "N1"

    def test_truncated_lines(self):
        csv_raw = f"{TRAJ_HEADER}\nN1,FL1,2016-07-01T10:00:00Z\n"
        points, diags = parse_trajectory_stream(csv_raw.encode())
        assert points == [] and diags[0].reason == "truncated row"
        json_raw = b'{"vehicle_id": "N1", "lat": 33.9\n'
        points, diags = parse_trajectory_stream(json_raw)
        assert points == [] and "JSON" in diags[0].reason

    def test_conservation(self):
        raw = (
            f"{TRAJ_HEADER}\n"
            "N1,FL1,2016-07-01T10:00:00Z,33.9,-118.4,30.0,aircraft\n"
            "N1,FL1,2016-07-01T10:00:01Z,95.0,-118.4,30.0,aircraft\n"
            "N1,FL1,bogus,33.9,-118.4,30.0,aircraft\n"
        )
        points, diags = parse_trajectory_stream(raw.encode())
        assert len(points) + len(diags) == 3

    def test_round_trip_both_formats(self):
        raw = (
            f"{TRAJ_HEADER}\n"
            "N1,FL1,2016-07-01T10:00:00.250000Z,33.9425,-118.4081,30.0,aircraft\n"
            "GV1,,2016-07-01T10:00:05Z,33.94,-118.41,,ground_vehicle\n"
        )
        points, _ = parse_trajectory_stream(raw.encode())
        for fmt in ("csv", "jsonl"):
            buf = io.StringIO()
            write_trajectories(points, buf, fmt=fmt)
            reparsed, diags = parse_trajectory_stream(buf.getvalue().encode())
            assert diags == []
            assert reparsed == points


def test_parse_timestamp_offsets_normalize_to_utc():
    a = parse_timestamp("2016-07-01T10:00:00Z")
    b = parse_timestamp("2016-07-01T03:00:00-07:00")
    assert a == b and a.utcoffset().total_seconds() == 0
