"""Parsers for the three raw data sources: schedule, weather, and GPS trajectories.

Every parser takes a byte stream (or raw bytes), returns validated records plus
per-row diagnostics, and never drops a malformed row silently. Row numbers in
diagnostics are 1-based over the data rows (the header does not count).
All timestamps are normalized to UTC at parse time; naive timestamps require an
explicit airport timezone.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from datetime import date, datetime, timezone
from typing import BinaryIO, Iterable, Optional, Union
from zoneinfo import ZoneInfo

from .errors import SchemaError, TarmacError

VEHICLE_CLASSES = ("aircraft", "ground_vehicle", "unknown")

WEATHER_NUMERIC_FIELDS = (
    "temperature",
    "humidity",
    "pressure",
    "wind_speed",
    "visibility",
    "precipitation",
)

SCHEDULE_COLUMNS = (
    "flight_id",
    "tail_number",
    "date",
    "sched_gate_out",
    "actual_gate_out",
    "sched_gate_in",
    "actual_gate_in",
    "origin",
    "destination",
    "delay_cause",
)

# Columns that must be mapped by the schedule schema; the rest are optional.
SCHEDULE_REQUIRED = (
    "flight_id",
    "tail_number",
    "sched_gate_out",
    "sched_gate_in",
    "origin",
    "destination",
)

WEATHER_COLUMNS = ("timestamp",) + WEATHER_NUMERIC_FIELDS + ("condition", "wind_direction")

TRAJECTORY_COLUMNS = (
    "vehicle_id",
    "call_sign",
    "timestamp",
    "lat",
    "lon",
    "altitude",
    "vehicle_class",
)


@dataclass(frozen=True)
class RowDiagnostic:
    """One rejected input row: 1-based data-row number plus the reason."""

    row: int
    reason: str


@dataclass(frozen=True)
class FlightRecord:
    flight_id: str
    tail_number: str
    date: date
    sched_gate_out: datetime
    actual_gate_out: Optional[datetime]
    sched_gate_in: datetime
    actual_gate_in: Optional[datetime]
    origin: str
    destination: str
    delay_cause: Optional[str] = None

    @property
    def dep_delay_min(self) -> Optional[float]:
        """Departure delay in minutes; negative means early pushback."""
        if self.actual_gate_out is None:
            return None
        return (self.actual_gate_out - self.sched_gate_out).total_seconds() / 60.0

    @property
    def arr_delay_min(self) -> Optional[float]:
        if self.actual_gate_in is None:
            return None
        return (self.actual_gate_in - self.sched_gate_in).total_seconds() / 60.0


@dataclass(frozen=True)
class WeatherObservation:
    timestamp: datetime
    temperature: float
    humidity: float
    pressure: float
    wind_speed: float
    visibility: float
    precipitation: float
    condition: str
    wind_direction: str


@dataclass(frozen=True)
class GpsPoint:
    vehicle_id: str
    call_sign: Optional[str]
    timestamp: datetime
    lat: float
    lon: float
    altitude: Optional[float]
    vehicle_class: str = "unknown"


def parse_timestamp(text: str, airport_tz: Optional[str] = None) -> datetime:
    """Parse an ISO-8601 timestamp to a UTC-aware datetime.

    An explicit offset (or trailing 'Z') is honored; a naive timestamp is
    interpreted in ``airport_tz`` and raises if none is configured.
    """
    raw = text.strip()
    if not raw:
        raise ValueError("empty timestamp")
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        if airport_tz is None:
            raise ValueError("naive timestamp without configured airport timezone")
        dt = dt.replace(tzinfo=ZoneInfo(airport_tz))
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    """Canonical UTC formatting; fractional seconds only when present."""
    dt = dt.astimezone(timezone.utc)
    if dt.microsecond:
        return dt.strftime("%Y-%m-%dT%H:%M:%S.%f") + "Z"
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def _as_text_lines(source: Union[bytes, BinaryIO]) -> io.TextIOBase:
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(source.decode("utf-8"))
    data = source.read()
    if isinstance(data, str):
        return io.StringIO(data)
    return io.StringIO(data.decode("utf-8"))


def _read_header(reader, what: str) -> list[str]:
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError(f"{what}: empty file, header row required") from None
    return [h.strip() for h in header]


def parse_schedule(
    source: Union[bytes, BinaryIO],
    schema: Optional[dict[str, str]] = None,
    delimiter: str = ",",
    airport_tz: Optional[str] = None,
) -> tuple[list[FlightRecord], list[RowDiagnostic]]:
    """Parse a delimited schedule table into FlightRecords.

    ``schema`` maps the logical field names (see SCHEDULE_COLUMNS) to actual
    column names in the file; by default the canonical names are used. Missing
    required columns are a fatal SchemaError; malformed rows become
    diagnostics.
    """
    schema = dict(schema) if schema else {c: c for c in SCHEDULE_COLUMNS}
    text = _as_text_lines(source)
    reader = csv.reader(text, delimiter=delimiter)
    header = _read_header(reader, "schedule")
    col_index: dict[str, int] = {}
    missing = []
    for logical in SCHEDULE_REQUIRED:
        name = schema.get(logical, logical)
        if name not in header:
            missing.append(name)
        else:
            col_index[logical] = header.index(name)
    if missing:
        raise SchemaError(f"schedule: missing required columns: {', '.join(missing)}")
    for logical in SCHEDULE_COLUMNS:
        if logical in col_index:
            continue
        name = schema.get(logical, logical)
        if name in header:
            col_index[logical] = header.index(name)

    records: list[FlightRecord] = []
    diagnostics: list[RowDiagnostic] = []
    for row_no, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            diagnostics.append(RowDiagnostic(row_no, "blank row"))
            continue
        if len(row) < len(header):
            diagnostics.append(RowDiagnostic(row_no, "truncated row"))
            continue

        def cell(logical: str) -> str:
            idx = col_index.get(logical)
            return row[idx].strip() if idx is not None else ""

        flight_id = cell("flight_id")
        if not flight_id:
            diagnostics.append(RowDiagnostic(row_no, "missing flight_id"))
            continue
        tail = cell("tail_number")
        if not tail:
            diagnostics.append(RowDiagnostic(row_no, "missing tail_number"))
            continue
        try:
            sched_out = parse_timestamp(cell("sched_gate_out"), airport_tz)
            sched_in = parse_timestamp(cell("sched_gate_in"), airport_tz)
            actual_out = (
                parse_timestamp(cell("actual_gate_out"), airport_tz)
                if cell("actual_gate_out")
                else None
            )
            actual_in = (
                parse_timestamp(cell("actual_gate_in"), airport_tz)
                if cell("actual_gate_in")
                else None
            )
        except ValueError as exc:
            diagnostics.append(RowDiagnostic(row_no, f"unparseable timestamp: {exc}"))
            continue
        flight_date = sched_out.date()
        if cell("date"):
            try:
                stated = date.fromisoformat(cell("date"))
            except ValueError:
                diagnostics.append(RowDiagnostic(row_no, "unparseable date"))
                continue
            if stated != flight_date:
                diagnostics.append(
                    RowDiagnostic(row_no, "date does not match sched_gate_out day")
                )
                continue
        records.append(
            FlightRecord(
                flight_id=flight_id,
                tail_number=tail,
                date=flight_date,
                sched_gate_out=sched_out,
                actual_gate_out=actual_out,
                sched_gate_in=sched_in,
                actual_gate_in=actual_in,
                origin=cell("origin"),
                destination=cell("destination"),
                delay_cause=cell("delay_cause") or None,
            )
        )
    return records, diagnostics


def parse_weather(
    source: Union[bytes, BinaryIO],
    delimiter: str = ",",
    airport_tz: Optional[str] = None,
) -> tuple[list[WeatherObservation], list[RowDiagnostic]]:
    """Parse hourly weather observations; output is sorted by timestamp and
    duplicate timestamps are rejected as diagnostics."""
    text = _as_text_lines(source)
    reader = csv.reader(text, delimiter=delimiter)
    header = _read_header(reader, "weather")
    missing = [c for c in WEATHER_COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"weather: missing required columns: {', '.join(missing)}")
    idx = {c: header.index(c) for c in WEATHER_COLUMNS}

    parsed: list[tuple[int, WeatherObservation]] = []
    diagnostics: list[RowDiagnostic] = []
    for row_no, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            diagnostics.append(RowDiagnostic(row_no, "blank row"))
            continue
        if len(row) < len(header):
            diagnostics.append(RowDiagnostic(row_no, "truncated row"))
            continue
        try:
            ts = parse_timestamp(row[idx["timestamp"]], airport_tz)
        except ValueError as exc:
            diagnostics.append(RowDiagnostic(row_no, f"unparseable timestamp: {exc}"))
            continue
        numerics = {}
        bad = None
        for field in WEATHER_NUMERIC_FIELDS:
            cellval = row[idx[field]].strip()
            try:
                numerics[field] = float(cellval)
            except ValueError:
                bad = field
                break
        if bad is not None:
            diagnostics.append(RowDiagnostic(row_no, f"non-numeric {bad}"))
            continue
        parsed.append(
            (
                row_no,
                WeatherObservation(
                    timestamp=ts,
                    condition=row[idx["condition"]].strip(),
                    wind_direction=row[idx["wind_direction"]].strip(),
                    **numerics,
                ),
            )
        )

    parsed.sort(key=lambda item: (item[1].timestamp, item[0]))
    observations: list[WeatherObservation] = []
    last_ts = None
    for row_no, obs in parsed:
        if last_ts is not None and obs.timestamp == last_ts:
            diagnostics.append(RowDiagnostic(row_no, "duplicate timestamp"))
            continue
        observations.append(obs)
        last_ts = obs.timestamp
    return observations, diagnostics


def _point_from_fields(
    fields: dict, row_no: int, airport_tz: Optional[str]
) -> Union[GpsPoint, RowDiagnostic]:
    try:
        ts = parse_timestamp(str(fields["timestamp"]), airport_tz)
        lat = float(fields["lat"])
        lon = float(fields["lon"])
    except (KeyError, TypeError, ValueError) as exc:
        return RowDiagnostic(row_no, f"unparseable point: {exc}")
    if not (-90.0 <= lat <= 90.0):
        return RowDiagnostic(row_no, "lat out of range")
    if not (-180.0 <= lon <= 180.0):
        return RowDiagnostic(row_no, "lon out of range")
    vehicle_id = str(fields.get("vehicle_id") or "").strip()
    if not vehicle_id:
        return RowDiagnostic(row_no, "missing vehicle_id")
    alt_raw = fields.get("altitude")
    altitude: Optional[float]
    if alt_raw is None or (isinstance(alt_raw, str) and not alt_raw.strip()):
        altitude = None
    else:
        try:
            altitude = float(alt_raw)
        except (TypeError, ValueError):
            return RowDiagnostic(row_no, "non-numeric altitude")
    vclass = str(fields.get("vehicle_class") or "").strip()
    if vclass not in VEHICLE_CLASSES:
        vclass = "unknown"
    call_sign = str(fields.get("call_sign") or "").strip() or None
    return GpsPoint(
        vehicle_id=vehicle_id,
        call_sign=call_sign,
        timestamp=ts,
        lat=lat,
        lon=lon,
        altitude=altitude,
        vehicle_class=vclass,
    )


def parse_trajectory_stream(
    source: Union[bytes, BinaryIO],
    delimiter: str = ",",
    airport_tz: Optional[str] = None,
) -> tuple[list[GpsPoint], list[RowDiagnostic]]:
    """Parse GPS points from delimited text or JSON-lines (auto-detected by the
    first non-whitespace byte: '{' means JSON-lines). Points come back in file
    order; a missing altitude is kept as None and filtered downstream."""
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        data = source.read()
        if isinstance(data, str):
            data = data.encode("utf-8")
    try:
        content = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise TarmacError(f"trajectory stream is not valid UTF-8: {exc}") from exc

    stripped = content.lstrip()
    points: list[GpsPoint] = []
    diagnostics: list[RowDiagnostic] = []

    if stripped.startswith("{"):
        for row_no, line in enumerate(content.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                fields = json.loads(line)
            except json.JSONDecodeError:
                diagnostics.append(RowDiagnostic(row_no, "truncated or invalid JSON line"))
                continue
            if not isinstance(fields, dict):
                diagnostics.append(RowDiagnostic(row_no, "JSON line is not an object"))
                continue
            out = _point_from_fields(fields, row_no, airport_tz)
            (points if isinstance(out, GpsPoint) else diagnostics).append(out)
        return points, diagnostics

    reader = csv.reader(io.StringIO(content), delimiter=delimiter)
    header = _read_header(reader, "trajectory")
    missing = [c for c in TRAJECTORY_COLUMNS if c not in header and c != "altitude"]
    if missing:
        raise SchemaError(f"trajectory: missing required columns: {', '.join(missing)}")
    idx = {c: header.index(c) for c in TRAJECTORY_COLUMNS if c in header}
    for row_no, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < len(header):
            diagnostics.append(RowDiagnostic(row_no, "truncated row"))
            continue
        fields = {c: row[i] for c, i in idx.items()}
        out = _point_from_fields(fields, row_no, airport_tz)
        (points if isinstance(out, GpsPoint) else diagnostics).append(out)
    return points, diagnostics


# --- canonical writers (round-trip counterparts of the parsers) ---


def write_schedule(records: Iterable[FlightRecord], stream, delimiter: str = ",") -> None:
    writer = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
    writer.writerow(SCHEDULE_COLUMNS)
    for r in records:
        writer.writerow(
            [
                r.flight_id,
                r.tail_number,
                r.date.isoformat(),
                format_timestamp(r.sched_gate_out),
                format_timestamp(r.actual_gate_out) if r.actual_gate_out else "",
                format_timestamp(r.sched_gate_in),
                format_timestamp(r.actual_gate_in) if r.actual_gate_in else "",
                r.origin,
                r.destination,
                r.delay_cause or "",
            ]
        )


def write_weather(observations: Iterable[WeatherObservation], stream, delimiter: str = ",") -> None:
    writer = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
    writer.writerow(WEATHER_COLUMNS)
    for o in observations:
        writer.writerow(
            [format_timestamp(o.timestamp)]
            + [repr(getattr(o, f)) for f in WEATHER_NUMERIC_FIELDS]
            + [o.condition, o.wind_direction]
        )


def write_trajectories(points: Iterable[GpsPoint], stream, fmt: str = "csv") -> None:
    if fmt == "jsonl":
        for p in points:
            fields = {
                "vehicle_id": p.vehicle_id,
                "call_sign": p.call_sign or "",
                "timestamp": format_timestamp(p.timestamp),
                "lat": p.lat,
                "lon": p.lon,
                "vehicle_class": p.vehicle_class,
            }
            if p.altitude is not None:
                fields["altitude"] = p.altitude
            stream.write(json.dumps(fields, sort_keys=True) + "\n")
        return
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRAJECTORY_COLUMNS)
    for p in points:
        writer.writerow(
            [
                p.vehicle_id,
                p.call_sign or "",
                format_timestamp(p.timestamp),
                repr(p.lat),
                repr(p.lon),
                repr(p.altitude) if p.altitude is not None else "",
                p.vehicle_class,
            ]
        )


def write_diagnostics(diagnostics: Iterable[RowDiagnostic], stream, source_name: str = "") -> None:
    """Sidecar format: diagnostics are never interleaved with data output."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["source", "row", "reason"])
    for d in diagnostics:
        writer.writerow([source_name, d.row, d.reason])
