"""Scenario configuration parsing and report serialization.

Config files are flat ``key = value`` lines; ``#`` starts a comment. Keys
are ScenarioConfig field names, and the CLI spellings (``users``,
``eps-max``, ``reps``, ...) are accepted as aliases. Values given on the
command line override the file.
"""

import csv
from dataclasses import dataclass, fields
import io
import json
import os
import sys

from ridnc.combinatorics import ConfigurationError
from ridnc.harness import REPORT_COLUMNS, GainReport, ScenarioConfig

ALIASES = {
    "users": "n_users",
    "packets": "m_packets",
    "coded": "coded_budget",
    "reps": "replications",
    "seed": "base_seed",
    "timing": "measure_time",
}
REQUIRED = ("n_users", "m_packets", "eps_max")
_FIELD_TYPES = {
    "n_users": int,
    "m_packets": int,
    "eps_max": float,
    "coded_budget": int,
    "feedback_mode": str,
    "feedback": "feedback",
    "encoder": str,
    "replications": int,
    "base_seed": int,
    "oracle_mode": str,
    "include_reception": bool,
    "eps_fixed": float,
    "measure_time": bool,
    "workers": int,
    "scenario": str,
}
FORMATS = ("csv", "json")


@dataclass(frozen=True)
class ValidatedConfig:
    config: ScenarioConfig
    source: str


def canonical_key(key: str) -> str:
    key = key.strip().lower().replace("-", "_")
    return ALIASES.get(key, key)


def _convert(key, raw):
    kind = _FIELD_TYPES[key]
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if kind is bool:
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        if kind is float:
            return None if text.lower() == "none" else float(text)
        if kind == "feedback":
            if text.lower() in ("all", "none", ""):
                return None
            number = float(text)
            return int(number) if number.is_integer() and "." not in text else number
    except ValueError:
        raise ConfigurationError(f"invalid value for {key}: {raw!r}") from None
    return text


def _parse_lines(text):
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        pairs[key] = value
    return pairs


def parse_config(text: str = None, flags: dict = None, source: str = "cli") -> ValidatedConfig:
    """Merge file text and CLI flags (flags win) into a checked config.

    Raises ConfigurationError naming the offending key on unknown keys,
    missing required fields or out-of-range values.
    """
    merged = {}
    for pairs in (_parse_lines(text) if text else {}, flags or {}):
        for key, value in pairs.items():
            if value is None:
                continue
            name = canonical_key(key)
            if name not in _FIELD_TYPES:
                raise ConfigurationError(f"unknown configuration key {key!r}")
            merged[name] = _convert(name, value)
    missing = [k for k in REQUIRED if k not in merged]
    if missing:
        raise ConfigurationError(f"missing required field(s): {', '.join(missing)}")
    if merged.get("feedback_mode") == "by-prob" and isinstance(merged.get("feedback"), int):
        if not 0 <= merged["feedback"] <= 1:
            raise ConfigurationError(
                f"feedback={merged['feedback']!r}: by-prob feedback must be a probability in [0, 1]"
            )
        merged["feedback"] = float(merged["feedback"])
    return ValidatedConfig(ScenarioConfig(**merged).check(), source)


def load_config(path, flags=None) -> ValidatedConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, flags, source=str(path))


def _fmt(value):
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def _round6(value):
    return float(format(value, ".6g")) if isinstance(value, float) else value


def report_row(report: GainReport) -> dict:
    return {name: getattr(report, name) for name in REPORT_COLUMNS}


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for report in reports:
        writer.writerow([_fmt(v) for v in report_row(report).values()])
    return buf.getvalue()


def reports_to_json(reports) -> str:
    rows = [{k: _round6(v) for k, v in report_row(r).items()} for r in reports]
    return json.dumps(rows[0] if len(rows) == 1 else rows, indent=2) + "\n"


def write_report(reports, fmt: str = "csv", destination=None):
    """Write one report or a list of them as CSV or JSON.

    ``destination`` is a path, an open text file, or None / "-" for stdout.
    Floats carry six significant digits.
    """
    if fmt not in FORMATS:
        raise ConfigurationError(f"unknown output format {fmt!r}; expected csv or json")
    if isinstance(reports, GainReport):
        reports = [reports]
    text = reports_to_csv(reports) if fmt == "csv" else reports_to_json(reports)
    if destination is None or destination == "-":
        sys.stdout.write(text)
    elif hasattr(destination, "write"):
        destination.write(text)
    else:
        try:
            with open(destination, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {os.fspath(destination)}: {exc.strerror}") from exc


def _from_row(row):
    kinds = {f.name: f.type for f in fields(GainReport)}
    values = {}
    for name in REPORT_COLUMNS:
        value = row[name]
        if kinds[name] in ("int", int):
            value = int(value)
        elif kinds[name] in ("float", float):
            value = float(value)
        values[name] = value
    return GainReport(**values)


def read_reports_json(text: str) -> list:
    data = json.loads(text)
    rows = data if isinstance(data, list) else [data]
    return [_from_row(row) for row in rows]


def read_reports_csv(text: str) -> list:
    reader = csv.DictReader(io.StringIO(text))
    return [_from_row(row) for row in reader]
