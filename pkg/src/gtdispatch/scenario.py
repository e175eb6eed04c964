"""Hourly scenario data: CSV ingestion and synthetic generators.

A scenario is an aligned set of hourly series (pool price, industrial
demand, ambient temperature/pressure/humidity).  Ingestion is strict: a
missing hour or a malformed row is an error, never imputed.  The
generators are pure functions of their parameters and seed and are
calibrated to Alberta-like ranges.
"""
from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import AlignmentError, ConfigurationError, DomainError, ScenarioParseError
from .surrogate import AmbientConditions

HOURS_PER_YEAR = 8760
DEFAULT_START = np.datetime64("2018-01-01T00", "h")

PRICE_FILE = "price.csv"
WEATHER_FILE = "weather.csv"
DEMAND_FILE = "demand.csv"
PRICE_HEADER = ("timestamp", "pool_price_cad_per_mwh")
WEATHER_HEADER = ("timestamp", "temp_c", "pressure_kpa", "rel_humidity_pct")
DEMAND_HEADER = ("timestamp", "demand_mw")

PRICE_CAP = 999.99


def hourly_index(hours: int = HOURS_PER_YEAR, start=DEFAULT_START) -> np.ndarray:
    return np.datetime64(start, "h") + np.arange(hours).astype("timedelta64[h]")


@dataclass(frozen=True, eq=False)
class ScenarioTable:
    """Aligned hourly inputs for one episode.

    Arrays are copied to read-only float arrays on construction.  A full
    episode is 8760 hours; shorter tables are allowed for toy problems and
    sliced windows, the environment decides which lengths it accepts.
    """

    timestamps: np.ndarray
    price: np.ndarray
    demand: np.ndarray
    temperature: np.ndarray
    pressure: np.ndarray
    rel_humidity: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[h]").copy()
        n = len(ts)
        if n == 0:
            raise ConfigurationError("scenario must contain at least one hour")
        if n > 1 and np.any(np.diff(ts) != np.timedelta64(1, "h")):
            raise ConfigurationError("timestamps must be strictly increasing in hourly steps")
        ts.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        for name in ("price", "demand", "temperature", "pressure", "rel_humidity"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ConfigurationError(f"{name} has shape {arr.shape}, expected ({n},)")
            if not np.all(np.isfinite(arr)):
                raise ConfigurationError(f"{name} contains non-finite values")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.demand < 0):
            raise ConfigurationError("demand must be non-negative")
        if np.any(self.pressure <= 0):
            raise ConfigurationError("pressure must be positive")
        if np.any((self.rel_humidity < 0) | (self.rel_humidity > 100)):
            raise ConfigurationError("rel_humidity must lie in [0, 100]")

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def hours(self) -> int:
        return len(self.timestamps)

    def ambient(self, hour: int) -> AmbientConditions:
        return AmbientConditions(float(self.temperature[hour]), float(self.pressure[hour]),
                                 float(self.rel_humidity[hour]))

    def window(self, start: int, hours: int) -> "ScenarioTable":
        """Sub-table of ``hours`` consecutive rows from ``start``."""
        if start < 0 or hours < 1 or start + hours > len(self):
            raise DomainError(f"window [{start}, {start + hours}) outside scenario of {len(self)} hours")
        sl = slice(start, start + hours)
        return ScenarioTable(self.timestamps[sl], self.price[sl], self.demand[sl],
                             self.temperature[sl], self.pressure[sl], self.rel_humidity[sl])

    def equals(self, other: "ScenarioTable") -> bool:
        return all(np.array_equal(getattr(self, k), getattr(other, k))
                   for k in ("timestamps", "price", "demand", "temperature", "pressure", "rel_humidity"))

    @classmethod
    def constant(cls, hours: int, price: float | Sequence[float], demand: float | Sequence[float],
                 temperature: float | Sequence[float] = 15.0, pressure: float | Sequence[float] = 101.325,
                 rel_humidity: float | Sequence[float] = 60.0, start=DEFAULT_START) -> "ScenarioTable":
        """Build a table from scalars or sequences (scalars are broadcast)."""
        def col(v):
            return np.broadcast_to(np.asarray(v, dtype=float), (hours,))
        return cls(hourly_index(hours, start), col(price), col(demand), col(temperature),
                   col(pressure), col(rel_humidity))


# --------------------------------------------------------------------------- CSV I/O

def _iso(ts: np.datetime64) -> str:
    return str(np.datetime64(ts, "s")).replace("T", "T", 1)


def _parse_timestamp(text: str, path, line: int) -> np.datetime64:
    try:
        parsed = dt.datetime.fromisoformat(text.strip())
    except ValueError:
        raise ScenarioParseError(path, line, f"invalid ISO-8601 timestamp {text!r}") from None
    if parsed.tzinfo is not None:
        parsed = parsed.astimezone(dt.timezone.utc).replace(tzinfo=None)
    if parsed.minute or parsed.second or parsed.microsecond:
        raise ScenarioParseError(path, line, f"timestamp {text!r} is not on the hour")
    return np.datetime64(parsed, "h")


def _read_csv(path, header: tuple[str, ...]) -> tuple[np.ndarray, np.ndarray]:
    path = Path(path)
    stamps, values = [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise ScenarioParseError(path, 1, "empty file, header row required") from None
        if tuple(c.strip() for c in first) != header:
            raise ScenarioParseError(path, 1, f"expected header {','.join(header)}, got {','.join(first)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ScenarioParseError(path, line, f"expected {len(header)} fields, got {len(row)}")
            stamps.append(_parse_timestamp(row[0], path, line))
            rec = []
            for name, cell in zip(header[1:], row[1:]):
                try:
                    v = float(cell)
                except ValueError:
                    raise ScenarioParseError(path, line, f"non-numeric {name} value {cell!r}") from None
                if not np.isfinite(v):
                    raise ScenarioParseError(path, line, f"non-finite {name} value {cell!r}")
                rec.append(v)
            values.append(rec)
    if not stamps:
        raise ScenarioParseError(path, 2, "no data rows")
    ts = np.array(stamps, dtype="datetime64[h]")
    vals = np.array(values, dtype=float).reshape(len(stamps), len(header) - 1)
    steps = np.diff(ts)
    bad = np.flatnonzero(steps != np.timedelta64(1, "h"))
    if bad.size:
        i = int(bad[0])
        if steps[i] > np.timedelta64(1, "h"):
            raise AlignmentError(ts[i] + np.timedelta64(1, "h"), f"{path.name}: missing hour")
        raise ScenarioParseError(path, i + 3, f"timestamp {ts[i + 1]} is not after {ts[i]}")
    return ts, vals


def load_scenario_csv(price_path, weather_path, demand_path, hours: int | None = HOURS_PER_YEAR) -> ScenarioTable:
    """Read and align the three hourly CSV files.

    :param hours: required row count; ``None`` accepts any common length.
    :raises ScenarioParseError: malformed row (message carries the line number).
    :raises AlignmentError: the files do not cover identical hours.
    """
    files = {"price": (price_path, PRICE_HEADER), "weather": (weather_path, WEATHER_HEADER),
             "demand": (demand_path, DEMAND_HEADER)}
    data = {k: _read_csv(p, h) for k, (p, h) in files.items()}
    ref = data["price"][0]
    for key in ("weather", "demand"):
        ts = data[key][0]
        union = np.union1d(ref, ts)
        missing_here = np.setdiff1d(union, ts)
        missing_ref = np.setdiff1d(union, ref)
        if missing_here.size:
            raise AlignmentError(missing_here[0], f"{Path(files[key][0]).name}: missing hour")
        if missing_ref.size:
            raise AlignmentError(missing_ref[0], f"{Path(price_path).name}: missing hour")
    if hours is not None and len(ref) != hours:
        raise AlignmentError(ref[-1] + np.timedelta64(1, "h"),
                             f"scenario has {len(ref)} hours, expected {hours}; data ends")
    w = data["weather"][1]
    return ScenarioTable(ref, data["price"][1][:, 0], data["demand"][1][:, 0], w[:, 0], w[:, 1], w[:, 2])


def load_scenario_dir(directory, hours: int | None = HOURS_PER_YEAR) -> ScenarioTable:
    d = Path(directory)
    return load_scenario_csv(d / PRICE_FILE, d / WEATHER_FILE, d / DEMAND_FILE, hours=hours)


def write_scenario_csv(table: ScenarioTable, directory) -> dict[str, Path]:
    """Write ``price.csv``, ``weather.csv`` and ``demand.csv`` into ``directory``.

    Floats are written with ``repr`` so that reading back is lossless.
    """
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    stamps = [_iso(t) for t in table.timestamps]
    out = {}
    specs = [
        (PRICE_FILE, PRICE_HEADER, (table.price,)),
        (WEATHER_FILE, WEATHER_HEADER, (table.temperature, table.pressure, table.rel_humidity)),
        (DEMAND_FILE, DEMAND_HEADER, (table.demand,)),
    ]
    for name, header, cols in specs:
        path = d / name
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for i, s in enumerate(stamps):
                w.writerow([s] + [repr(float(c[i])) for c in cols])
        out[name] = path
    return out


# --------------------------------------------------------------------------- generators

_WEATHER_STREAM, _PRICE_STREAM, _DEMAND_STREAM = 1, 2, 3


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), stream])


def _ar1(rng: np.random.Generator, n: int, phi: float, std: float) -> np.ndarray:
    """Stationary AR(1) path with marginal standard deviation ``std``."""
    eps = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = eps[0] * std
    innov = std * np.sqrt(1.0 - phi * phi)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + innov * eps[t]
    return x


@dataclass(frozen=True)
class WeatherParams:
    mean_temp: float = 3.0
    annual_amplitude: float = 18.0
    coldest_day: float = 15.0
    diurnal_amplitude: float = 6.0
    warmest_hour: float = 15.0
    noise_std: float = 6.5
    noise_phi: float = 0.98
    pressure_mean: float = 93.0
    pressure_std: float = 0.6
    pressure_bounds: tuple[float, float] = (88.0, 98.0)
    humidity_mean: float = 60.0
    humidity_std: float = 15.0
    humidity_bounds: tuple[float, float] = (5.0, 100.0)


@dataclass(frozen=True, eq=False)
class WeatherSeries:
    temperature: np.ndarray
    pressure: np.ndarray
    rel_humidity: np.ndarray


def generate_weather(seed: int = 0, params: WeatherParams = WeatherParams(),
                     hours: int = HOURS_PER_YEAR) -> WeatherSeries:
    """Synthetic ambient year: seasonal and diurnal sinusoids plus AR(1) noise."""
    rng = _rng(seed, _WEATHER_STREAM)
    t = np.arange(hours, dtype=float)
    day = t / 24.0
    hour = t % 24.0
    temp = (params.mean_temp
            - params.annual_amplitude * np.cos(2 * np.pi * (day - params.coldest_day) / 365.0)
            + params.diurnal_amplitude * np.cos(2 * np.pi * (hour - params.warmest_hour) / 24.0)
            + _ar1(rng, hours, params.noise_phi, params.noise_std))
    temp = np.clip(temp, -60.0, 60.0)
    pressure = np.clip(params.pressure_mean + params.pressure_std * rng.standard_normal(hours),
                       *params.pressure_bounds)
    humidity = np.clip(params.humidity_mean + params.humidity_std * rng.standard_normal(hours),
                       *params.humidity_bounds)
    return WeatherSeries(temp, pressure, humidity)


@dataclass(frozen=True)
class PriceParams:
    median: float = 30.0
    sigma: float = 0.5
    phi: float = 0.7
    diurnal_amplitude: float = 0.3
    peak_hour: float = 17.0
    spike_probability: float = 0.02
    spike_multiplier: tuple[float, float] = (3.0, 15.0)
    cap: float = PRICE_CAP


def generate_prices(seed: int = 0, params: PriceParams = PriceParams(), hours: int = HOURS_PER_YEAR,
                    return_spikes: bool = False):
    """Synthetic pool prices in C$/MWh.

    Log-price is a diurnal cosine around ``log(median)`` plus AR(1) noise;
    Bernoulli spike hours multiply the price by U(3, 15).  Prices are clipped
    to [0, cap].  With ``return_spikes`` the boolean spike mask is returned too.
    """
    rng = _rng(seed, _PRICE_STREAM)
    hour = np.arange(hours) % 24
    log_p = (np.log(params.median)
             + params.diurnal_amplitude * np.cos(2 * np.pi * (hour - params.peak_hour) / 24.0)
             + _ar1(rng, hours, params.phi, params.sigma))
    spikes = rng.random(hours) < params.spike_probability
    mult = rng.uniform(*params.spike_multiplier, size=hours)
    price = np.exp(log_p) * np.where(spikes, mult, 1.0)
    price = np.clip(price, 0.0, params.cap)
    return (price, spikes) if return_spikes else price


def _default_holidays() -> tuple[str, ...]:
    statutory = ("2018-01-01", "2018-02-19", "2018-03-30", "2018-05-21", "2018-07-02",
                 "2018-08-06", "2018-09-03", "2018-10-08", "2018-11-12")
    closure = tuple(f"2018-12-{d}" for d in range(24, 32))
    return statutory + closure


@dataclass(frozen=True)
class DemandParams:
    """Weekly shift template and perturbations for the industrial load.

    Levels are in MW.  Day shift covers hours ``shift_start`` to
    ``shift_end - 1`` on Monday to Friday.
    """

    day_shift_level: float = 25.0
    night_level: float = 8.0
    weekend_level: float = 6.0
    noise_fraction: float = 0.1
    hot_cold_boost: float = 3.0
    holiday_calendar: tuple[str, ...] = field(default_factory=_default_holidays)
    seed: int = 0
    shift_start: int = 7
    shift_end: int = 17

    def __post_init__(self):
        if min(self.day_shift_level, self.night_level, self.weekend_level, self.hot_cold_boost) < 0:
            raise DomainError("demand levels must be non-negative")
        if not 0.0 <= self.noise_fraction <= 0.5:
            raise DomainError("noise_fraction must be in [0, 0.5]")
        if not 0 <= self.shift_start < self.shift_end <= 24:
            raise DomainError("need 0 <= shift_start < shift_end <= 24")


def weekly_template(params: DemandParams, timestamps: np.ndarray) -> np.ndarray:
    ts = np.asarray(timestamps, dtype="datetime64[h]")
    hour = (ts - ts.astype("datetime64[D]")).astype(int)
    # 1970-01-01 was a Thursday; shift so Monday == 0
    weekday = (ts.astype("datetime64[D]").astype(np.int64) + 3) % 7
    workday = weekday < 5
    shift = (hour >= params.shift_start) & (hour < params.shift_end)
    return np.where(workday, np.where(shift, params.day_shift_level, params.night_level), params.weekend_level)


def generate_demand(params: DemandParams = DemandParams(), temperature: np.ndarray | None = None,
                    timestamps: np.ndarray | None = None) -> np.ndarray:
    """Synthetic shift-based demand in MW.

    ``temperature`` drives the hot/cold boost (strictly above the 90th or
    below the 10th percentile); by default the synthetic weather of
    ``params.seed`` is used.
    """
    if timestamps is None:
        timestamps = hourly_index(HOURS_PER_YEAR)
    n = len(timestamps)
    if temperature is None:
        temperature = generate_weather(params.seed, hours=n).temperature
    temperature = np.asarray(temperature, dtype=float)
    if temperature.shape != (n,):
        raise DomainError("temperature and timestamps must have equal length")
    rng = _rng(params.seed, _DEMAND_STREAM)
    demand = weekly_template(params, timestamps)
    demand = demand * rng.uniform(1.0 - params.noise_fraction, 1.0 + params.noise_fraction, size=n)
    lo, hi = np.percentile(temperature, [10, 90])
    extreme = (temperature > hi) | (temperature < lo)
    demand = demand + np.where(extreme, params.hot_cold_boost, 0.0)
    if params.holiday_calendar:
        days = np.asarray(timestamps, dtype="datetime64[h]").astype("datetime64[D]")
        closed = np.isin(days, np.array(params.holiday_calendar, dtype="datetime64[D]"))
        demand = np.where(closed, 0.0, demand)
    return demand


def generate_scenario(seed: int = 0, demand_params: DemandParams | None = None,
                      weather_params: WeatherParams = WeatherParams(),
                      price_params: PriceParams = PriceParams()) -> ScenarioTable:
    """Full synthetic year; every component derives from ``seed``."""
    ts = hourly_index(HOURS_PER_YEAR)
    weather = generate_weather(seed, weather_params)
    prices = generate_prices(seed, price_params)
    if demand_params is None:
        demand_params = DemandParams(seed=seed)
    demand = generate_demand(demand_params, weather.temperature, ts)
    return ScenarioTable(ts, prices, demand, weather.temperature, weather.pressure, weather.rel_humidity)
