import json
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from core.cleaner.visit_cleaner import RULE_BOARDING, RULE_TREATMENT, RULE_WAITING, VisitCleaner
from core.errors import ConfigError
from core.ingest.sources import (
    ED_TRACKING_COLUMNS,
    INPATIENT_COLUMNS,
    SOURCE_FILES,
    TIMESTAMP_FORMAT,
    WEATHER_COLUMNS,
    serialize_dates,
)
from core.ingest.timeline import ONE_HOUR
from core.preprocess.transforms import WEATHER_GROUPS
from core.runlog import log
from core.synth.scenario import DurationSpec, ScenarioConfig

HOUR = 3600
MINUTE = 60
GROUND_TRUTH_FILE = "ground_truth.csv"
INJECTIONS_FILE = "injections.json"
GROUND_TRUTH_COLUMNS = ["hour", "boarding_count", "waiting_count", "treatment_count", "hospital_census"]
_BURN_IN_DAYS = 30
_MAX_STAY_MINUTES = 365 * 24 * 60


def _nth_weekday(year: int, month: int, weekday: int, n: int) -> date:
    if n > 0:
        first = date(year, month, 1)
        return first + timedelta(days=(weekday - first.weekday()) % 7 + 7 * (n - 1))
    following = date(year + 1, 1, 1) if month == 12 else date(year, month + 1, 1)
    last = following - timedelta(days=1)
    return last - timedelta(days=(last.weekday() - weekday) % 7)


def federal_holidays(year: int) -> List[date]:
    days = [
        date(year, 1, 1),
        _nth_weekday(year, 1, 0, 3),
        _nth_weekday(year, 2, 0, 3),
        _nth_weekday(year, 5, 0, -1),
        date(year, 7, 4),
        _nth_weekday(year, 9, 0, 1),
        _nth_weekday(year, 10, 0, 2),
        date(year, 11, 11),
        _nth_weekday(year, 11, 3, 4),
        date(year, 12, 25),
    ]
    if year >= 2021:
        days.append(date(year, 6, 19))
    return sorted(days)


def _season_dates(rng: np.random.Generator, year: int, weekday: int, months: List[int], count: int) -> List[date]:
    candidates = [
        d.date() for d in pd.date_range(date(year, months[0], 1), _nth_weekday(year, months[-1], weekday, -1))
        if d.weekday() == weekday and d.month in months
    ]
    if not candidates or count <= 0:
        return []
    picked = rng.choice(len(candidates), size=min(count, len(candidates)), replace=False)
    return sorted(candidates[i] for i in picked)


def lognormal_minutes(rng: np.random.Generator, spec: DurationSpec, size: int, max_minutes: int) -> np.ndarray:
    """Whole-minute durations with the given mean and CV, clipped to ``max_minutes``."""
    sigma2 = np.log1p(spec.cv ** 2)
    mu = np.log(spec.mean_hours * 60.0) - sigma2 / 2.0
    draws = rng.lognormal(mu, np.sqrt(sigma2), size)
    return np.clip(np.rint(draws), 0, max_minutes).astype(np.int64)


def snapshot_counts(starts: np.ndarray, ends: np.ndarray, t0: int, n_hours: int) -> np.ndarray:
    """Top-of-hour occupancy from a difference array over hour slots."""
    first = np.clip(-((t0 - starts) // HOUR), 0, n_hours)
    stop = np.clip(-((t0 - ends) // HOUR), 0, n_hours)
    diff = np.zeros(n_hours + 1, dtype=np.int64)
    np.add.at(diff, first, 1)
    np.add.at(diff, stop, -1)
    return np.cumsum(diff)[:n_hours]


def _format(seconds: np.ndarray, present: Optional[np.ndarray] = None) -> np.ndarray:
    text = pd.to_datetime(seconds, unit="s").strftime(TIMESTAMP_FORMAT).to_numpy(dtype=object)
    if present is not None:
        text[~present] = ""
    return text


@dataclass
class GeneratedData:
    out_dir: str
    files: Dict[str, str] = field(default_factory=dict)
    counts: Dict[str, int] = field(default_factory=dict)
    injections: Dict[str, List[str]] = field(default_factory=dict)
    ground_truth: Optional[pd.DataFrame] = None

    def summary(self) -> Dict:
        out: Dict = {"counts": dict(self.counts), "files": dict(self.files)}
        if self.ground_truth is not None:
            for col in GROUND_TRUTH_COLUMNS[1:]:
                v = self.ground_truth[col].to_numpy(dtype=float)
                out[col] = {"mean": round(float(v.mean()), 3), "std": round(float(v.std()), 3)}
        return out


class ScenarioGenerator:
    """Draws the five source files and hourly ground truth for one scenario."""

    def __init__(self, scenario: ScenarioConfig, seed: Optional[int] = None) -> None:
        scenario.validate()
        self.scenario = scenario
        self.seed = int(scenario.seed if seed is None else seed)
        self.rng = np.random.default_rng(self.seed)
        self.start = pd.Timestamp(scenario.start).normalize()
        self.end = pd.Timestamp(scenario.end).normalize() + pd.Timedelta(hours=23)
        self.hours = pd.date_range(self.start, self.end, freq=ONE_HOUR)
        self.t0 = int(self.start.value // 10 ** 9)

    def calendar(self) -> Dict[str, List[date]]:
        s = self.scenario
        first, last = self.start.date(), self.end.date()
        holidays, game1, game2 = [], [], []
        for year in range(first.year, last.year + 1):
            holidays += federal_holidays(year)
            game1 += _season_dates(self.rng, year, 5, [9, 10, 11], s.game1_per_season)
            game2 += _season_dates(self.rng, year, 6, [9, 10, 11, 12], s.game2_per_season)

        def _inside(days: List[date]) -> List[date]:
            return [d for d in days if first <= d <= last]

        return {"holidays": _inside(holidays), "game1": _inside(game1), "game2": _inside(game2)}

    def weather(self) -> pd.DataFrame:
        s = self.scenario
        n = len(self.hours)
        names = list(s.condition_probabilities)
        probs = np.array([s.condition_probabilities[c] for c in names])
        blocks = -(-n // s.condition_block_hours)
        picks = self.rng.choice(len(names), size=blocks, p=probs)
        conditions = np.array(names, dtype=object)[np.repeat(picks, s.condition_block_hours)[:n]]
        doy = self.hours.dayofyear.to_numpy()
        hour = self.hours.hour.to_numpy()
        temp = (
            s.temperature_mean_f
            + s.temperature_annual_amplitude * np.sin(2 * np.pi * (doy - 105) / 365.25)
            + s.temperature_daily_amplitude * np.cos(2 * np.pi * (hour - 15) / 24.0)
            + self.rng.normal(0.0, s.temperature_noise, n)
        )
        return pd.DataFrame({"hour": self.hours, "condition": conditions, "temperature_f": np.round(temp, 1)})

    def arrival_rates(self, weather: pd.DataFrame, calendar: Dict[str, List[date]]) -> np.ndarray:
        s = self.scenario
        hours = self.hours
        years = (hours - self.start).total_seconds().to_numpy() / (365.25 * 86400.0)
        rate = s.base_rate * (1.0 + s.trend_per_year * years)
        rate = rate * (1.0 + s.daily_amplitude * np.cos(2 * np.pi * (hours.hour.to_numpy() - s.daily_peak_hour) / 24.0))
        rate = rate * (1.0 + s.weekly_amplitude * np.cos(2 * np.pi * hours.dayofweek.to_numpy() / 7.0))
        dates = hours.date
        for key, mult in (("holidays", s.holiday_multiplier), ("game1", s.game1_multiplier), ("game2", s.game2_multiplier)):
            marked = set(calendar[key])
            flagged = np.array([d in marked for d in dates], dtype=bool)
            rate = np.where(flagged, rate * mult, rate)
        groups = [WEATHER_GROUPS[c] for c in weather["condition"]]
        rate = rate * np.array([s.weather_multipliers.get(g, 1.0) for g in groups])
        rate = rate * (1.0 + s.temperature_coefficient * (weather["temperature_f"].to_numpy() - 60.0))
        return np.maximum(rate, 0.0)

    def generate(self, out_dir: str, verbose: bool = False) -> GeneratedData:
        s = self.scenario
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rng = self.rng
        n_hours = len(self.hours)

        calendar = self.calendar()
        weather = self.weather()
        rates = self.arrival_rates(weather, calendar)
        if rates.sum() <= 0:
            raise ConfigError(f"Scenario {s.name} produces no arrivals")

        # Clean ED visits.
        counts = rng.poisson(rates)
        hour_secs = self.t0 + HOUR * np.arange(n_hours, dtype=np.int64)
        arrival = np.sort(np.repeat(hour_secs, counts) + MINUTE * rng.integers(0, 60, size=int(counts.sum())))
        v = len(arrival)
        cleaner = VisitCleaner()
        wait_cap = int(cleaner.waiting_max_hours * 60) - 1
        treat_cap = int(cleaner.treatment_max_hours * 60) - 1
        board_cap = int(cleaner.boarding_max_hours * 60) - 1
        wait = lognormal_minutes(rng, s.waiting, v, wait_cap)
        treat = lognormal_minutes(rng, s.treatment, v, treat_cap)
        board = lognormal_minutes(rng, s.boarding, v, board_cap)
        admitted = rng.random(v) < s.admission_probability
        esi_labels = list(s.esi_mix)
        esi_idx = rng.choice(len(esi_labels), size=v, p=np.array([s.esi_mix[k] for k in esi_labels]))
        esi_missing = rng.random(v) < s.esi_missing_rate

        waiting_end = arrival + MINUTE * wait
        treatment_end = waiting_end + MINUTE * treat
        checkout = np.where(admitted, treatment_end + MINUTE * board, treatment_end)
        esi_text = np.array(esi_labels, dtype=object)[esi_idx]
        esi_text[esi_missing] = ""
        visit_ids = np.array([f"V{i:07d}" for i in range(v)], dtype=object)

        # Dirty visits, one block per cleaning rule.
        dirty_parts = []
        injections: Dict[str, List[str]] = {}
        next_id = 0
        overrides = ((RULE_WAITING, 90), (RULE_BOARDING, 60), (RULE_TREATMENT, 60))
        for rule, spread_days in overrides:
            k = int(round(s.dirty_rates.get(rule, 0.0) * v))
            ids = [f"D{next_id + j:06d}" for j in range(k)]
            next_id += k
            injections[rule] = ids
            if k == 0:
                continue
            d_arrival = self.t0 + MINUTE * rng.integers(0, n_hours * 60, size=k)
            d_wait = lognormal_minutes(rng, s.waiting, k, wait_cap)
            d_treat = lognormal_minutes(rng, s.treatment, k, treat_cap)
            d_board = lognormal_minutes(rng, s.boarding, k, board_cap)
            extra = 1 + rng.integers(0, spread_days * 24 * 60, size=k)
            d_admitted = np.zeros(k, dtype=bool)
            if rule == RULE_WAITING:
                d_wait = wait_cap + 1 + extra
            elif rule == RULE_BOARDING:
                d_board = board_cap + 1 + extra
                d_admitted[:] = True
            else:
                d_treat = treat_cap + 1 + extra
            d_wend = d_arrival + MINUTE * d_wait
            d_tend = d_wend + MINUTE * d_treat
            dirty_parts.append({
                "visit_id": np.array(ids, dtype=object),
                "arrival": d_arrival,
                "waiting_end": d_wend,
                "treatment_end": d_tend,
                "admitted": d_admitted,
                "checkout": np.where(d_admitted, d_tend + MINUTE * d_board, d_tend),
                "esi": np.array(["3"] * k, dtype=object),
            })
        injections["esi_missing"] = [str(x) for x in visit_ids[esi_missing]]

        parts = [{
            "visit_id": visit_ids,
            "arrival": arrival,
            "waiting_end": waiting_end,
            "treatment_end": treatment_end,
            "admitted": admitted,
            "checkout": checkout,
            "esi": esi_text,
        }] + dirty_parts
        merged = {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}
        order = np.lexsort((merged["visit_id"].astype(str), merged["arrival"]))
        merged = {key: value[order] for key, value in merged.items()}
        ed = pd.DataFrame({
            "visit_id": merged["visit_id"],
            "arrival": _format(merged["arrival"]),
            "waiting_start": _format(merged["arrival"]),
            "waiting_end": _format(merged["waiting_end"]),
            "treatment_start": _format(merged["waiting_end"]),
            "treatment_end": _format(merged["treatment_end"]),
            "bed_request": _format(merged["treatment_end"], merged["admitted"]),
            "checkout": _format(merged["checkout"]),
            "esi": merged["esi"],
        }, columns=ED_TRACKING_COLUMNS)

        # Inpatient stays: ED admissions plus direct admissions with a burn-in period.
        adm_ids = visit_ids[admitted]
        adm_arrival = checkout[admitted]
        burn_hours = _BURN_IN_DAYS * 24
        direct_hours = self.t0 + HOUR * np.arange(-burn_hours, n_hours, dtype=np.int64)
        direct_counts = rng.poisson(s.direct_admission_rate, size=len(direct_hours))
        direct_arrival = np.sort(
            np.repeat(direct_hours, direct_counts) + MINUTE * rng.integers(0, 60, size=int(direct_counts.sum()))
        )
        direct_ids = np.array([f"I{i:07d}" for i in range(len(direct_arrival))], dtype=object)
        stay_ids = np.concatenate([adm_ids, direct_ids])
        stay_arrival = np.concatenate([adm_arrival, direct_arrival])
        stay_los = lognormal_minutes(rng, s.length_of_stay, len(stay_arrival), _MAX_STAY_MINUTES)
        stay_discharge = stay_arrival + MINUTE * stay_los
        keep = stay_discharge > self.t0
        stay_ids, stay_arrival, stay_discharge = stay_ids[keep], stay_arrival[keep], stay_discharge[keep]
        stay_order = np.lexsort((stay_ids.astype(str), stay_arrival))
        inpatient = pd.DataFrame({
            "visit_id": stay_ids[stay_order],
            "arrival": _format(stay_arrival[stay_order]),
            "discharge": _format(stay_discharge[stay_order]),
        }, columns=INPATIENT_COLUMNS)

        # Ground truth by direct bookkeeping over clean visits only.
        truth = pd.DataFrame({
            "hour": self.hours,
            "boarding_count": snapshot_counts(treatment_end[admitted], checkout[admitted], self.t0, n_hours),
            "waiting_count": snapshot_counts(arrival, waiting_end, self.t0, n_hours),
            "treatment_count": snapshot_counts(waiting_end, treatment_end, self.t0, n_hours),
            "hospital_census": snapshot_counts(stay_arrival, stay_discharge, self.t0, n_hours),
        }, columns=GROUND_TRUTH_COLUMNS)

        files = {
            "ed_tracking": out / SOURCE_FILES["ed_tracking"],
            "inpatient": out / SOURCE_FILES["inpatient"],
            "weather": out / SOURCE_FILES["weather"],
            "holidays": out / SOURCE_FILES["holidays"],
            "game1": out / SOURCE_FILES["game1"],
            "game2": out / SOURCE_FILES["game2"],
            "ground_truth": out / GROUND_TRUTH_FILE,
            "injections": out / INJECTIONS_FILE,
            "scenario": out / "scenario.json",
        }
        ed.to_csv(files["ed_tracking"], index=False, lineterminator="\n")
        inpatient.to_csv(files["inpatient"], index=False, lineterminator="\n")
        weather.to_csv(
            files["weather"], index=False, columns=WEATHER_COLUMNS, lineterminator="\n",
            date_format=TIMESTAMP_FORMAT, float_format="%.1f",
        )
        for key in ("holidays", "game1", "game2"):
            files[key].write_bytes(serialize_dates(calendar[key]))
        truth.to_csv(files["ground_truth"], index=False, lineterminator="\n", date_format=TIMESTAMP_FORMAT)
        with open(files["injections"], "w", encoding="utf-8") as f:
            json.dump(injections, f, indent=2, sort_keys=True)
        with open(files["scenario"], "w", encoding="utf-8") as f:
            json.dump(dict(s.to_dict(), seed=self.seed), f, indent=2, sort_keys=True)

        result = GeneratedData(
            out_dir=str(out),
            files={k: str(p) for k, p in files.items()},
            counts={
                "hours": n_hours,
                "clean_visits": v,
                "dirty_visits": next_id,
                "admitted": int(admitted.sum()),
                "esi_missing": int(esi_missing.sum()),
                "inpatient_stays": len(inpatient),
                "holidays": len(calendar["holidays"]),
                "game1": len(calendar["game1"]),
                "game2": len(calendar["game2"]),
            },
            injections=injections,
            ground_truth=truth,
        )
        if verbose:
            log(f"[Synth] {s.name} seed={self.seed}: {v} visits, {next_id} dirty, {len(inpatient)} stays, {n_hours} hours")
        return result


def generate(scenario: ScenarioConfig, out_dir: str, seed: Optional[int] = None, verbose: bool = False) -> GeneratedData:
    return ScenarioGenerator(scenario, seed).generate(out_dir, verbose=verbose)
