from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Dict, List, Optional, Sequence, Tuple

from core.ingest.records import OB_MARKER, VisitTimeline

RULE_WAITING = "waiting_over_limit"
RULE_BOARDING = "boarding_over_limit"
RULE_TREATMENT = "treatment_stuck"
RULES = (RULE_WAITING, RULE_BOARDING, RULE_TREATMENT)


def _hours_between(start: Optional[datetime], end: Optional[datetime]) -> float:
    if start is None or end is None:
        return 0.0
    return (end - start).total_seconds() / 3600.0


@dataclass
class CleaningReport:
    input_count: int = 0
    kept_count: int = 0
    excluded: Dict[str, List[str]] = field(default_factory=lambda: {r: [] for r in RULES})
    esi_imputed: int = 0
    esi_imputed_ids: List[str] = field(default_factory=list)
    esi_ob_mapped: int = 0

    def count(self, rule: str) -> int:
        return len(self.excluded.get(rule, []))

    def fraction(self, n: int) -> float:
        return round(n / self.input_count, 6) if self.input_count else 0.0

    def to_dict(self) -> Dict:
        rules = {
            rule: {"count": self.count(rule), "fraction": self.fraction(self.count(rule)), "visit_ids": list(ids)}
            for rule, ids in self.excluded.items()
        }
        return {
            "input_count": self.input_count,
            "kept_count": self.kept_count,
            "rules": rules,
            "esi_imputation": {
                "count": self.esi_imputed,
                "fraction": round(self.esi_imputed / self.kept_count, 6) if self.kept_count else 0.0,
            },
            "esi_ob_mapped": self.esi_ob_mapped,
        }


class VisitCleaner:
    """Exclusion and imputation rules applied to parsed ED visits."""

    WAITING_MAX_HOURS = 9.0
    BOARDING_MAX_HOURS = 300.0
    # Seven months at 30.44 days per month.
    TREATMENT_MAX_HOURS = 5112.0
    IMPUTED_ESI = 3
    # ESI-grouped counts already place OB visits in the ESI 3 group.
    OB_ESI = 3

    def __init__(
        self,
        waiting_max_hours: float = WAITING_MAX_HOURS,
        boarding_max_hours: float = BOARDING_MAX_HOURS,
        treatment_max_hours: float = TREATMENT_MAX_HOURS,
        imputed_esi: int = IMPUTED_ESI,
        ob_esi: int = OB_ESI,
    ) -> None:
        self.waiting_max_hours = float(waiting_max_hours)
        self.boarding_max_hours = float(boarding_max_hours)
        self.treatment_max_hours = float(treatment_max_hours)
        self.imputed_esi = int(imputed_esi)
        self.ob_esi = int(ob_esi)

    def violation(self, visit: VisitTimeline) -> Optional[str]:
        # Rules are checked in a fixed order; a visit is tallied under its first match.
        if _hours_between(visit.waiting_start, visit.waiting_end) > self.waiting_max_hours:
            return RULE_WAITING
        if _hours_between(visit.bed_request_time, visit.checkout_time) > self.boarding_max_hours:
            return RULE_BOARDING
        if _hours_between(visit.treatment_start, visit.treatment_end) > self.treatment_max_hours:
            return RULE_TREATMENT
        return None

    def clean_visits(self, visits: Sequence[VisitTimeline]) -> Tuple[List[VisitTimeline], CleaningReport]:
        report = CleaningReport(input_count=len(visits))
        kept: List[VisitTimeline] = []
        for visit in visits:
            rule = self.violation(visit)
            if rule:
                report.excluded[rule].append(visit.visit_id)
                continue
            kept.append(visit)
        report.kept_count = len(kept)
        return kept, report

    def impute_esi(self, visits: Sequence[VisitTimeline], report: Optional[CleaningReport] = None) -> List[VisitTimeline]:
        """Missing ESI becomes ``imputed_esi``; the OB marker becomes ``ob_esi``, so every visit leaves with 1-5."""
        out: List[VisitTimeline] = []
        imputed = 0
        ob_mapped = 0
        for visit in visits:
            if visit.esi is None:
                out.append(replace(visit, esi=self.imputed_esi))
                imputed += 1
                if report is not None:
                    report.esi_imputed_ids.append(visit.visit_id)
            elif visit.esi == OB_MARKER:
                out.append(replace(visit, esi=self.ob_esi))
                ob_mapped += 1
            else:
                out.append(visit)
        if report is not None:
            report.esi_imputed += imputed
            report.esi_ob_mapped += ob_mapped
        return out


def clean_visits(visits: Sequence[VisitTimeline], cleaner: Optional[VisitCleaner] = None) -> Tuple[List[VisitTimeline], CleaningReport]:
    return (cleaner or VisitCleaner()).clean_visits(visits)


def impute_esi(visits: Sequence[VisitTimeline], report: Optional[CleaningReport] = None) -> List[VisitTimeline]:
    return VisitCleaner().impute_esi(visits, report)
