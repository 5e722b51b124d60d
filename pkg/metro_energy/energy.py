"""Energy integration and attribution of measured power to segments and operators."""
import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Dict, List, Optional, Tuple
import logging
from tqdm import tqdm
from metro_energy.engine.recomposition import CoverageResult
from metro_energy.engine.text_format import Formatter
from metro_energy.errors import MetroModelError
from metro_energy.model import Model, NetworkElement, ReferencePoint

FRACTION_TOLERANCE = 1e-9
SECONDS_PER_HOUR = 3600
CSV_COLUMNS = ("element_id", "start_utc", "end_utc", "avg_power_w")
OPTIONAL_CSV_COLUMNS = ("measurement_location",)

Interval = Tuple[int, int]
Sample = Tuple[int, int, float]


class SplitMode(str, Enum):
    DECLARED = "declared"
    EQUAL = "equal"
    DENY = "deny"


@dataclass(frozen=True)
class PowerProfile():
    """Measured power of one element as piecewise constant samples.

    Args:
        element_id (str): Measured element
        samples (Tuple[Sample, ...]): (start UTC s, end UTC s, average W), sorted and non-overlapping
        measurement_location (str): Where the measurement was taken, echoed in reports
        measurement_dates (Tuple[str, str]): (first, last) measurement dates, echoed in reports
    """
    element_id: str
    samples: Tuple[Sample, ...]
    measurement_location: str = ""
    measurement_dates: Tuple[str, str] = ("", "")

    def __post_init__(self) -> None:
        previous_end = None
        for start, end, avg_power_w in self.samples:
            if not start < end:
                raise MetroModelError("E-BAD-PROFILE", self.element_id, f"sample [{start}, {end}) is empty or reversed")
            if not math.isfinite(avg_power_w) or avg_power_w < 0:
                raise MetroModelError("E-BAD-PROFILE", self.element_id, f"power {avg_power_w} W is not a finite non-negative number")
            if previous_end is not None and start < previous_end:
                raise MetroModelError("E-BAD-PROFILE", self.element_id, "samples overlap or are not sorted by start")
            previous_end = end


@dataclass(frozen=True)
class SplitPolicy():
    mode: SplitMode = SplitMode.EQUAL
    declared_fractions: Optional[Dict[str, float]] = None


@dataclass(frozen=True)
class EnergyReport():
    interval: Interval
    per_segment_wh: Dict[str, float]
    per_operator_wh: Dict[str, float]
    total_wh: float
    uncaptured_wh: float
    hidden_consumer_notes: List[str]
    metadata: dict
    per_element_wh: Dict[str, float] = field(default_factory=dict)
    rated_not_measured: List[str] = field(default_factory=list)
    split_notes: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "interval": {"start": self.interval[0], "end": self.interval[1]},
            "per_segment_wh": dict(self.per_segment_wh),
            "per_operator_wh": dict(self.per_operator_wh),
            "total_wh": self.total_wh,
            "uncaptured_wh": self.uncaptured_wh,
            "per_element_wh": dict(self.per_element_wh),
            "rated_not_measured": list(self.rated_not_measured),
            "split_notes": list(self.split_notes),
            "hidden_consumer_notes": list(self.hidden_consumer_notes),
            "metadata": self.metadata
        }


def _check_interval(interval: Interval) -> None:
    start, end = interval
    if start > end:
        raise MetroModelError("E-BAD-INTERVAL", f"{start},{end}", "interval start is after its end")


def integrate_energy(profile: PowerProfile, interval: Interval) -> float:
    """Energy of a piecewise constant profile over an interval. Gaps between samples contribute 0.

    Args:
        profile (PowerProfile): Measured samples
        interval (Interval): (start, end) in UTC seconds

    Raises:
        MetroModelError: E-BAD-INTERVAL when start > end

    Returns:
        float: Watt-hours
    """
    _check_interval(interval)
    start, end = interval
    return math.fsum(
        avg_power_w * max(0, min(sample_end, end) - max(sample_start, start))
        for sample_start, sample_end, avg_power_w in profile.samples
    ) / SECONDS_PER_HOUR


def split_subsumed(element: NetworkElement, rp: ReferencePoint, policy: SplitPolicy) -> Dict[str, float]:
    """Shares of an integrated element's energy on each side of a reference point it subsumes.
    The downstream side of the RP receives the fraction of the RP's downstream group, the upstream side the rest.

    Args:
        element (NetworkElement): Integrated element
        rp (ReferencePoint): Subsumed reference point of the element
        policy (SplitPolicy): declared, equal or deny

    Raises:
        MetroModelError: E-NOT-SUBSUMED, E-SPLIT-DENIED or E-FRACTIONS-INVALID

    Returns:
        Dict[str, float]: functional group -> fraction
    """
    if not rp.subsumed or rp.subsuming_element != element.id:
        raise MetroModelError("E-NOT-SUBSUMED", rp.id, f"{element.id} does not subsume this reference point")
    mode = SplitMode(policy.mode)
    if mode == SplitMode.DENY:
        raise MetroModelError("E-SPLIT-DENIED", element.id, f"energy split across {rp.id} denied by policy")
    if mode == SplitMode.EQUAL:
        logging.warning(f"{element.id}: no declared split across {rp.id}, energy shared equally between {rp.upstream_element} and {rp.downstream_element}")
        return {rp.upstream_element: 0.5, rp.downstream_element: 0.5}

    fractions = dict(policy.declared_fractions or {})
    groups = {g.value for g in element.functional_groups}
    if not fractions:
        raise MetroModelError("E-FRACTIONS-INVALID", element.id, "declared split without fractions")
    if any(value < 0 for value in fractions.values()):
        raise MetroModelError("E-FRACTIONS-INVALID", element.id, "fractions must be non-negative")
    if abs(math.fsum(fractions.values()) - 1) > FRACTION_TOLERANCE:
        raise MetroModelError("E-FRACTIONS-INVALID", element.id, f"fractions sum to {math.fsum(fractions.values())}, not 1")
    if not set(fractions) <= groups:
        raise MetroModelError("E-FRACTIONS-INVALID", element.id, f"{sorted(set(fractions) - groups)} are not functional groups of the element")
    if not {rp.upstream_element, rp.downstream_element} & set(fractions):
        raise MetroModelError("E-FRACTIONS-INVALID", element.id, f"fractions name neither {rp.upstream_element} nor {rp.downstream_element}")
    return dict(sorted(fractions.items()))


class _Attributor():
    def __init__(self):
        pass


class EnergyAttributor(_Attributor):
    def __init__(self, policy: Optional[SplitPolicy] = None, verbose: bool = False) -> None:
        self.policy = policy if policy else SplitPolicy()
        self.verbose = verbose

    def _index_profiles(self, model: Model, profiles: List[PowerProfile]) -> Dict[str, PowerProfile]:
        indexed = {}
        for profile in profiles:
            if profile.element_id not in model.elements:
                raise MetroModelError("E-UNKNOWN-PROFILE-ELEMENT", profile.element_id, "no such element in the model")
            if profile.element_id in indexed:
                raise MetroModelError("E-DUP-PROFILE", profile.element_id, "at most one profile per element")
            indexed[profile.element_id] = profile
        for element_id in sorted(indexed):
            if not model.elements[element_id].powered:
                logging.warning(f"Profile of unpowered element {element_id} ignored, only its measurement metadata is kept")
        return dict(sorted(indexed.items()))

    def attribute(self, model: Model, coverage: CoverageResult, profiles: List[PowerProfile], interval: Interval) -> EnergyReport:
        """Attributes the energy of every powered element to its segment and operator.

        Args:
            model (Model): Valid model
            coverage (CoverageResult): Output of serial_recomposition on the same model
            profiles (List[PowerProfile]): At most one per element; elements without one use their rated power_draw_w
            interval (Interval): (start, end) in UTC seconds

        Raises:
            MetroModelError: E-BAD-INTERVAL, E-DUP-PROFILE, E-UNKNOWN-PROFILE-ELEMENT or a split error

        Returns:
            EnergyReport: Per segment and per operator energy plus provenance notes
        """
        _check_interval(interval)
        indexed = self._index_profiles(model, profiles)
        hours = (interval[1] - interval[0]) / SECONDS_PER_HOUR
        segment_parts = defaultdict(list)
        operator_parts = defaultdict(list)
        uncaptured_parts = []
        per_element_wh = {}
        rated_not_measured = []
        split_notes = []

        for element_id in tqdm(model.powered_elements(), desc="Attributing energy", disable=not self.verbose):
            element = model.elements[element_id]
            if element_id in indexed:
                energy = integrate_energy(indexed[element_id], interval)
            else:
                energy = element.power_draw_w * hours
                rated_not_measured.append(element_id)
            per_element_wh[element_id] = energy

            if element_id in coverage.straddling:
                rp_id, upstream_segment, downstream_segment = coverage.straddling[element_id]
                rp = model.reference_points[rp_id]
                fractions = split_subsumed(element, rp, self.policy)
                downstream_share = energy * min(fractions.get(rp.downstream_element, 0.0), 1.0)
                shares = [(upstream_segment, energy - downstream_share), (downstream_segment, downstream_share)]
                split_notes.append(
                    f"{element_id} split across {rp_id} ({SplitMode(self.policy.mode).value}): "
                    f"{upstream_segment} {energy - downstream_share:.6f} Wh, {downstream_segment} {downstream_share:.6f} Wh"
                )
            elif element_id in coverage.assignment:
                shares = [(coverage.assignment[element_id], energy)]
            else:
                uncaptured_parts.append(energy)
                continue
            for segment_id, share in shares:
                segment_parts[segment_id].append(share)
                operator_parts[model.segments[segment_id].operator_id].append(share)

        operators = sorted({segment.operator_id for segment in model.segments.values()})
        hidden = []
        for element_id in model.powered_elements():
            element = model.elements[element_id]
            if element.transparent_at_layers:
                owner = coverage.assignment.get(element_id, "uncaptured")
                hidden.append(
                    f"{element_id} is transparent at {','.join(element.transparent_at_layers)}: "
                    f"{per_element_wh[element_id]:.6f} Wh attributed to {owner}"
                )
        logging.debug(f"[DEBUG] {len(rated_not_measured)} element(s) fell back to their rated power")
        return EnergyReport(
            interval=(interval[0], interval[1]),
            per_segment_wh={segment_id: math.fsum(segment_parts[segment_id]) for segment_id in model.segments},
            per_operator_wh={operator_id: math.fsum(operator_parts[operator_id]) for operator_id in operators},
            total_wh=math.fsum(per_element_wh.values()),
            uncaptured_wh=math.fsum(uncaptured_parts),
            hidden_consumer_notes=hidden,
            metadata={
                "model_name": model.metadata.name,
                "measurements": [
                    {
                        "element_id": profile.element_id,
                        "measurement_location": profile.measurement_location,
                        "measurement_dates": list(profile.measurement_dates)
                    }
                    for profile in indexed.values()
                ]
            },
            per_element_wh=per_element_wh,
            rated_not_measured=rated_not_measured,
            split_notes=split_notes
        )


def attribute_energy(model: Model, coverage: CoverageResult, profiles: List[PowerProfile], interval: Interval, policy: SplitPolicy) -> EnergyReport:
    return EnergyAttributor(policy).attribute(model, coverage, profiles, interval)


def _utc_date(element_id: str, seconds: int) -> str:
    try:
        return datetime.fromtimestamp(seconds, tz=timezone.utc).date().isoformat()
    except (OverflowError, OSError, ValueError) as err:
        raise MetroModelError("E-BAD-PROFILE", element_id, f"timestamp {seconds} is out of range: {err}")


def load_power_profiles(path_csv: str) -> List[PowerProfile]:
    """Reads a power CSV: element_id,start_utc,end_utc,avg_power_w[,measurement_location], one sample per row.

    Args:
        path_csv (str): Path to the CSV file

    Raises:
        MetroModelError: E-IO on unreadable or non UTF-8 files, E-CSV(row) on malformed rows,
            E-BAD-PROFILE on overlapping samples or out of range timestamps

    Returns:
        List[PowerProfile]: One profile per element, sorted by element id
    """
    try:
        with open(path_csv, newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            missing = [column for column in CSV_COLUMNS if column not in (reader.fieldnames or [])]
            if missing:
                raise MetroModelError("E-CSV", "1", f"missing columns {missing}")
            samples = defaultdict(list)
            locations = {}
            for row in reader:
                try:
                    sample = (int(row["start_utc"]), int(row["end_utc"]), float(row["avg_power_w"]))
                except (TypeError, ValueError) as err:
                    raise MetroModelError("E-CSV", str(reader.line_num), str(err))
                if not math.isfinite(sample[2]) or sample[2] < 0:
                    raise MetroModelError("E-CSV", str(reader.line_num), f"avg_power_w {row['avg_power_w']} is not a finite non-negative number")
                element_id = (row["element_id"] or "").strip()
                if not element_id:
                    raise MetroModelError("E-CSV", str(reader.line_num), "empty element_id")
                samples[element_id].append(sample)
                location = (row.get("measurement_location") or "").strip()
                if location and element_id not in locations:
                    locations[element_id] = location
    except OSError as err:
        raise MetroModelError("E-IO", path_csv, err.strerror or str(err))
    except UnicodeDecodeError as err:
        raise MetroModelError("E-IO", path_csv, f"not UTF-8: {err.reason}")
    except csv.Error as err:
        raise MetroModelError("E-CSV", str(reader.line_num), str(err))

    profiles = []
    for element_id in sorted(samples):
        ordered = tuple(sorted(samples[element_id]))
        profiles.append(PowerProfile(
            element_id=element_id,
            samples=ordered,
            measurement_location=locations.get(element_id, ""),
            measurement_dates=(_utc_date(element_id, ordered[0][0]), _utc_date(element_id, ordered[-1][1]))
        ))
    logging.debug(f"[DEBUG] Loaded {len(profiles)} power profile(s) from {path_csv}")
    return profiles


def render_report_text(report: EnergyReport, formatter: Optional[Formatter] = None) -> str:
    formatter = formatter if formatter else Formatter()
    text = f"Energy report {report.metadata['model_name']} [{report.interval[0]}, {report.interval[1]}]\n\n"
    text += formatter.format_table(["segment", "energy_wh"], list(report.per_segment_wh.items()))
    text += "\n" + formatter.format_table(["operator", "energy_wh"], list(report.per_operator_wh.items()))
    text += "\n" + formatter.format_table(
        ["total_wh", "uncaptured_wh"], [[report.total_wh, report.uncaptured_wh]]
    )
    for title, notes in (("Rated, not measured", report.rated_not_measured), ("Splits", report.split_notes), ("Hidden consumers", report.hidden_consumer_notes)):
        if notes:
            text += f"\n{title}:\n" + "".join(f"  {note}\n" for note in notes)
    return text


def render_segment_csv(report: EnergyReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["segment_id", "energy_wh", "interval_start", "interval_end"])
    for segment_id, energy in report.per_segment_wh.items():
        writer.writerow([segment_id, repr(energy), report.interval[0], report.interval[1]])
    return buffer.getvalue()
