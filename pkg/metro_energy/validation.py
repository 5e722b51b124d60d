import itertools
import json
import os
from dataclasses import dataclass
from typing import Callable, Dict, List, Set, Tuple
import logging
from metro_energy.model import Model, ReferencePoint, RPKind, rp_sides

NT_FUNCTIONS = {"NT1", "ONU", "AF", "CM"}  # groups terminating the transmission line
NT2_SIDE = {"NT2", "RG", "AF"}
CUSTOMER_SIDE = {"RG", "NT2", "TE"}
PON_GROUPS = {"OLT", "ONU"}
INTERCONNECTION_KINDS = {RPKind.RPI_N, RPKind.IRDI}

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic():
    """One rule finding.

    Args:
        code (str): Rule id, R1 to R10
        severity (str): error or warning
        subject_ids (Tuple[str, ...]): Ids of the reference points, elements or segments at fault
        message (str): Fixed text of the rule
        anchor (str): Quoted source passage the rule enforces
    """
    code: str
    severity: str
    subject_ids: Tuple[str, ...]
    message: str
    anchor: str

    @property
    def sort_key(self) -> Tuple[int, Tuple[str, ...]]:
        return (int(self.code[1:]), self.subject_ids)

    def __str__(self) -> str:
        return f"{self.code} {self.severity} {','.join(self.subject_ids)} — {self.message} ({self.anchor})"

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "severity": self.severity,
            "subject_ids": list(self.subject_ids),
            "message": self.message,
            "anchor": self.anchor
        }


@dataclass(frozen=True)
class SubsumptionEntry():
    rp_id: str
    subsuming_element: str
    externally_accessible: bool = False

    def to_dict(self) -> dict:
        return {"rp_id": self.rp_id, "subsuming_element": self.subsuming_element, "externally_accessible": self.externally_accessible}


class _RuleEngine():
    def __init__(self):
        pass


class ReferenceConfigurationValidator(_RuleEngine):
    def __init__(self) -> None:
        path_rules = os.path.join(os.path.dirname(__file__), "rules", "reference_points.json")
        with open(path_rules) as f:
            self.rules = json.load(f)
        # Rule id -> predicate returning the subject ids of every violation
        self.checks: Dict[str, Callable[[Model], List[Tuple[str, ...]]]] = {
            "R1": self._s_without_terminal_equipment,
            "R2": self._t_not_separating_nt1_and_nt2,
            "R3": self._u_off_the_transmission_line,
            "R4": self._r_s_away_from_pai,
            "R5": self._subsumption_mismatch,
            "R6": self._u1_and_t_collocated,
            "R7": self._a_with_integrated_af,
            "R8": self._operators_without_interconnection,
            "R9": self._uni_legacy,
            "R10": self._t_between_rg_and_cpe
        }

    @staticmethod
    def _with_designator(model: Model, designator: str) -> List[ReferencePoint]:
        return [rp for rp in model.reference_points.values() if rp.designator == designator]

    def _s_without_terminal_equipment(self, model: Model) -> List[Tuple[str, ...]]:
        """Example: S declared between an ONU and a residential gateway"""
        return [(rp.id,) for rp in self._with_designator(model, "S") if "TE" not in rp_sides(model, rp)[1]]

    @staticmethod
    def _rg_towards_other_cpe(upstream: Set[str], downstream: Set[str]) -> bool:
        return "RG" in upstream and not downstream & NT2_SIDE

    def _t_not_separating_nt1_and_nt2(self, model: Model) -> List[Tuple[str, ...]]:
        """T sitting between an RG and other CPE is left to R10, which suggests S instead."""
        subjects = []
        for rp in self._with_designator(model, "T"):
            upstream, downstream = rp_sides(model, rp)
            if self._rg_towards_other_cpe(upstream, downstream):
                continue
            if not ("NT1" in upstream and downstream & NT2_SIDE):
                subjects.append((rp.id,))
        return subjects

    def _u_off_the_transmission_line(self, model: Model) -> List[Tuple[str, ...]]:
        subjects = []
        for rp in self._with_designator(model, "U"):
            upstream, downstream = rp_sides(model, rp)
            if not (upstream | downstream) & NT_FUNCTIONS or upstream & CUSTOMER_SIDE:
                subjects.append((rp.id,))
        return subjects

    def _r_s_away_from_pai(self, model: Model) -> List[Tuple[str, ...]]:
        pon = any(PON_GROUPS & {g.value for g in element.functional_groups} for element in model.elements.values())
        if not pon:
            return []
        pai_pairs = {(rp.upstream_element, rp.downstream_element) for rp in self._with_designator(model, "PAI")}
        return [
            (rp.id,) for rp in self._with_designator(model, "R-S")
            if (rp.upstream_element, rp.downstream_element) not in pai_pairs
        ]

    def _subsumption_mismatch(self, model: Model) -> List[Tuple[str, ...]]:
        subjects = []
        for rp in model.reference_points.values():
            subject = (rp.id, rp.subsuming_element) if rp.subsuming_element else (rp.id,)
            if rp.subsumed != (rp.subsuming_element is not None):
                subjects.append(subject)
            elif rp.subsumed:
                groups = {g.value for g in model.elements[rp.subsuming_element].functional_groups}
                if not {rp.upstream_element, rp.downstream_element} <= groups:
                    subjects.append(subject)
        return subjects

    def _u1_and_t_collocated(self, model: Model) -> List[Tuple[str, ...]]:
        def position(rp: ReferencePoint) -> tuple:
            return (rp.subsuming_element, frozenset({rp.upstream_element, rp.downstream_element}))

        return [
            tuple(sorted((t.id, u1.id)))
            for t in self._with_designator(model, "T")
            for u1 in self._with_designator(model, "U1")
            if position(t) == position(u1)
        ]

    def _a_with_integrated_af(self, model: Model) -> List[Tuple[str, ...]]:
        subjects = []
        for rp in self._with_designator(model, "A-ephemeral"):
            element_ids = [rp.subsuming_element] if rp.subsumed else sorted({rp.upstream_element, rp.downstream_element})
            for element_id in element_ids:
                element = model.elements.get(element_id)
                if element and {"ONU", "AF"} <= {g.value for g in element.functional_groups}:
                    subjects.append((rp.id, element_id))
        return subjects

    def _operators_without_interconnection(self, model: Model) -> List[Tuple[str, ...]]:
        """Segments are adjacent when they share a bounding reference point."""
        subjects = []
        for a, b in itertools.combinations(model.segments.values(), 2):
            shared = set(a.bounding_rp_ids) & set(b.bounding_rp_ids)
            if not shared or a.operator_id == b.operator_id:
                continue
            if not any(model.reference_points[rp_id].kind in INTERCONNECTION_KINDS for rp_id in shared):
                subjects.append((a.id, b.id))
        return subjects

    def _uni_legacy(self, model: Model) -> List[Tuple[str, ...]]:
        return [(rp.id,) for rp in self._with_designator(model, "UNI-legacy")]

    def _t_between_rg_and_cpe(self, model: Model) -> List[Tuple[str, ...]]:
        return [
            (rp.id,) for rp in self._with_designator(model, "T")
            if self._rg_towards_other_cpe(*rp_sides(model, rp))
        ]

    def validate(self, model: Model) -> List[Diagnostic]:
        """Applies every rule to the model.

        Args:
            model (Model): Valid model

        Returns:
            List[Diagnostic]: Sorted by (rule number, subject ids); empty iff fully conformant
        """
        diagnostics = set()
        for code, check in self.checks.items():
            rule = self.rules[code]
            for subject_ids in check(model):
                diagnostics.add(Diagnostic(code, rule["severity"], subject_ids, rule["message"], rule["anchor"]))
        logging.debug(f"[DEBUG] {len(diagnostics)} diagnostic(s) raised by {len(self.checks)} rules")
        return sorted(diagnostics, key=lambda diagnostic: diagnostic.sort_key)


def validate_reference_configuration(model: Model) -> List[Diagnostic]:
    return ReferenceConfigurationValidator().validate(model)


def subsumption_report(model: Model) -> List[SubsumptionEntry]:
    """Reference points internal to an integrated device, which analysts cannot reach.

    Args:
        model (Model): Valid model

    Returns:
        List[SubsumptionEntry]: One entry per subsumed reference point, sorted by rp id
    """
    return [
        SubsumptionEntry(rp.id, rp.subsuming_element or "")
        for rp in sorted(model.reference_points.values(), key=lambda rp: rp.id)
        if rp.subsumed
    ]


def has_errors(diagnostics: List[Diagnostic]) -> bool:
    return any(diagnostic.severity == ERROR for diagnostic in diagnostics)
