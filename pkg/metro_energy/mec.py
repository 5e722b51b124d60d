import json
import os
from dataclasses import dataclass
from enum import Enum
from typing import Any, List, Optional, Tuple
import logging
from tqdm import tqdm
from metro_energy.errors import MetroModelError
from metro_energy.model import Model, Site, SpaceClass

PASSIVE_DISTRIBUTION = {"OM-OD", "power-splitter"}
ACTIVE_ACCESS = {"MSAN", "DSLAM", "OLT", "ONU", "CMTS", "ethernet-switch"}

path_space_classes = os.path.join(os.path.dirname(__file__), "space_classes", "space_classes.json")
with open(path_space_classes) as f:
    SPACE_RANKS = json.load(f)["ranks"]


class Classification(str, Enum):
    CASE_A = "CaseA-passive"
    CASE_B = "CaseB-active"
    OTHER = "Other"


class Upgrade(str, Enum):
    PROVIDE_POWER = "provide-power"
    INSTALL_ETHERNET_UPLINK = "install-ethernet-uplink"
    EXPAND_SPACE = "expand-space"


@dataclass(frozen=True)
class MecDemand():
    """Requirements of an edge computing node.

    Args:
        required_power_w (float): Power the node draws
        required_space_class (Optional[SpaceClass]): Minimum space class, None when space is not a constraint
        requires_ethernet (bool): The site must have an Ethernet uplink
    """
    required_power_w: float
    required_space_class: Optional[SpaceClass] = None
    requires_ethernet: bool = True


@dataclass(frozen=True)
class CriterionResult():
    name: str
    passed: bool
    measured: Any
    required: Any
    deficit: float

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "measured": self.measured, "required": self.required, "deficit": self.deficit}


@dataclass(frozen=True)
class CandidacyReport():
    site_id: str
    classification: Classification
    criteria: Tuple[CriterionResult, ...]
    upgrades: Tuple[Upgrade, ...]
    eligible: bool

    def to_dict(self) -> dict:
        return {
            "site_id": self.site_id,
            "classification": Classification(self.classification).value,
            "eligible": self.eligible,
            "criteria": [criterion.to_dict() for criterion in self.criteria],
            "upgrades": [Upgrade(upgrade).value for upgrade in self.upgrades]
        }


def space_rank(site: Site) -> Optional[int]:
    """Explicit per-site declaration first, then the space class ordering. None when unranked."""
    if site.space_rank is not None:
        return site.space_rank
    return SPACE_RANKS.get(SpaceClass(site.space_class).value)


class _Evaluator():
    def __init__(self):
        pass


class MecEvaluator(_Evaluator):
    def __init__(self, verbose: bool = False) -> None:
        self.verbose = verbose

    @staticmethod
    def _site(model: Model, site_id: str) -> Site:
        if site_id not in model.sites:
            raise MetroModelError("E-NO-SUCH-SITE", site_id, "unknown site")
        return model.sites[site_id]

    @staticmethod
    def _check_demand(demand: MecDemand) -> Optional[int]:
        """Returns the required space rank."""
        if demand.required_power_w < 0:
            raise MetroModelError("E-BAD-DEMAND", "required_power_w", "must be non-negative")
        if demand.required_space_class is None:
            return None
        required = SPACE_RANKS.get(SpaceClass(demand.required_space_class).value)
        if required is None:
            raise MetroModelError("E-BAD-DEMAND", "required_space_class", f"{SpaceClass(demand.required_space_class).value} has no rank to compare against")
        return required

    def classify_distribution(self, model: Model, site_id: str) -> Classification:
        """Case A is passive distribution (no power, no Ethernet), case B an active access node with an Ethernet uplink.

        Args:
            model (Model): Valid model
            site_id (str): Site to classify

        Raises:
            MetroModelError: E-NO-SUCH-SITE

        Returns:
            Classification: CaseA-passive, CaseB-active or Other
        """
        site = self._site(model, site_id)
        elements = model.elements_at_site(site_id)
        if not elements:
            return Classification.OTHER
        if all(not element.powered and {g.value for g in element.functional_groups} <= PASSIVE_DISTRIBUTION for element in elements):
            return Classification.CASE_A
        if site.has_ethernet_uplink and any(element.powered and {g.value for g in element.functional_groups} & ACTIVE_ACCESS for element in elements):
            return Classification.CASE_B
        return Classification.OTHER

    def _evaluate(self, model: Model, site_id: str, demand: MecDemand, required_rank: Optional[int]) -> CandidacyReport:
        site = self._site(model, site_id)
        available_w = site.power_headroom_w if site.has_power else 0
        power = CriterionResult(
            name="power",
            passed=site.has_power and available_w >= demand.required_power_w,
            measured=available_w,
            required=demand.required_power_w,
            deficit=max(0, demand.required_power_w - available_w)
        )
        network = CriterionResult(
            name="network",
            passed=site.has_ethernet_uplink or not demand.requires_ethernet,
            measured=site.has_ethernet_uplink,
            required=demand.requires_ethernet,
            deficit=0 if site.has_ethernet_uplink or not demand.requires_ethernet else 1
        )
        rank = space_rank(site)
        if required_rank is None:
            space = CriterionResult("space", True, rank, None, 0)
        else:
            space = CriterionResult(
                name="space",
                passed=rank is not None and rank >= required_rank,
                measured=rank,
                required=required_rank,
                deficit=max(0, required_rank - (rank or 0))
            )
        remedies = {"power": Upgrade.PROVIDE_POWER, "network": Upgrade.INSTALL_ETHERNET_UPLINK, "space": Upgrade.EXPAND_SPACE}
        criteria = (power, network, space)
        upgrades = tuple(remedies[criterion.name] for criterion in criteria if not criterion.passed)
        return CandidacyReport(
            site_id=site_id,
            classification=self.classify_distribution(model, site_id),
            criteria=criteria,
            upgrades=upgrades,
            eligible=not upgrades
        )

    def evaluate_candidacy(self, model: Model, site_id: str, demand: MecDemand) -> CandidacyReport:
        """Evaluates one site against the power, network and space criteria of a demand.

        Args:
            model (Model): Valid model
            site_id (str): Candidate site
            demand (MecDemand): Requirements of the edge node

        Raises:
            MetroModelError: E-NO-SUCH-SITE or E-BAD-DEMAND

        Returns:
            CandidacyReport: eligible iff every criterion passes iff no upgrade is needed
        """
        return self._evaluate(model, site_id, demand, self._check_demand(demand))

    def rank_sites(self, model: Model, demand: MecDemand) -> List[CandidacyReport]:
        """Eligible sites first by residual headroom (descending), then ineligible sites by number of upgrades.
        Remaining ties are broken by site id.

        Args:
            model (Model): Valid model
            demand (MecDemand): Requirements of the edge node

        Raises:
            MetroModelError: E-BAD-DEMAND

        Returns:
            List[CandidacyReport]: One report per site
        """
        required_rank = self._check_demand(demand)
        reports = [
            self._evaluate(model, site_id, demand, required_rank)
            for site_id in tqdm(sorted(model.sites), desc="Evaluating sites", disable=not self.verbose)
        ]
        eligible = sorted(
            (report for report in reports if report.eligible),
            key=lambda report: (-(model.sites[report.site_id].power_headroom_w - demand.required_power_w), len(report.upgrades), report.site_id)
        )
        ineligible = sorted((report for report in reports if not report.eligible), key=lambda report: (len(report.upgrades), report.site_id))
        logging.debug(f"[DEBUG] {len(eligible)} of {len(reports)} site(s) eligible for a {demand.required_power_w} W edge node")
        return eligible + ineligible


def classify_distribution(model: Model, site_id: str) -> Classification:
    return MecEvaluator().classify_distribution(model, site_id)


def evaluate_candidacy(model: Model, site_id: str, demand: MecDemand) -> CandidacyReport:
    return MecEvaluator().evaluate_candidacy(model, site_id, demand)


def rank_sites(model: Model, demand: MecDemand) -> List[CandidacyReport]:
    return MecEvaluator().rank_sites(model, demand)
