import copy
import json
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple
import logging
from metro_energy.errors import MetroModelError
from metro_energy.schema_io import COLLECTIONS, SCHEMA_VERSION, ModelDocument, document_from_dict

# Operator placeholders used by the template files
OPERATOR = "operator"
SUBSCRIBER = "subscriber"


class TemplateId(str, Enum):
    GPON = "GPON"
    XGSPON = "XGSPON"
    XDSL = "XDSL"
    GFAST = "GFAST"
    HFC_DOCSIS = "HFC-DOCSIS"
    RFOG = "RFOG"
    REMOTE_PHY = "REMOTE-PHY"
    PTP_ETHERNET = "PTP-ETHERNET"
    FIVEG_RU_DU_CSR = "FIVEG-RU-DU-CSR"
    FTTN = "FTTN"
    FTTB = "FTTB"
    IP_OVER_DWDM = "IP-OVER-DWDM"


@dataclass
class TemplateParams():
    """Instantiation parameters of a reference configuration.

    Args:
        operator_id (str): Operator of the network-side elements and segments
        subscriber_id (str): Operator of the customer-side elements and segments
        site_labels (Dict[str, str]): site id -> location label override
        integrated_cpe (bool): Collapse the customer premises equipment into one integrated device
    """
    operator_id: str = OPERATOR
    subscriber_id: str = SUBSCRIBER
    site_labels: Dict[str, str] = field(default_factory=dict)
    integrated_cpe: bool = False


class _Catalog():
    def __init__(self):
        pass


class TemplateCatalog(_Catalog):
    def __init__(self) -> None:
        path_catalog = os.path.join(os.path.dirname(__file__), "catalog")
        self.templates = {}
        for path_file in sorted(Path(path_catalog).glob("*.json")):
            with open(path_file, encoding="utf-8") as f:
                template = json.load(f)
            self.templates[template["id"]] = template
        logging.debug(f"[DEBUG] Loaded {len(self.templates)} templates from {path_catalog}")

    def list_templates(self) -> List[Tuple[str, str]]:
        """Static catalog of reference configurations.

        Returns:
            List[Tuple[str, str]]: (template id, one-line description), sorted by id
        """
        return [(template_id, self.templates[template_id]["description"]) for template_id in sorted(self.templates)]

    def _apply_integrated_cpe(self, template: dict, parts: dict) -> None:
        patch = template.get("integrated_cpe")
        if patch is None:
            logging.debug(f"[DEBUG] {template['id']} carries no CPE, integrated_cpe ignored")
            return
        for collection, ids in patch.get("remove", {}).items():
            parts[collection] = [item for item in parts[collection] if item["id"] not in set(ids)]
        for collection, items in patch.get("add", {}).items():
            parts[collection].extend(copy.deepcopy(items))

    def instantiate_template(self, template_id: str, params: Optional[TemplateParams] = None) -> ModelDocument:
        """Instantiates a reference configuration as a self-contained model document.
        The core-side stub (metro PoP and aggregation) is part of every template.

        Args:
            template_id (str): One of TemplateId
            params (Optional[TemplateParams], optional): Instantiation parameters. Defaults to TemplateParams().

        Raises:
            MetroModelError: E-UNKNOWN-TEMPLATE

        Returns:
            ModelDocument: Document ready for build_model
        """
        params = params if params else TemplateParams()
        if template_id not in self.templates:
            raise MetroModelError("E-UNKNOWN-TEMPLATE", str(template_id), f"known templates: {', '.join(sorted(self.templates))}")
        template = self.templates[template_id]
        parts = copy.deepcopy(template["parts"])
        if params.integrated_cpe:
            self._apply_integrated_cpe(template, parts)

        operators = {OPERATOR: params.operator_id, SUBSCRIBER: params.subscriber_id}
        for collection in ("elements", "segments"):
            for item in parts[collection]:
                item["operator_id"] = operators.get(item["operator_id"], item["operator_id"])
        site_ids = {site["id"] for site in parts["sites"]}
        for site_id in sorted(set(params.site_labels) - site_ids):
            logging.warning(f"Site '{site_id}' is not part of template {template_id}, label ignored")
        for site in parts["sites"]:
            site["location_label"] = params.site_labels.get(site["id"], site["location_label"])

        document = {"schema_version": SCHEMA_VERSION}
        document.update({collection: parts[collection] for collection in COLLECTIONS})
        document["metadata"] = {
            "name": f"{template_id} reference configuration" + (" (integrated CPE)" if params.integrated_cpe and "integrated_cpe" in template else ""),
            "author": "metro_energy catalog",
            "date": "",
            "notes": [f"anchor: {anchor}" for anchor in template["anchors"]] + [f"assumed: {assumption}" for assumption in template["assumed"]]
        }
        return document_from_dict(document)


def list_templates() -> List[Tuple[str, str]]:
    return TemplateCatalog().list_templates()


def instantiate_template(template_id: str, params: Optional[TemplateParams] = None) -> ModelDocument:
    return TemplateCatalog().instantiate_template(template_id, params)
