"""metro_energy command line: validate, catalog, recompose, expand, attribute and mec subcommands.

Analysis results are written to standard output, diagnostics and usage to standard error.
"""
import argparse
import os
import sys
from datetime import datetime, timezone
from typing import Dict, List, Optional
import logging
from termcolor import colored
from metro_energy import catalog, energy, mec, validation
from metro_energy.engine import recomposition, regex
from metro_energy.engine.text_format import Formatter
from metro_energy.errors import MetroModelError, _MultiViolationError
from metro_energy.model import SpaceClass
from metro_energy.schema_io import load_model, save_model

Regex = regex.Regex()

EXIT_OK = 0
EXIT_ERRORS = 1
EXIT_WARNINGS = 2
EXIT_FAILURE = 3

path_version = os.path.join(os.path.dirname(__file__), "version.txt")
with open(path_version) as f:
    VERSION = f.read().strip()


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with EXIT_FAILURE instead of argparse's 2, which is reserved for --strict warnings."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_FAILURE)


def _paint(text: str, color: str, stream) -> str:
    return colored(text, color) if stream.isatty() else text


def _error(message: str) -> None:
    print(_paint(message, "red", sys.stderr), file=sys.stderr)


def _utc_seconds(text: str) -> int:
    """Integer UTC seconds, or an ISO-8601 timestamp such as 2021-03-01T00:00:00Z"""
    if Regex.fullmatch(r"\d+", text, strict=False):
        return int(text)
    try:
        moment = datetime.fromisoformat(Regex.sub(r"Z$", "+00:00", text, strict=False))
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is neither UTC seconds nor an ISO-8601 timestamp")
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=timezone.utc)
    return int(moment.timestamp())


def _fraction(text: str) -> tuple:
    """GROUP=VALUE, eg: ONU=0.7"""
    match = Regex.fullmatch(r"(?P<group>[A-Za-z0-9-]+)=(?P<value>[0-9]*\.?[0-9]+(e-?[0-9]+)?)", text, strict=False)
    if not match:
        raise argparse.ArgumentTypeError(f"'{text}' is not of the form GROUP=VALUE")
    return match["group"], float(match["value"])


def _path(text: str) -> List[str]:
    return [element_id.strip() for element_id in text.split(",") if element_id.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="metro_energy", description="Model, validate and analyse the energy consumers of a metro network.")
    parser.add_argument("--verbose", action="store_true", help="Debug logging and progress bars on standard error.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True

    def with_format(subparser: argparse.ArgumentParser, *extra: str) -> None:
        subparser.add_argument("--format", choices=["json", "text", *extra], default="json", help="Output form (default: json).")

    p_validate = subparsers.add_parser("validate", help="Lint a model against the reference point placement rules.")
    p_validate.add_argument("model", help="Path to a .metromodel.json file.")
    p_validate.add_argument("--strict", action="store_true", help="Exit with 2 when only warnings are found.")
    p_validate.add_argument("--subsumed", action="store_true", help="List the subsumed reference points instead.")
    with_format(p_validate)
    p_validate.set_defaults(handler=_validate)

    p_catalog = subparsers.add_parser("catalog", help="Reference configuration templates.")
    catalog_commands = p_catalog.add_subparsers(dest="catalog_command", metavar="ACTION")
    catalog_commands.required = True
    p_list = catalog_commands.add_parser("list", help="List the templates.")
    with_format(p_list)
    p_list.set_defaults(handler=_catalog_list)
    p_new = catalog_commands.add_parser("new", help="Instantiate a template into a model file.")
    p_new.add_argument("template_id", help="Template id, see 'catalog list'.")
    p_new.add_argument("--integrated-cpe", action="store_true", help="Collapse the customer premises equipment into one device.")
    p_new.add_argument("--operator", default=catalog.OPERATOR, help="Operator id of the network side.")
    p_new.add_argument("--subscriber", default=catalog.SUBSCRIBER, help="Operator id of the customer side.")
    p_new.add_argument("-o", "--output", required=True, help="Destination .metromodel.json file.")
    p_new.set_defaults(handler=_catalog_new)

    p_recompose = subparsers.add_parser("recompose", help="Capture every powered element into a segment.")
    p_recompose.add_argument("model")
    with_format(p_recompose)
    p_recompose.set_defaults(handler=_recompose)

    p_expand = subparsers.add_parser("expand", help="Expand a path down to the transmission media.")
    p_expand.add_argument("model")
    p_expand.add_argument("--layer", required=True, help="Layer of the path.")
    p_expand.add_argument("--path", required=True, type=_path, help="Comma separated element ids.")
    p_expand.add_argument("--hidden-only", action="store_true", help="Only list the powered elements hidden by the layering.")
    with_format(p_expand)
    p_expand.set_defaults(handler=_expand)

    p_attribute = subparsers.add_parser("attribute", help="Attribute measured energy to segments and operators.")
    p_attribute.add_argument("model")
    p_attribute.add_argument("--power", required=True, help="Power CSV: element_id,start_utc,end_utc,avg_power_w.")
    p_attribute.add_argument("--from", dest="start", required=True, type=_utc_seconds, help="Interval start, UTC seconds or ISO-8601.")
    p_attribute.add_argument("--to", dest="end", required=True, type=_utc_seconds, help="Interval end, UTC seconds or ISO-8601.")
    p_attribute.add_argument("--split", choices=[mode.value for mode in energy.SplitMode], default=energy.SplitMode.EQUAL.value)
    p_attribute.add_argument("--fraction", action="append", type=_fraction, default=[], help="Declared split fraction GROUP=VALUE, repeatable.")
    with_format(p_attribute, "csv")
    p_attribute.set_defaults(handler=_attribute)

    p_mec = subparsers.add_parser("mec", help="Rank sites for edge computing candidacy.")
    p_mec.add_argument("model")
    p_mec.add_argument("--power-w", required=True, type=float, help="Power demand of the edge node in watts.")
    p_mec.add_argument("--space", choices=[space.value for space in SpaceClass], help="Minimum space class.")
    p_mec.add_argument("--no-ethernet", action="store_true", help="Do not require an Ethernet uplink.")
    with_format(p_mec)
    p_mec.set_defaults(handler=_mec)
    return parser


def _validate(args: argparse.Namespace, formatter: Formatter) -> int:
    model = load_model(args.model)
    if args.subsumed:
        entries = validation.subsumption_report(model)
        if args.format == "json":
            sys.stdout.write(formatter.format_json([entry.to_dict() for entry in entries]))
        else:
            sys.stdout.write(formatter.format_table(["rp_id", "subsuming_element", "externally_accessible"], [[e.rp_id, e.subsuming_element, e.externally_accessible] for e in entries]))
        return EXIT_OK
    diagnostics = validation.validate_reference_configuration(model)
    if args.format == "json":
        sys.stdout.write(formatter.format_json([diagnostic.to_dict() for diagnostic in diagnostics]))
    else:
        sys.stdout.write("".join(f"{diagnostic}\n" for diagnostic in diagnostics))
    if validation.has_errors(diagnostics):
        return EXIT_ERRORS
    if diagnostics and args.strict:
        return EXIT_WARNINGS
    return EXIT_OK


def _catalog_list(args: argparse.Namespace, formatter: Formatter) -> int:
    templates = catalog.list_templates()
    if args.format == "json":
        sys.stdout.write(formatter.format_json([{"id": template_id, "description": description} for template_id, description in templates]))
    else:
        sys.stdout.write(formatter.format_table(["id", "description"], templates))
    return EXIT_OK


def _catalog_new(args: argparse.Namespace, formatter: Formatter) -> int:
    params = catalog.TemplateParams(operator_id=args.operator, subscriber_id=args.subscriber, integrated_cpe=args.integrated_cpe)
    model = catalog.instantiate_template(args.template_id, params).to_model()
    save_model(model, args.output)
    logging.info(f"{args.template_id} written to {args.output}")
    return EXIT_OK


def _recompose(args: argparse.Namespace, formatter: Formatter) -> int:
    coverage = recomposition.serial_recomposition(load_model(args.model))
    if args.format == "json":
        sys.stdout.write(formatter.format_json(coverage.to_dict()))
        return EXIT_OK
    rows = [[element_id, segment_id, coverage.straddling.get(element_id, ("",))[0]] for element_id, segment_id in coverage.assignment.items()]
    rows += [[element_id, "uncaptured", ""] for element_id in coverage.uncaptured]
    text = formatter.format_table(["element", "segment", "split_at"], rows)
    text += "".join(f"warning: {warning}\n" for warning in coverage.warnings)
    sys.stdout.write(text)
    return EXIT_OK


def _expand(args: argparse.Namespace, formatter: Formatter) -> int:
    model = load_model(args.model)
    if args.hidden_only:
        hidden = recomposition.detect_hidden_consumers(model, args.layer, args.path)
        sys.stdout.write(formatter.format_json(hidden) if args.format == "json" else "".join(f"{element_id}\n" for element_id in hidden))
        return EXIT_OK
    trace = recomposition.expand_path(model, args.layer, args.path)
    if args.format == "json":
        sys.stdout.write(formatter.format_json(trace.to_dict()))
    else:
        powered = set(model.powered_elements())
        rows = [
            [position, element_id, visible, element_id in powered]
            for position, (element_id, visible) in enumerate(zip(trace.elements, trace.visible_at_request_layer))
        ]
        sys.stdout.write(f"layer {trace.layer_id}\n" + formatter.format_table(["position", "element", "visible", "powered"], rows))
    return EXIT_OK


def _attribute(args: argparse.Namespace, formatter: Formatter) -> int:
    model = load_model(args.model)
    profiles = energy.load_power_profiles(args.power)
    fractions: Optional[Dict[str, float]] = dict(args.fraction) if args.fraction else None
    policy = energy.SplitPolicy(mode=energy.SplitMode(args.split), declared_fractions=fractions)
    coverage = recomposition.serial_recomposition(model)
    report = energy.EnergyAttributor(policy, verbose=args.verbose).attribute(model, coverage, profiles, (args.start, args.end))
    if args.format == "json":
        sys.stdout.write(formatter.format_json(report.to_dict()))
    elif args.format == "csv":
        sys.stdout.write(energy.render_segment_csv(report))
    else:
        sys.stdout.write(energy.render_report_text(report, formatter))
    return EXIT_OK


def _mec(args: argparse.Namespace, formatter: Formatter) -> int:
    model = load_model(args.model)
    demand = mec.MecDemand(
        required_power_w=args.power_w,
        required_space_class=SpaceClass(args.space) if args.space else None,
        requires_ethernet=not args.no_ethernet
    )
    reports = mec.MecEvaluator(verbose=args.verbose).rank_sites(model, demand)
    if args.format == "json":
        sys.stdout.write(formatter.format_json([report.to_dict() for report in reports]))
    else:
        rows = [
            [rank, report.site_id, report.classification.value, report.eligible, [upgrade.value for upgrade in report.upgrades]]
            for rank, report in enumerate(reports, start=1)
        ]
        sys.stdout.write(formatter.format_table(["rank", "site", "classification", "eligible", "upgrades"], rows))
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Runs one subcommand.

    Args:
        argv (Optional[List[str]], optional): Arguments without the program name. Defaults to sys.argv[1:].

    Returns:
        int: 0 clean, 1 error diagnostics, 2 warnings under --strict, 3 usage, IO, parse or build failure
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return err.code if isinstance(err.code, int) else EXIT_FAILURE
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
        force=True
    )
    try:
        return args.handler(args, Formatter())
    except _MultiViolationError as err:
        for violation in err.violations:
            _error(str(violation))
    except MetroModelError as err:
        _error(str(err))
    return EXIT_FAILURE


run = main
