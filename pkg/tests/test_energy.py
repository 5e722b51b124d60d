import math
import os
import pytest
from typing import Dict, List, Tuple
from hypothesis import given
from hypothesis import strategies as st
from metro_energy import energy
from metro_energy.engine import recomposition
from metro_energy.errors import MetroModelError
from metro_energy.model import Model
from tests.helpers import PROPERTY_SETTINGS, TEMPLATE_CASES, load_sample, template_model

HOUR = (1614556800, 1614560400)


def profile(element_id: str, *samples: Tuple[int, int, float]) -> energy.PowerProfile:
    return energy.PowerProfile(element_id, tuple(samples))


@pytest.mark.parametrize(['samples', 'interval', 'expected'], [
    ([(0, 3600, 1000)], (0, 3600), 1000),
    ([(0, 3600, 200), (3600, 5400, 100)], (0, 5400), 250),
    ([(0, 3600, 200), (3600, 5400, 100)], (1800, 3600), 100),
    ([(0, 1800, 300), (3600, 7200, 100)], (0, 7200), 250),
    ([(0, 3600, 1000)], (7200, 10800), 0),
    ([(0, 3600, 1000)], (1800, 1800), 0)
])
def test_integrate_energy(samples: List[Tuple[int, int, float]], interval: Tuple[int, int], expected: float) -> None:
    assert energy.integrate_energy(profile("x", *samples), interval) == pytest.approx(expected)


@st.composite
def stepped_profiles(draw) -> Tuple[energy.PowerProfile, Tuple[int, int]]:
    bounds = sorted(draw(st.sets(st.integers(min_value=0, max_value=1200), min_size=2, max_size=8)))
    samples = [
        (start, end, draw(st.floats(min_value=0, max_value=5000, allow_nan=False)))
        for start, end in zip(bounds, bounds[1:])
        if draw(st.booleans())
    ]
    start = draw(st.integers(min_value=0, max_value=1200))
    end = draw(st.integers(min_value=start, max_value=1200))
    return profile("x", *samples), (start, end)


@PROPERTY_SETTINGS
@given(case=stepped_profiles())
def test_integrate_energy_riemann(case: Tuple[energy.PowerProfile, Tuple[int, int]]) -> None:
    stepped, (start, end) = case

    def power_at(second: int) -> float:
        return next((watts for sample_start, sample_end, watts in stepped.samples if sample_start <= second < sample_end), 0.0)

    riemann = math.fsum(power_at(second) for second in range(start, end)) / 3600
    assert energy.integrate_energy(stepped, (start, end)) == pytest.approx(riemann, rel=1e-9, abs=1e-9)


def test_integrate_energy_MetroModelError() -> None:
    with pytest.raises(MetroModelError) as err:
        energy.integrate_energy(profile("x", (0, 3600, 1000)), (3600, 0))
    assert (err.value.code, err.value.subject) == ("E-BAD-INTERVAL", "3600,0")


@pytest.mark.parametrize(['samples', 'expected_detail'], [
    ([(10, 10, 5)], "empty or reversed"),
    ([(0, 10, -5)], "not a finite non-negative number"),
    ([(0, 10, float("nan"))], "not a finite non-negative number"),
    ([(0, 10, float("inf"))], "not a finite non-negative number"),
    ([(0, 10, 5), (5, 20, 5)], "overlap")
])
def test_power_profile_MetroModelError(samples: List[Tuple[int, int, float]], expected_detail: str) -> None:
    with pytest.raises(MetroModelError) as err:
        profile("x", *samples)
    assert err.value.code == "E-BAD-PROFILE"
    assert expected_detail in err.value.detail


@pytest.mark.parametrize(['policy', 'expected'], [
    (energy.SplitPolicy(energy.SplitMode.EQUAL), {"ONU": 0.5, "RG": 0.5}),
    (energy.SplitPolicy(energy.SplitMode.DECLARED, {"ONU": 0.7, "RG": 0.3}), {"ONU": 0.7, "RG": 0.3}),
    (energy.SplitPolicy(energy.SplitMode.DECLARED, {"AF": 0.2, "ONU": 0.5, "RG": 0.3}), {"AF": 0.2, "ONU": 0.5, "RG": 0.3})
])
def test_split_subsumed(policy: energy.SplitPolicy, expected: Dict[str, float]) -> None:
    model = template_model("GPON", True)
    assert energy.split_subsumed(model.elements["onu-rg"], model.reference_points["rp-u"], policy) == expected


@pytest.mark.parametrize(['element_id', 'rp_id', 'policy', 'expected_code'], [
    ("onu-rg", "rp-s", energy.SplitPolicy(), "E-NOT-SUBSUMED"),
    ("onu-rg", "rp-u", energy.SplitPolicy(energy.SplitMode.DENY), "E-SPLIT-DENIED"),
    ("onu-rg", "rp-u", energy.SplitPolicy(energy.SplitMode.DECLARED), "E-FRACTIONS-INVALID"),
    ("onu-rg", "rp-u", energy.SplitPolicy(energy.SplitMode.DECLARED, {"ONU": 0.7, "RG": 0.4}), "E-FRACTIONS-INVALID"),
    ("onu-rg", "rp-u", energy.SplitPolicy(energy.SplitMode.DECLARED, {"ONU": 1.2, "RG": -0.2}), "E-FRACTIONS-INVALID"),
    ("onu-rg", "rp-u", energy.SplitPolicy(energy.SplitMode.DECLARED, {"OLT": 0.5, "RG": 0.5}), "E-FRACTIONS-INVALID"),
    ("onu-rg", "rp-u", energy.SplitPolicy(energy.SplitMode.DECLARED, {"AF": 0.5, "NT2": 0.5}), "E-FRACTIONS-INVALID")
])
def test_split_subsumed_MetroModelError(element_id: str, rp_id: str, policy: energy.SplitPolicy, expected_code: str) -> None:
    model = template_model("GPON", True)
    with pytest.raises(MetroModelError) as err:
        energy.split_subsumed(model.elements[element_id], model.reference_points[rp_id], policy)
    assert err.value.code == expected_code


def test_attribute_energy_rated(l3vpn: Model) -> None:
    coverage = recomposition.serial_recomposition(l3vpn)
    report = energy.attribute_energy(l3vpn, coverage, [], HOUR, energy.SplitPolicy())
    assert report.per_segment_wh == {
        "seg-core": 1200,
        "seg-cust-a": 50,
        "seg-cust-b": 50,
        "seg-pe-a": 400,
        "seg-pe-b": 400
    }
    assert report.per_operator_wh == {"carrier": 2000, "customer-a": 50, "customer-b": 50}
    assert report.total_wh == 2100
    assert report.uncaptured_wh == 0
    assert report.rated_not_measured == ["CE1", "CE2", "P1", "P2", "PE1", "PE2"]
    assert [note.split(" ")[0] for note in report.hidden_consumer_notes] == ["P1", "P2"]


def test_attribute_energy_measured(l3vpn: Model, path_l3vpn_power: str) -> None:
    profiles = energy.load_power_profiles(path_l3vpn_power)
    report = energy.EnergyAttributor().attribute(l3vpn, recomposition.serial_recomposition(l3vpn), profiles, HOUR)
    assert report.per_element_wh["P1"] == pytest.approx(600)
    assert report.per_element_wh["P2"] == pytest.approx(550)
    assert report.per_segment_wh["seg-core"] == pytest.approx(1150)
    assert report.per_operator_wh["carrier"] == pytest.approx(1950)
    assert report.total_wh == pytest.approx(2050)
    assert report.rated_not_measured == ["CE1", "CE2", "PE1", "PE2"]
    assert report.metadata["model_name"] == "Two-site L3VPN over an MPLS core"
    assert report.metadata["measurements"][0] == {
        "element_id": "P1",
        "measurement_location": "core rack 3",
        "measurement_dates": ["2021-03-01", "2021-03-01"]
    }


@pytest.mark.parametrize(['policy', 'expected_access', 'expected_customer'], [
    (energy.SplitPolicy(energy.SplitMode.DECLARED, {"ONU": 0.7, "RG": 0.3}), 70, 30),
    (energy.SplitPolicy(energy.SplitMode.EQUAL), 50, 50)
])
def test_attribute_energy_split(policy: energy.SplitPolicy, expected_access: float, expected_customer: float) -> None:
    model = template_model("GPON", True)
    coverage = recomposition.serial_recomposition(model)
    report = energy.attribute_energy(model, coverage, [profile("onu-rg", (0, 3600, 100))], (0, 3600), policy)
    assert report.per_segment_wh["seg-access"] == pytest.approx(expected_access)
    assert report.per_segment_wh["seg-customer"] == pytest.approx(expected_customer)
    assert report.per_operator_wh == pytest.approx({"operator": expected_access, "subscriber": expected_customer})
    assert report.split_notes and report.split_notes[0].startswith("onu-rg split across rp-u")


def test_attribute_energy_split_denied() -> None:
    model = template_model("GPON", True)
    coverage = recomposition.serial_recomposition(model)
    with pytest.raises(MetroModelError) as err:
        energy.attribute_energy(model, coverage, [], (0, 3600), energy.SplitPolicy(energy.SplitMode.DENY))
    assert err.value.code == "E-SPLIT-DENIED"


@pytest.mark.parametrize(['profiles', 'interval', 'expected_code'], [
    ([profile("X9", (0, 10, 1))], (0, 3600), "E-UNKNOWN-PROFILE-ELEMENT"),
    ([profile("P1", (0, 10, 1)), profile("P1", (20, 30, 1))], (0, 3600), "E-DUP-PROFILE"),
    ([], (3600, 0), "E-BAD-INTERVAL")
])
def test_attribute_energy_MetroModelError(l3vpn: Model, profiles: List[energy.PowerProfile], interval: Tuple[int, int], expected_code: str) -> None:
    coverage = recomposition.serial_recomposition(l3vpn)
    with pytest.raises(MetroModelError) as err:
        energy.attribute_energy(l3vpn, coverage, profiles, interval, energy.SplitPolicy())
    assert err.value.code == expected_code


def test_attribute_energy_unpowered_profile(caplog) -> None:
    model = template_model("GPON")
    coverage = recomposition.serial_recomposition(model)
    splitter = energy.PowerProfile("splitter", ((0, 3600, 5),), "fdh cabinet 17", ("1970-01-01", "1970-01-01"))
    report = energy.attribute_energy(model, coverage, [splitter], (0, 3600), energy.SplitPolicy())
    assert report.total_wh == energy.attribute_energy(model, coverage, [], (0, 3600), energy.SplitPolicy()).total_wh
    assert "splitter" not in report.per_element_wh
    assert {
        "element_id": "splitter",
        "measurement_location": "fdh cabinet 17",
        "measurement_dates": ["1970-01-01", "1970-01-01"]
    } in report.metadata["measurements"]
    assert "Profile of unpowered element splitter ignored" in caplog.text


@PROPERTY_SETTINGS
@given(
    case=st.sampled_from(TEMPLATE_CASES),
    watts=st.lists(st.floats(min_value=0, max_value=5000, allow_nan=False), min_size=20, max_size=20),
    hours=st.integers(min_value=0, max_value=48)
)
def test_attribute_energy_conservation(case: Tuple[str, bool], watts: List[float], hours: int) -> None:
    model = template_model(*case)
    coverage = recomposition.serial_recomposition(model)
    profiles = [
        profile(element_id, (0, 3600 * 48, watts[i]))
        for i, element_id in enumerate(model.powered_elements())
    ]
    report = energy.attribute_energy(model, coverage, profiles, (0, 3600 * hours), energy.SplitPolicy())
    attributed = math.fsum(report.per_segment_wh.values())
    assert attributed + report.uncaptured_wh == pytest.approx(report.total_wh, rel=1e-9, abs=1e-6)
    assert math.fsum(report.per_operator_wh.values()) == pytest.approx(attributed, rel=1e-9, abs=1e-6)
    assert report.total_wh == pytest.approx(math.fsum(watts[:len(profiles)]) * hours, rel=1e-9, abs=1e-6)


def test_load_power_profiles(path_l3vpn_power: str) -> None:
    profiles = energy.load_power_profiles(path_l3vpn_power)
    assert [p.element_id for p in profiles] == ["P1", "P2"]
    assert profiles[0].samples == ((1614556800, 1614558600, 500.0), (1614558600, 1614560400, 700.0))
    assert profiles[1].measurement_location == "core rack 3"


@pytest.mark.parametrize(['text', 'expected'], [
    ("element_id,start_utc,avg_power_w\nP1,0,5\n", ("E-CSV", "1")),
    ("element_id,start_utc,end_utc,avg_power_w\nP1,0,10,5\nP1,zero,10,5\n", ("E-CSV", "3")),
    ("element_id,start_utc,end_utc,avg_power_w\n,0,10,5\n", ("E-CSV", "2")),
    ("element_id,start_utc,end_utc,avg_power_w\nP1,0,10,5\nP1,5,20,5\n", ("E-BAD-PROFILE", "P1")),
    ("element_id,start_utc,end_utc,avg_power_w\nP1,0,10,5\nP1,10,20,nan\n", ("E-CSV", "3")),
    ("element_id,start_utc,end_utc,avg_power_w\nP1,0,10,-1\n", ("E-CSV", "2")),
    ("element_id,start_utc,end_utc,avg_power_w\nP1,0,99999999999999999999,5\n", ("E-BAD-PROFILE", "P1"))
])
def test_load_power_profiles_MetroModelError(tmp_path, text: str, expected: Tuple[str, str]) -> None:
    path_csv = os.path.join(str(tmp_path), "power.csv")
    with open(path_csv, "w") as f:
        f.write(text)
    with pytest.raises(MetroModelError) as err:
        energy.load_power_profiles(path_csv)
    assert (err.value.code, err.value.subject) == expected


def test_load_power_profiles_missing_file(tmp_path) -> None:
    with pytest.raises(MetroModelError) as err:
        energy.load_power_profiles(os.path.join(str(tmp_path), "missing.csv"))
    assert err.value.code == "E-IO"


def test_render_segment_csv(l3vpn: Model) -> None:
    report = energy.attribute_energy(l3vpn, recomposition.serial_recomposition(l3vpn), [], (0, 1800), energy.SplitPolicy())
    assert energy.render_segment_csv(report).splitlines()[:3] == [
        "segment_id,energy_wh,interval_start,interval_end",
        "seg-core,600.0,0,1800",
        "seg-cust-a,25.0,0,1800"
    ]


def test_render_report_text(l3vpn: Model) -> None:
    report = energy.attribute_energy(l3vpn, recomposition.serial_recomposition(l3vpn), [], HOUR, energy.SplitPolicy())
    text = energy.render_report_text(report)
    assert text.startswith("Energy report Two-site L3VPN over an MPLS core [1614556800, 1614560400]\n")
    assert "Hidden consumers:\n  P1 is transparent at ip" in text


@PROPERTY_SETTINGS
@given(
    case=st.sampled_from(TEMPLATE_CASES),
    watts=st.lists(st.floats(min_value=0, max_value=5000, allow_nan=False), min_size=40, max_size=40),
    bounds=st.lists(st.integers(min_value=0, max_value=7200), min_size=3, max_size=3).map(sorted)
)
def test_attribute_energy_additive_in_time(case: Tuple[str, bool], watts: List[float], bounds: List[int]) -> None:
    model = template_model(*case)
    coverage = recomposition.serial_recomposition(model)
    profiles = [
        profile(element_id, (0, 3600, watts[2 * i]), (3600, 7200, watts[2 * i + 1]))
        for i, element_id in enumerate(model.powered_elements())
    ]
    start, middle, end = bounds
    whole, first, second = [
        energy.attribute_energy(model, coverage, profiles, interval, energy.SplitPolicy())
        for interval in [(start, end), (start, middle), (middle, end)]
    ]
    assert whole.total_wh == pytest.approx(first.total_wh + second.total_wh, rel=1e-9, abs=1e-6)
    assert whole.uncaptured_wh == pytest.approx(first.uncaptured_wh + second.uncaptured_wh, rel=1e-9, abs=1e-6)
    for segment_id, wh in whole.per_segment_wh.items():
        assert wh == pytest.approx(first.per_segment_wh[segment_id] + second.per_segment_wh[segment_id], rel=1e-9, abs=1e-6)


@PROPERTY_SETTINGS
@given(
    locations=st.lists(st.text(max_size=20), min_size=6, max_size=6),
    days=st.lists(st.integers(min_value=0, max_value=20000), min_size=6, max_size=6)
)
def test_attribute_energy_echoes_measurements(locations: List[str], days: List[int]) -> None:
    l3vpn = load_sample("l3vpn.metromodel.json")
    element_ids = l3vpn.powered_elements()
    profiles = [
        energy.PowerProfile(element_id, ((0, 3600, 10),), locations[i], (f"day {days[i]}", f"day {days[i] + 1}"))
        for i, element_id in enumerate(element_ids)
    ]
    report = energy.attribute_energy(l3vpn, recomposition.serial_recomposition(l3vpn), profiles, HOUR, energy.SplitPolicy())
    assert report.metadata["measurements"] == [
        {
            "element_id": element_id,
            "measurement_location": locations[i],
            "measurement_dates": [f"day {days[i]}", f"day {days[i] + 1}"]
        }
        for i, element_id in sorted(enumerate(element_ids), key=lambda pair: pair[1])
    ]


def test_load_power_profiles_not_utf8(tmp_path) -> None:
    path_csv = os.path.join(str(tmp_path), "power.csv")
    with open(path_csv, "wb") as f:
        f.write(b"element_id,start_utc,end_utc,avg_power_w\n\xff\xfe,0,10,5\n")
    with pytest.raises(MetroModelError) as err:
        energy.load_power_profiles(path_csv)
    assert (err.value.code, err.value.subject) == ("E-IO", path_csv)
