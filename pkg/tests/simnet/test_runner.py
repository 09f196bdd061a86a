# pylint: disable=[W0621]
# disable redefined-outer-name, needed for pytest fixtures

import dataclasses
import os

import pytest

from ztac_py.runtime_utils.op_tally import COST_MODEL_TERMS, Phase, Term
from ztac_py.simnet.error import ConfigError
from ztac_py.simnet.report import counts_cell, read_counts, render_report, split_sections, tally_counts
from ztac_py.simnet.runner import RunReport, resolve_seed, run_scenario, seed_streams
from ztac_py.simnet.scenario import ScenarioConfig, load_scenario

from ..test_resources import scenario_dir


@pytest.fixture(scope="module")
def honest_config() -> ScenarioConfig:
    """one sensor, one user, four windows, chain length 4"""
    return load_scenario(os.path.join(scenario_dir, "honest.scn"))


@pytest.fixture(scope="module")
def honest(honest_config: ScenarioConfig) -> RunReport:
    """report of an undisturbed run"""
    return run_scenario(honest_config)


def test_honest_outcomes(honest: RunReport) -> None:
    """
    every window is stored and the user recovers every reading
    """
    assert honest.ok, honest.violations
    assert honest.setup == {"w1": "ok", "csp": "ok"}
    assert honest.registrations == {"u1": "registered"}
    assert [(window.accepted, window.uploaded, window.stored) for window in honest.windows] == [
        (("w1",), True, True)
    ] * 4
    assert honest.stored_records == 4
    assert [(access.status, access.readings, access.windows) for access in honest.access] == [
        ("recovered", 4, (1, 2, 3, 4))
    ]
    assert honest.leaks == []
    assert honest.curious is not None and honest.curious.contained
    assert honest.curious.identity_keygen_refused
    assert honest.rejections == {}


def test_honest_cost_table(honest: RunReport) -> None:
    """
    per phase and role operation counts for n = 4 and four windows
    """
    tally = honest.tally
    n = honest.chain_length
    init, reg, up, down = Phase.INITIALIZATION, Phase.REGISTRATION, Phase.UPLOADING, Phase.DOWNLOADING

    expected = {
        (init, "sensor", Term.ECDH): 1,
        (init, "sensor", Term.ENC): 1,
        (init, "sensor", Term.SHA): n,
        (init, "wnc", Term.ECDH): 2,
        (init, "wnc", Term.ENC): 2,
        (init, "wnc", Term.SHA): n + 1,
        (init, "wnc", Term.ABE_SETUP): 1,
        (init, "wnc", Term.IBBE): 1,
        (init, "csp", Term.ECDH): 1,
        (init, "csp", Term.ENC): 1,
        (reg, "csp", Term.VER): 1,
        (reg, "csp", Term.ABE_KEYGEN): 1,
        (reg, "user", Term.VER): 1,
        (reg, "user", Term.IBBE): 1,
        (reg, "user", Term.ABE_KEYGEN): 1,
        (up, "sensor", Term.ENC): 4,
        (up, "wnc", Term.ABE_ENC): 4,
        (up, "wnc", Term.ENC): 4,
        (up, "wnc", Term.SHA): 8,
        (up, "wnc", Term.IBBE): 4,
        (down, "csp", Term.VER): 1,
        (down, "user", Term.ABE_DEC): 4,
        (down, "user", Term.ENC): 8,
        (down, "user", Term.IBBE): 4,
    }
    for (phase, role, term), count in expected.items():
        assert tally.cell(phase, term, role=role) == count, f"{phase} {role} {term}"

    assert tally.cell(up, Term.ABE_DEC, role="csp") == 0
    assert tally.cell(down, Term.ABE_DEC, role="csp") == 0


def test_deterministic(honest_config: ScenarioConfig, honest: RunReport) -> None:
    """
    the same scenario and seed render the same report
    """
    assert render_report(run_scenario(honest_config)) == render_report(honest)


def test_seed_resolution(honest_config: ScenarioConfig, monkeypatch: pytest.MonkeyPatch) -> None:
    """
    an explicit seed beats the scenario's, which beats the environment
    """
    assert resolve_seed(honest_config, 99) == 99
    assert resolve_seed(honest_config) == 11

    unseeded = dataclasses.replace(honest_config, seed=None)
    assert resolve_seed(unseeded) == 7
    monkeypatch.setenv("ZTAC_SEED", "21")
    assert resolve_seed(unseeded) == 21

    first, second = seed_streams(3), seed_streams(3)
    assert [stream.random() for stream in first.values()] == [stream.random() for stream in second.values()]
    assert first["keys"].random() != first["adversary"].random()


def test_short_chain(honest_config: ScenarioConfig) -> None:
    """
    runs refuse configurations whose chain can not cover every window
    """
    with pytest.raises(ConfigError):
        run_scenario(dataclasses.replace(honest_config, chain_length=1))


def test_lockout() -> None:
    """
    four authentication failures and two silent windows push the sensor under
    the threshold; its honest message in window 7 is refused as untrusted
    """
    report = run_scenario(load_scenario(os.path.join(scenario_dir, "lockout.scn")))

    assert report.ok, report.violations
    scores = [entry.score for entry in report.ledger if entry.holder == "wnc" and entry.entity == "w1"]
    assert scores == pytest.approx([90.0, 80.0, 70.0, 60.0, 52.0, 44.0, 44.0])

    last = report.windows[-1]
    assert (last.window, last.emitted, last.accepted, last.untrusted) == (7, ("w1",), (), ("w1",))
    assert report.rejections[("wnc", "HMAC_FAILURE")] == 4
    assert report.rejections[("wnc", "UNTRUSTED")] == 1
    assert report.stored_records == 0
    assert [(access.status, access.readings) for access in report.access] == [("recovered", 0)]


def test_outsiders() -> None:
    """
    only the user admitted by both the policy and the receiver set recovers anything
    """
    report = run_scenario(load_scenario(os.path.join(scenario_dir, "outsiders.scn")))

    assert report.ok, report.violations
    statuses = {access.user: (access.status, access.readings) for access in report.access}
    assert statuses == {
        "u1": ("recovered", 1),
        "u2": ("refused:NotAReceiver", 0),
        "u3": ("refused:PolicyNotSatisfied", 0),
    }
    assert report.leaks == []


def test_replayed_readings(honest_config: ScenarioConfig) -> None:
    """
    replayed sensor data is refused on its stale token and never stored twice
    """
    config = dataclasses.replace(honest_config, adversary=os.path.join(scenario_dir, "replay_reading.adv"))
    report = run_scenario(config)

    assert report.ok, report.violations
    assert report.rejections == {("wnc", "TOKEN_MISMATCH"): 4}
    assert report.stored_records == 4
    assert report.stats is not None
    assert report.stats.injected == 4
    assert report.stats.balanced


def test_flipped_reading() -> None:
    """
    a corrupted first reading costs that window its upload but nothing else
    """
    report = run_scenario(load_scenario(os.path.join(scenario_dir, "attacked.scn")))

    assert report.ok, report.violations
    assert report.stats is not None
    assert report.stats.tampered == 1
    assert report.stats.tampered_accepted == 0
    assert [(window.accepted, window.stored) for window in report.windows] == [((), False), (("w1",), True)]
    assert [access.readings for access in report.access] == [1]


def test_per_phase_table(honest: RunReport) -> None:
    """
    the pivoted table agrees with the tally and keeps cost model columns first
    """
    table = tally_counts(honest)
    terms = [term.value for term in COST_MODEL_TERMS]

    assert table.columns[: 2 + len(terms)] == ["phase", "role", *terms]
    assert table.row(0)[:2] == (Phase.INITIALIZATION.value, "sensor")
    for phase in Phase:
        for role in ("sensor", "wnc", "csp", "user"):
            for term in COST_MODEL_TERMS:
                assert counts_cell(table, phase, role, term) == honest.tally.cell(phase, term, role=role)

    # the COUNTS section of the report is this table
    assert read_counts(split_sections(render_report(honest))).equals(table)


def test_lost_token_update(honest_config: ScenarioConfig) -> None:
    """
    a dropped token update costs the sensor one window, not its trust: the
    coordinator re-issues the update and the later windows are stored again
    """
    config = dataclasses.replace(honest_config, adversary=os.path.join(scenario_dir, "drop_first_update.adv"))
    report = run_scenario(config)

    assert report.ok, report.violations
    assert report.rejections == {("wnc", "TOKEN_RESYNC"): 1}
    assert [(window.accepted, window.stored) for window in report.windows] == [
        (("w1",), True),
        ((), False),
        (("w1",), True),
        (("w1",), True),
    ]
    scores = [entry.score for entry in report.ledger if entry.holder == "wnc" and entry.entity == "w1"]
    assert scores == pytest.approx([100.0] * 4)
    assert report.stats is not None
    assert report.stats.dropped == 1
    assert report.stats.balanced
    assert [(access.status, access.readings) for access in report.access] == [("recovered", 3)]
