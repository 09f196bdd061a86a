import os

from ztac_py.protocol.phases import phase1_distribute_chain, phase1_key_agreement, phase1_seed_token
from ztac_py.simnet.leaks import chain_secrets, find_leaks
from ztac_py.simnet.runner import run_scenario
from ztac_py.simnet.scenario import load_scenario

from ..test_resources import build_network, scenario_dir


def test_bit_flip_storm() -> None:
    """
    1000 readings each corrupted by one random bit on the bus: none is
    accepted, nothing is stored and the leak scan over every entity and the
    wire finds nothing
    """
    report = run_scenario(load_scenario(os.path.join(scenario_dir, "bit_storm.scn")))

    assert report.stats is not None
    assert report.stats.tampered == 1000
    assert report.stats.tampered_accepted == 0
    assert report.stats.balanced
    assert len(report.interference) == 1000
    assert all(str(item.kind) == "flip" for item in report.interference)

    assert report.ok, report.violations
    assert report.leaks == []
    assert all(window.accepted == () for window in report.windows)
    assert report.stored_records == 0
    assert sum(count for (holder, _), count in report.rejections.items() if holder == "wnc") == 1000


def test_sensor_states_are_scanned() -> None:
    """
    provisioned sensors hold only their own chain; a sensor holding another
    sensor's chain is reported against that sensor's keys
    """
    network = build_network(["w1", "w2"], [], chain_length=3)
    for sensor in network.sensors.values():
        phase1_key_agreement(network.transport, network.wnc, sensor)
        phase1_seed_token(network.wnc, sensor)
        phase1_distribute_chain(network.transport, network.wnc, sensor)
    sensors = list(network.sensors.values())
    plaintexts = {("w1", 1): b"w1|window=1|reading=00000000000000ff"}

    assert find_leaks(network.wnc, network.csp, [], plaintexts, [], sensors) == []

    network.sensors["w2"].chain = network.sensors["w1"].chain
    leaks = find_leaks(network.wnc, network.csp, [], plaintexts, [], sensors)
    assert {leak.holder for leak in leaks} == {"w2"}
    assert sorted(leak.label for leak in leaks) == [f"w1/h{index}" for index in range(4)]
    assert len(chain_secrets(network.wnc)) == 8

    # a reading crossing the wire in the clear
    assert find_leaks(network.wnc, network.csp, [], plaintexts, [plaintexts[("w1", 1)]]) != []
