"""
Scenario runner: builds the entities of a scenario on a simulated bus and
drives Initialization, User registration and the data transfer windows,
then audits the finished run.

Window layout, in ticks after the window's first tick `s`:

    s - 1     operator reinstatements are sent (delivered at s)
    s         sensors emit
    s + 1     the coordinator validates and returns the next token
    s + 2     sensors store their token; the window closes and the upload is sent
    s + 3     the cloud provider validates and stores the upload
"""

import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple

from ztac_py.crypto_core.certificates import RootAuthority
from ztac_py.crypto_core.error import CryptoCoreException, MalformedEncoding
from ztac_py.pairing.error import PairingSchemeException
from ztac_py.pairing.ibbe import IbbeParams
from ztac_py.protocol.csp import Csp
from ztac_py.protocol.entity import Directory
from ztac_py.protocol.error import (
    AccessDenied,
    ChainExhausted,
    LinkNotEstablished,
    NoDataForEpoch,
    ProtocolException,
)
from ztac_py.protocol.messages import MessageType, peek_type
from ztac_py.protocol.phases import (
    phase1_abe_setup_and_escrow,
    phase1_distribute_chain,
    phase1_key_agreement,
    phase1_seed_token,
    phase2_register,
    phase3_access,
)
from ztac_py.protocol.sensor import Sensor
from ztac_py.protocol.user import Reading, User
from ztac_py.protocol.wnc import Wnc
from ztac_py.runtime_utils.env_validation import env_int
from ztac_py.runtime_utils.op_tally import OperationTally, Phase, in_phase, recording
from ztac_py.runtime_utils.process_logger import ProcessLogger
from ztac_py.trust_ledger.dump import LedgerEntry

from .adversary import Adversary, Interference, load_script
from .bus import BusStats, SimBus
from .error import ConfigError
from .leaks import CuriousAttempt, Leak, curious_csp_attempt, find_leaks
from .scenario import ScenarioConfig

DEFAULT_SEED = 7

SetupErrors = (ProtocolException, CryptoCoreException, PairingSchemeException)


def seed_streams(seed: int) -> Dict[str, random.Random]:
    """independent generators per concern, so adversary draws never shift key material"""
    return {name: random.Random(f"ztac:{seed}:{name}") for name in ("keys", "readings", "adversary", "audit")}


def resolve_seed(config: ScenarioConfig, override: Optional[int] = None) -> int:
    """--seed beats the scenario's seed, which beats ZTAC_SEED"""
    if override is not None:
        return override
    if config.seed is not None:
        return config.seed
    return env_int("ZTAC_SEED", DEFAULT_SEED)


@dataclass(frozen=True)
class WindowOutcome:
    """what happened in one data transfer window"""

    window: int
    emitted: Tuple[str, ...]
    accepted: Tuple[str, ...]
    untrusted: Tuple[str, ...]
    uploaded: bool
    stored: bool
    detail: str = ""


@dataclass(frozen=True)
class AccessOutcome:
    """result of one user's download"""

    user: str
    status: str
    windows: Tuple[int, ...] = ()
    readings: int = 0
    detail: str = ""


@dataclass
class RunReport:
    """everything a finished run produced"""

    scenario: str
    seed: int
    chain_length: int
    epochs: int
    tally: OperationTally
    setup: Dict[str, str] = field(default_factory=dict)
    registrations: Dict[str, str] = field(default_factory=dict)
    windows: List[WindowOutcome] = field(default_factory=list)
    access: List[AccessOutcome] = field(default_factory=list)
    ledger: List[LedgerEntry] = field(default_factory=list)
    rejections: Dict[Tuple[str, str], int] = field(default_factory=dict)
    stats: Optional[BusStats] = None
    interference: List[Interference] = field(default_factory=list)
    leaks: List[Leak] = field(default_factory=list)
    curious: Optional[CuriousAttempt] = None
    violations: List[str] = field(default_factory=list)
    readings: Dict[str, List[Reading]] = field(default_factory=dict)
    stored_records: int = 0

    @property
    def ok(self) -> bool:
        """did every invariant hold?"""
        return not self.violations


@dataclass
class World:
    """the entities of a scenario wired onto one bus"""

    config: ScenarioConfig
    bus: SimBus
    directory: Directory
    wnc: Wnc
    csp: Csp
    sensors: Dict[str, Sensor]
    users: Dict[str, User]


def build_world(config: ScenarioConfig, streams: Mapping[str, random.Random]) -> World:
    """create keys, certificates and entities; runs before any tally records"""
    rng = streams["keys"]
    adversary = None
    if config.adversary is not None:
        adversary = Adversary(load_script(config.adversary), streams["adversary"])
    bus = SimBus(adversary)

    authority = RootAuthority("root", rng)
    directory = Directory(root_key=authority.verification_key)
    wnc = Wnc(
        config.wnc,
        rng,
        directory,
        config.csp,
        chain_length=config.chain_length,
        threshold=config.threshold,
        weights=config.weights,
        schedule=config.schedule,
    )
    csp = Csp(config.csp, rng, directory, authority, config.wnc, threshold=config.csp_threshold)
    sensors = {name: Sensor(name, rng, directory, config.wnc) for name in config.sensors}
    users = {name: User(name, rng, directory, authority, config.csp) for name in config.users}

    bus.register(wnc, csp, *sensors.values(), *users.values())
    return World(config, bus, directory, wnc, csp, sensors, users)


class ScenarioRunner:
    """runs one scenario with one seed"""

    def __init__(self, config: ScenarioConfig, seed: int) -> None:
        self.config = config
        self.seed = seed
        self.streams = seed_streams(seed)
        self.world = build_world(config, self.streams)
        self.plaintexts: Dict[Tuple[str, int], bytes] = {}
        self.report = RunReport(
            scenario=config.name,
            seed=seed,
            chain_length=config.chain_length,
            epochs=config.epochs,
            tally=OperationTally(),
        )

    def run(self) -> RunReport:
        """Initialization, Registration, every window, Downloading, then the audits"""
        with recording(self.report.tally):
            self.initialize()
            self.register_users()
            for window in self.config.windows():
                with in_phase(Phase.UPLOADING):
                    self.transfer_window(window)
            self.download()
        self.audit()
        return self.report

    def _note_setup(self, step: str, exception: Optional[Exception] = None) -> None:
        self.report.setup[step] = "ok" if exception is None else f"{type(exception).__name__}: {exception}"

    def initialize(self) -> None:
        """key agreement, seed tokens and chains per sensor, scheme setup and escrow"""
        world = self.world
        process_logger = ProcessLogger("initialization", scenario=self.config.name, sensors=len(world.sensors))
        process_logger.log_start()

        for name, sensor in sorted(world.sensors.items()):
            try:
                phase1_key_agreement(world.bus, world.wnc, sensor)
                phase1_seed_token(world.wnc, sensor)
                phase1_distribute_chain(world.bus, world.wnc, sensor)
                self._note_setup(name)
            except SetupErrors as exception:
                self._note_setup(name, exception)

        try:
            phase1_key_agreement(world.bus, world.wnc, world.csp)
            phase1_abe_setup_and_escrow(
                world.bus,
                world.wnc,
                world.csp,
                self.config.identity_labels,
                self.config.universe,
                self.config.receivers,
                self.config.users,
                {user: self.config.policy(user) for user in self.config.users},
                IbbeParams(max_receivers=self.config.max_receivers, id_length=self.config.id_length),
            )
            self._note_setup(world.csp.name)
        except SetupErrors as exception:
            self._note_setup(world.csp.name, exception)

        process_logger.add_metadata(failed_steps=sum(1 for value in self.report.setup.values() if value != "ok"))
        process_logger.log_complete()

    def register_users(self) -> None:
        """signed registration of every user"""
        for name, user in sorted(self.world.users.items()):
            try:
                phase2_register(self.world.bus, user, self.world.csp)
                self.report.registrations[name] = "registered"
            except SetupErrors as exception:
                self.report.registrations[name] = f"{type(exception).__name__}: {exception}"

    def _events_at(self, events: Mapping[str, Iterable[Tuple[int, float]]], window: int) -> List[Tuple[str, float]]:
        return [
            (entity, severity)
            for entity, entries in sorted(events.items())
            for event_window, severity in entries
            if event_window == window
        ]

    def _reinstate(self, window: int) -> None:
        world = self.world
        for sensor, windows in sorted(self.config.reinstate.items()):
            if window in windows and sensor in world.wnc.sensors and world.wnc.has_link(sensor):
                with in_phase(Phase.INITIALIZATION):
                    world.bus.send(world.wnc.name, world.wnc.reinstate(sensor))

    def _plaintext(self, sensor: str, window: int) -> bytes:
        reading = self.streams["readings"].getrandbits(64)
        return f"{sensor}|window={window}|reading={reading:016x}".encode("utf-8")

    def transfer_window(self, window: int) -> None:
        """one data transfer window, see the module docstring for its tick layout"""
        world, config = self.world, self.config
        bus = world.bus
        process_logger = ProcessLogger("transfer_window", scenario=config.name, window=window)
        process_logger.log_start()

        self._reinstate(window)
        start = bus.tick + bus.latency
        bus.run_until(start)

        world.wnc.open_window(window)
        for sensor, severity in self._events_at(config.reports, window):
            if sensor in world.wnc.sensors:
                world.wnc.user_report(sensor, severity)
        for user, severity in self._events_at(config.abuse, window):
            world.csp.report_abuse(user, severity, timestamp=window)

        untrusted = tuple(sorted(name for name in world.wnc.sensors if not world.wnc.trusted(name)))
        emitted: List[str] = []
        notes: List[str] = []

        with in_phase(Phase.UPLOADING):
            for name, sensor in sorted(world.sensors.items()):
                if window in config.silent.get(name, frozenset()):
                    continue
                plaintext = self._plaintext(name, window)
                try:
                    message = sensor.emit(plaintext, window, forge=window in config.forge.get(name, frozenset()))
                except (ChainExhausted, LinkNotEstablished) as exception:
                    notes.append(f"{name}: {exception}")
                    continue
                self.plaintexts[(name, window)] = plaintext
                bus.send(name, message)
                emitted.append(name)

            bus.run_until(start + config.ticks_per_epoch - 2)
            self.report.ledger.extend(world.wnc.close_window())
            accepted = tuple(item.sensor for item in world.wnc.pending.get(window, []))

            uploaded = False
            stored_before = len(world.csp.records)
            try:
                upload = world.wnc.build_upload(window, config.window_attributes(window))
                bus.send(world.wnc.name, upload)
                uploaded = True
            except (NoDataForEpoch, LinkNotEstablished) as exception:
                notes.append(str(exception))
            bus.run_until(start + config.ticks_per_epoch - 1)

        self.report.ledger.extend(world.csp.ledger(window))
        stored = len(world.csp.records) > stored_before
        self.report.windows.append(
            WindowOutcome(window, tuple(emitted), accepted, untrusted, uploaded, stored, "; ".join(notes))
        )

        process_logger.add_metadata(emitted=len(emitted), accepted=len(accepted), uploaded=uploaded, stored=stored)
        process_logger.log_complete()

    def download(self) -> None:
        """every user requests its lambda and opens what it receives"""
        for name, user in sorted(self.world.users.items()):
            try:
                readings = phase3_access(self.world.bus, user, self.world.csp, self.config.user_lambda(name))
                outcome = AccessOutcome(name, "recovered", readings=len(readings))
            except AccessDenied as exception:
                outcome = AccessOutcome(name, f"denied:{exception.reason}")
            except PairingSchemeException as exception:
                outcome = AccessOutcome(name, f"refused:{type(exception).__name__}", detail=str(exception))
            except (ProtocolException, CryptoCoreException) as exception:
                outcome = AccessOutcome(name, f"failed:{type(exception).__name__}", detail=str(exception))

            windows = tuple(sorted({reading.window for reading in user.readings}))
            self.report.access.append(
                AccessOutcome(outcome.user, outcome.status, windows, len(user.readings), outcome.detail)
            )
            self.report.readings[name] = list(user.readings)

    def audit(self) -> None:
        """leak scan, curious provider, conservation and the per window gates"""
        world, report = self.world, self.report
        bus = world.bus
        process_logger = ProcessLogger("audit", scenario=self.config.name)
        process_logger.log_start()

        report.stats = bus.stats()
        report.interference = list(bus.adversary.log) if bus.adversary is not None else []
        report.stored_records = len(world.csp.records)

        rejections: Counter[Tuple[str, str]] = Counter()
        for delivery in bus.log:
            if not delivery.result.accepted:
                rejections[(delivery.envelope.receiver, str(delivery.result.reason))] += 1
        report.rejections = dict(sorted(rejections.items()))

        report.leaks = find_leaks(
            world.wnc, world.csp, world.users.values(), self.plaintexts, bus.wire_bytes(), world.sensors.values()
        )
        report.curious = curious_csp_attempt(
            world.csp,
            world.wnc,
            world.users.values(),
            self.plaintexts,
            self.config.identity_labels,
            self.streams["audit"],
        )
        report.violations = check_invariants(report, accepted_sensor_payloads(bus))

        process_logger.add_metadata(leaks=len(report.leaks), violations=len(report.violations))
        process_logger.log_complete()


def accepted_sensor_payloads(bus: SimBus) -> List[bytes]:
    """payloads of every SensorData delivery the coordinator accepted"""
    payloads = []
    for delivery in bus.log:
        if not delivery.result.accepted:
            continue
        try:
            if peek_type(delivery.envelope.payload) == MessageType.SENSOR_DATA:
                payloads.append(delivery.envelope.payload)
        except MalformedEncoding:
            continue
    return payloads


def check_invariants(report: RunReport, accepted_payloads: List[bytes]) -> List[str]:
    """every property a finished run must hold, as readable violations"""
    violations = [f"leak: {leak}" for leak in report.leaks]

    if report.stats is not None:
        if report.stats.tampered_accepted:
            violations.append(f"{report.stats.tampered_accepted} tampered messages accepted")
        if not report.stats.balanced:
            violations.append(
                f"conservation: sent={report.stats.sent} delivered={report.stats.delivered} "
                f"dropped={report.stats.dropped} in_flight={report.stats.in_flight}"
            )

    for outcome in report.windows:
        admitted: Set[str] = set(outcome.untrusted) & set(outcome.accepted)
        if admitted:
            violations.append(f"window {outcome.window}: untrusted sensors {sorted(admitted)} accepted")

    repeats = [payload for payload, count in Counter(accepted_payloads).items() if count > 1]
    if repeats:
        violations.append(f"{len(repeats)} sensor messages accepted more than once")

    if report.curious is not None:
        if not report.curious.contained:
            violations.append("cloud provider recovered data or keys from its own state")
        if not report.curious.identity_keygen_refused:
            violations.append("cloud provider issued a key over an identity attribute")
    return violations


def run_scenario(config: ScenarioConfig, seed: Optional[int] = None) -> RunReport:
    """
    run a validated scenario end to end. the seed fixes every random choice,
    so equal (config, seed) pairs produce equal reports
    """
    if config.chain_length < config.epochs:
        raise ConfigError([("chain_length", f"chain length {config.chain_length} is below epochs {config.epochs}")])
    resolved = resolve_seed(config, seed)

    process_logger = ProcessLogger("run_scenario", scenario=config.name, seed=resolved, epochs=config.epochs)
    process_logger.log_start()
    try:
        report = ScenarioRunner(config, resolved).run()
    except Exception as exception:
        process_logger.log_failure(exception)
        raise
    process_logger.add_metadata(stored_records=report.stored_records, violations=len(report.violations))
    process_logger.log_complete()
    return report
