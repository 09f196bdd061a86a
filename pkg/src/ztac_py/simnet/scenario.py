"""
Scenario files.

A scenario is line oriented `key = value` text; `#` starts a comment. Lists
are separated by commas or whitespace. Every problem found while parsing is
collected into a single ConfigError so one run reports all of them.
"""

# use annotations to type hint a method with the type of the enclosing class
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Set, Tuple

from ztac_py.pairing.access_tree import AccessNode, parse_policy, policy_attributes
from ztac_py.pairing.error import PairingSchemeException
from ztac_py.trust_ledger.error import TrustLedgerException
from ztac_py.trust_ledger.scoring import DEFAULT_THRESHOLD, PenaltySchedule, ScoringWeights

from .error import ConfigError

# smallest window that fits emission, token update and upload
MIN_TICKS_PER_EPOCH = 4

Diagnostics = List[Tuple[str, str]]
WindowEvents = Tuple[Tuple[int, float], ...]


@dataclass(frozen=True)
class ScenarioConfig:
    """a fully validated scenario"""

    name: str = "scenario"
    seed: Optional[int] = None
    sensors: Tuple[str, ...] = ("w1",)
    wnc: str = "wnc"
    csp: str = "csp"
    users: Tuple[str, ...] = ("u1",)
    receivers: Tuple[str, ...] = ("u1",)
    universe: Tuple[str, ...] = ("vital",)
    identities: Tuple[str, ...] = ()
    attributes: Tuple[str, ...] = ("vital",)
    attributes_by_window: Mapping[int, Tuple[str, ...]] = field(default_factory=dict)
    policies: Mapping[str, str] = field(default_factory=dict)
    lambdas: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)
    chain_length: int = 16
    epochs: int = 4
    ticks_per_epoch: int = MIN_TICKS_PER_EPOCH
    threshold: float = DEFAULT_THRESHOLD
    csp_threshold: float = DEFAULT_THRESHOLD
    schedule: PenaltySchedule = PenaltySchedule()
    weights: ScoringWeights = ScoringWeights()
    silent: Mapping[str, FrozenSet[int]] = field(default_factory=dict)
    forge: Mapping[str, FrozenSet[int]] = field(default_factory=dict)
    reports: Mapping[str, WindowEvents] = field(default_factory=dict)
    abuse: Mapping[str, WindowEvents] = field(default_factory=dict)
    reinstate: Mapping[str, FrozenSet[int]] = field(default_factory=dict)
    max_receivers: int = 8
    id_length: int = 32
    adversary: Optional[str] = None

    @property
    def identity_labels(self) -> Tuple[str, ...]:
        """U1, one label per receiver unless given"""
        if self.identities:
            return self.identities
        return tuple(f"id:{receiver}" for receiver in self.receivers)

    def policy(self, user: str) -> AccessNode:
        """predefined access tree of user"""
        return parse_policy(self.policies[user])

    def window_attributes(self, window: int) -> Tuple[str, ...]:
        """attribute set I of the record uploaded for window"""
        return self.attributes_by_window.get(window, self.attributes)

    def user_lambda(self, user: str) -> Tuple[str, ...]:
        """attribute set a user requests, every record if unset"""
        return self.lambdas.get(user, ())

    def windows(self) -> range:
        """window indices of the data transfer phase"""
        return range(1, self.epochs + 1)


def _items(value: str) -> Tuple[str, ...]:
    return tuple(item for item in value.replace(",", " ").split() if item)


def _windows(value: str) -> FrozenSet[int]:
    return frozenset(int(item) for item in _items(value))


def _window_events(value: str) -> WindowEvents:
    events = []
    for item in _items(value):
        window, _, severity = item.partition(":")
        events.append((int(window), float(severity) if severity else 1.0))
    return tuple(events)


def _positive(value: str) -> int:
    number = int(value)
    if number < 1:
        raise ValueError(f"{number} is not positive")
    return number


_SCALARS: Dict[str, Callable[[str], object]] = {
    "seed": int,
    "wnc": str.strip,
    "csp": str.strip,
    "sensors": _items,
    "users": _items,
    "receivers": _items,
    "universe": _items,
    "identities": _items,
    "attributes": _items,
    "chain_length": _positive,
    "epochs": _positive,
    "ticks_per_epoch": _positive,
    "threshold": float,
    "csp_threshold": float,
    "max_receivers": _positive,
    "id_length": _positive,
}

_PENALTIES = {
    "penalty.auth_failure": "auth_failure",
    "penalty.unauthorized_message": "unauthorized_message",
    "penalty.inactivity": "inactivity",
    "penalty.user_report": "user_report",
}

_PER_ENTITY: Dict[str, Callable[[str], object]] = {
    "policy": str.strip,
    "lambda": _items,
    "silent": _windows,
    "forge": _windows,
    "report": _window_events,
    "abuse": _window_events,
    "reinstate": _windows,
}


def _read_lines(text: str, diagnostics: Diagnostics) -> List[Tuple[str, str]]:
    pairs = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, separator, value = line.partition("=")
        if not separator or not key.strip():
            diagnostics.append((f"line {number}", f"expected 'key = value', got {raw.strip()!r}"))
            continue
        pairs.append((key.strip(), value.strip()))
    return pairs


def parse_scenario(text: str, name: str = "scenario", base_dir: Optional[str] = None) -> ScenarioConfig:
    """validated ScenarioConfig from scenario text, ConfigError listing every problem"""
    diagnostics: Diagnostics = []
    values: Dict[str, object] = {"name": name}
    penalties: Dict[str, float] = {}
    per_entity: Dict[str, Dict[str, object]] = {key: {} for key in _PER_ENTITY}
    windowed: Dict[int, Tuple[str, ...]] = {}

    for key, value in _read_lines(text, diagnostics):
        try:
            if key in _SCALARS:
                values[key] = _SCALARS[key](value)
            elif key in _PENALTIES:
                penalties[_PENALTIES[key]] = float(value)
            elif key == "weights":
                sf1, sf2, sf3 = (float(item) for item in _items(value))
                values["weights"] = ScoringWeights(sf1, sf2, sf3)
            elif key == "adversary":
                path = value if base_dir is None else os.path.join(base_dir, value)
                values["adversary"] = path
            elif key.startswith("attributes."):
                windowed[int(key.split(".", 1)[1])] = _items(value)
            elif key.split(".", 1)[0] in _PER_ENTITY and "." in key:
                kind, entity = key.split(".", 1)
                per_entity[kind][entity] = _PER_ENTITY[kind](value)
            else:
                diagnostics.append((key, "unknown key"))
        except (ValueError, TrustLedgerException) as exception:
            diagnostics.append((key, str(exception)))

    if penalties:
        values["schedule"] = PenaltySchedule(**penalties)  # type: ignore[arg-type]
    values["attributes_by_window"] = windowed
    values["policies"] = per_entity["policy"]
    values["lambdas"] = per_entity["lambda"]
    values["silent"] = per_entity["silent"]
    values["forge"] = per_entity["forge"]
    values["reports"] = per_entity["report"]
    values["abuse"] = per_entity["abuse"]
    values["reinstate"] = per_entity["reinstate"]

    if diagnostics:
        raise ConfigError(diagnostics)
    config = ScenarioConfig(**values)  # type: ignore[arg-type]
    validate_scenario(config)
    return config


def load_scenario(path: str) -> ScenarioConfig:
    """parse a scenario file; relative adversary paths resolve against its directory"""
    try:
        with open(path, "r", encoding="utf-8") as scenario_file:
            text = scenario_file.read()
    except OSError as exception:
        raise ConfigError([("path", f"can not read {path}: {exception.strerror}")]) from exception
    name = os.path.splitext(os.path.basename(path))[0]
    return parse_scenario(text, name=name, base_dir=os.path.dirname(os.path.abspath(path)))


def _check_unique(label: str, names: Tuple[str, ...], diagnostics: Diagnostics) -> None:
    if len(set(names)) != len(names):
        diagnostics.append((label, "names must be unique"))


def validate_scenario(config: ScenarioConfig) -> None:
    """cross field checks, ConfigError with one diagnostic per problem"""
    diagnostics: Diagnostics = []
    if not config.sensors:
        diagnostics.append(("sensors", "at least one sensor is required"))
    if not config.users:
        diagnostics.append(("users", "at least one user is required"))
    if not config.receivers:
        diagnostics.append(("receivers", "the receiver set must not be empty"))
    if not config.universe:
        diagnostics.append(("universe", "the data attribute universe must not be empty"))
    for label, names in (("sensors", config.sensors), ("users", config.users), ("receivers", config.receivers)):
        _check_unique(label, names, diagnostics)

    everyone = list(config.sensors) + list(config.users) + [config.wnc, config.csp]
    if len(set(everyone)) != len(everyone):
        diagnostics.append(("roster", "entity names must be unique across roles"))

    if config.chain_length < config.epochs:
        diagnostics.append(("chain_length", f"chain length {config.chain_length} is below epochs {config.epochs}"))
    if config.ticks_per_epoch < MIN_TICKS_PER_EPOCH:
        diagnostics.append(("ticks_per_epoch", f"must be at least {MIN_TICKS_PER_EPOCH}"))
    if len(config.receivers) > config.max_receivers:
        diagnostics.append(("receivers", f"{len(config.receivers)} receivers exceed max_receivers"))
    for name in list(config.users) + list(config.receivers):
        if len(name.encode("utf-8")) > config.id_length:
            diagnostics.append(("id_length", f"identity {name!r} is longer than {config.id_length} bytes"))

    data: Set[str] = set(config.universe)
    overlap = data & set(config.identity_labels)
    if overlap:
        diagnostics.append(("identities", f"labels {sorted(overlap)} are also data attributes"))

    for label, attributes in [("attributes", config.attributes)] + [
        (f"attributes.{window}", items) for window, items in sorted(config.attributes_by_window.items())
    ]:
        if not attributes:
            diagnostics.append((label, "attribute set must not be empty"))
        for attribute in attributes:
            if attribute not in data:
                diagnostics.append((label, f"{attribute!r} is not in the universe"))

    for user in config.users:
        if user not in config.policies:
            diagnostics.append((f"policy.{user}", "every user needs a predefined policy"))
    for user, text in sorted(config.policies.items()):
        if user not in config.users:
            diagnostics.append((f"policy.{user}", "not a user"))
            continue
        try:
            for attribute in policy_attributes(parse_policy(text)):
                if attribute not in data:
                    diagnostics.append((f"policy.{user}", f"{attribute!r} is not in the universe"))
        except PairingSchemeException as exception:
            diagnostics.append((f"policy.{user}", str(exception)))

    for kind, entries, roster in (
        ("lambda", config.lambdas, config.users),
        ("silent", config.silent, config.sensors),
        ("forge", config.forge, config.sensors),
        ("report", config.reports, config.sensors),
        ("abuse", config.abuse, config.users),
        ("reinstate", config.reinstate, config.sensors),
    ):
        for entity in sorted(entries):
            if entity not in roster:
                diagnostics.append((f"{kind}.{entity}", "unknown entity"))

    if diagnostics:
        raise ConfigError(diagnostics)
