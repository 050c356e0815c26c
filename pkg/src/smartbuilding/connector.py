"""Miniature sovereign dataspace.

A provider publishes assets into a catalog guarded by usage policies; a
consumer obtains data only by driving the contract-negotiation state machine
to FINALIZED and then running a transfer process under the agreement's policy
snapshot.  Both connectors live in one process and exchange JSON-shaped
messages, so the boundary stays wire-ready.
"""

from __future__ import annotations

import copy
import itertools
import json
import time as _time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from threading import RLock
from typing import Callable, Iterable, Sequence
from urllib.parse import urlparse

from .core import SensorReading, TimeWindow


class ProtocolViolation(Exception):
    """An out-of-order or mis-addressed protocol message; state is unchanged."""


class TransferDenied(Exception):
    """A transfer was requested without a valid finalized agreement."""


class DuplicateAssetError(ValueError):
    pass


class DenyReason(str, Enum):
    NOT_ALLOWED = "not-allowed"
    EXPIRED = "expired"
    RATE = "rate"


@dataclass(frozen=True, slots=True)
class PolicyDecision:
    allowed: bool
    reason: DenyReason | None = None


@dataclass(frozen=True, slots=True)
class UsagePolicy:
    """Access terms attached to an asset; empty participant set denies all."""

    allowed_participants: frozenset[str] = frozenset()
    purpose: str = ""
    expiry: int | None = None
    max_request_rate: int | None = None  # readings per minute
    created_at: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "allowed_participants", frozenset(self.allowed_participants))
        if self.expiry is not None and self.created_at is not None:
            if self.expiry <= self.created_at:
                raise ValueError("policy expiry must lie in the future at creation time")

    def to_doc(self) -> dict:
        return {
            "allowed_participants": sorted(self.allowed_participants),
            "purpose": self.purpose,
            "expiry": self.expiry,
            "max_request_rate": self.max_request_rate,
            "created_at": self.created_at,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "UsagePolicy":
        return cls(
            allowed_participants=frozenset(doc.get("allowed_participants", ())),
            purpose=doc.get("purpose", ""),
            expiry=doc.get("expiry"),
            max_request_rate=doc.get("max_request_rate"),
            created_at=doc.get("created_at"),
        )


def enforce_policy(
    policy: UsagePolicy,
    participant: str,
    now: float,
    request_rate_observed: float = 0.0,
) -> PolicyDecision:
    """Total access decision: allow, or deny with a machine-readable reason."""
    if participant not in policy.allowed_participants:
        return PolicyDecision(False, DenyReason.NOT_ALLOWED)
    if policy.expiry is not None and now > policy.expiry:
        return PolicyDecision(False, DenyReason.EXPIRED)
    if policy.max_request_rate is not None and request_rate_observed > policy.max_request_rate:
        return PolicyDecision(False, DenyReason.RATE)
    return PolicyDecision(True, None)


@dataclass(frozen=True, slots=True)
class AssetDescriptor:
    """Catalog entry for one published data source."""

    asset_id: str
    endpoint: str
    device_type: str
    location: str
    data_modality: str
    protocol: str
    temporal_resolution: int
    update_frequency: int
    license: str
    access_policy: UsagePolicy

    def __post_init__(self) -> None:
        if self.temporal_resolution <= 0:
            raise ValueError("temporal_resolution must be > 0")
        parsed = urlparse(self.endpoint)
        if not parsed.scheme or not (parsed.netloc or parsed.path):
            raise ValueError(f"endpoint {self.endpoint!r} is not a valid URL")

    def to_doc(self) -> dict:
        return {
            "asset_id": self.asset_id,
            "endpoint": self.endpoint,
            "device_type": self.device_type,
            "location": self.location,
            "data_modality": self.data_modality,
            "protocol": self.protocol,
            "temporal_resolution": self.temporal_resolution,
            "update_frequency": self.update_frequency,
            "license": self.license,
            "access_policy": self.access_policy.to_doc(),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "AssetDescriptor":
        doc = dict(doc)
        doc["access_policy"] = UsagePolicy.from_doc(doc["access_policy"])
        return cls(**doc)


class NegotiationState(str, Enum):
    REQUESTED = "REQUESTED"
    OFFERED = "OFFERED"
    ACCEPTED = "ACCEPTED"
    AGREED = "AGREED"
    FINALIZED = "FINALIZED"
    TERMINATED = "TERMINATED"


class TransferState(str, Enum):
    REQUESTED = "REQUESTED"
    STARTED = "STARTED"
    COMPLETED = "COMPLETED"
    SUSPENDED = "SUSPENDED"
    TERMINATED = "TERMINATED"


NEGOTIATION_ABSORBING = {NegotiationState.TERMINATED}
TRANSFER_ABSORBING = {TransferState.COMPLETED, TransferState.TERMINATED}

# message_type -> (required sender role, from state, to state)
_NEGOTIATION_EDGES = {
    "offer": ("provider", NegotiationState.REQUESTED, NegotiationState.OFFERED),
    "accept": ("consumer", NegotiationState.OFFERED, NegotiationState.ACCEPTED),
    "agree": ("provider", NegotiationState.ACCEPTED, NegotiationState.AGREED),
    "finalize": ("provider", NegotiationState.AGREED, NegotiationState.FINALIZED),
}


@dataclass(frozen=True, slots=True)
class Message:
    message_type: str
    sender: str
    negotiation_id: str | None = None
    transfer_id: str | None = None
    payload: dict = field(default_factory=dict)

    def to_doc(self) -> dict:
        return {
            "message_type": self.message_type,
            "sender": self.sender,
            "negotiation_id": self.negotiation_id,
            "transfer_id": self.transfer_id,
            "payload": self.payload,
        }


@dataclass(frozen=True, slots=True)
class Agreement:
    agreement_id: str
    asset_id: str
    provider_id: str
    consumer_id: str
    policy_snapshot: UsagePolicy
    agreed_at: int


@dataclass(slots=True)
class ContractNegotiation:
    negotiation_id: str
    asset_id: str
    provider_id: str
    consumer_id: str
    state: NegotiationState = NegotiationState.REQUESTED
    agreement: Agreement | None = None
    termination_reason: str | None = None
    transitions: list[tuple[str, str, str]] = field(default_factory=list)

    def record(self, message_type: str, old: str, new: NegotiationState) -> None:
        self.state = new
        self.transitions.append((message_type, old, new.value))


@dataclass(slots=True)
class TransferProcess:
    transfer_id: str
    negotiation_id: str
    agreement: Agreement
    state: TransferState = TransferState.REQUESTED
    delivered: int = 0
    termination_reason: str | None = None
    transitions: list[tuple[str, str]] = field(default_factory=list)

    def _move(self, new: TransferState) -> None:
        if self.state in TRANSFER_ABSORBING:
            raise ProtocolViolation(f"transfer {self.transfer_id} is {self.state.value}; absorbed")
        self.transitions.append((self.state.value, new.value))
        self.state = new


class Dataspace:
    """Catalog, negotiation and transfer engine shared by both connectors.

    Messages for one negotiation are processed strictly in arrival order;
    the catalog journal makes registrations durable across restarts.
    """

    def __init__(
        self,
        journal_path: str | Path | None = None,
        clock: Callable[[], float] = _time.time,
        sleep: Callable[[float], None] = _time.sleep,
        provider_id: str = "provider",
    ):
        self.provider_id = provider_id
        self.catalog: dict[str, AssetDescriptor] = {}
        self.sources: dict[str, list[SensorReading]] = {}
        self.negotiations: dict[str, ContractNegotiation] = {}
        self.transfers: dict[str, TransferProcess] = {}
        self.clock = clock
        self.sleep = sleep
        self._ids = itertools.count(1)
        # messages are applied one at a time, in arrival order
        self._lock = RLock()
        self._journal_path = Path(journal_path) if journal_path else None
        if self._journal_path and self._journal_path.exists():
            self._replay_journal()

    # -- catalog ---------------------------------------------------------

    def _replay_journal(self) -> None:
        with self._journal_path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                if entry.get("op") == "register_asset":
                    descriptor = AssetDescriptor.from_doc(entry["asset"])
                    self.catalog[descriptor.asset_id] = descriptor
                elif entry.get("op") == "update_policy":
                    asset_id = entry["asset_id"]
                    if asset_id in self.catalog:
                        doc = self.catalog[asset_id].to_doc()
                        doc["access_policy"] = entry["policy"]
                        self.catalog[asset_id] = AssetDescriptor.from_doc(doc)

    def _journal(self, entry: dict) -> None:
        if self._journal_path is None:
            return
        self._journal_path.parent.mkdir(parents=True, exist_ok=True)
        with self._journal_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry) + "\n")
            fh.flush()

    def register_asset(
        self, descriptor: AssetDescriptor, readings: Sequence[SensorReading] | None = None
    ) -> str:
        with self._lock:
            if descriptor.asset_id in self.catalog:
                raise DuplicateAssetError(f"asset_id {descriptor.asset_id!r} already registered")
            self.catalog[descriptor.asset_id] = descriptor
            self._journal({"op": "register_asset", "asset": descriptor.to_doc()})
            if readings is not None:
                self.sources[descriptor.asset_id] = list(readings)
            return descriptor.asset_id

    def attach_source(self, asset_id: str, readings: Iterable[SensorReading]) -> None:
        if asset_id not in self.catalog:
            raise KeyError(f"unknown asset {asset_id}")
        self.sources.setdefault(asset_id, []).extend(readings)

    def update_policy(self, asset_id: str, policy: UsagePolicy) -> None:
        """Replace an asset's live policy; existing agreement snapshots keep theirs."""
        with self._lock:
            descriptor = self.catalog[asset_id]
            doc = descriptor.to_doc()
            doc["access_policy"] = policy.to_doc()
            self.catalog[asset_id] = AssetDescriptor.from_doc(doc)
            self._journal({"op": "update_policy", "asset_id": asset_id, "policy": policy.to_doc()})

    def query_catalog(
        self,
        participant: str,
        modality: str | None = None,
        location: str | None = None,
    ) -> list[AssetDescriptor]:
        """Assets visible to the participant, filtered conjunctively."""
        out = []
        for descriptor in sorted(self.catalog.values(), key=lambda d: d.asset_id):
            if participant not in descriptor.access_policy.allowed_participants:
                continue
            if modality is not None and descriptor.data_modality != modality:
                continue
            if location is not None and descriptor.location != location:
                continue
            out.append(descriptor)
        return out

    # -- contract negotiation --------------------------------------------

    def _provider_of(self, asset_id: str) -> str:
        # single-provider deployment: the catalog owner is the provider
        return self.provider_id

    def handle_message(self, message: Message) -> ContractNegotiation:
        """Apply one negotiation message; invalid messages leave state untouched."""
        with self._lock:
            return self._apply_message(message)

    def _apply_message(self, message: Message) -> ContractNegotiation:
        if message.message_type == "request":
            asset_id = message.payload.get("asset_id")
            if asset_id not in self.catalog:
                raise ProtocolViolation(f"request for unknown asset {asset_id!r}")
            negotiation_id = message.negotiation_id or f"cn-{next(self._ids)}"
            if negotiation_id in self.negotiations:
                raise ProtocolViolation(f"negotiation {negotiation_id} already exists")
            negotiation = ContractNegotiation(
                negotiation_id=negotiation_id,
                asset_id=asset_id,
                provider_id=self._provider_of(asset_id),
                consumer_id=message.sender,
            )
            negotiation.transitions.append(("request", "", NegotiationState.REQUESTED.value))
            self.negotiations[negotiation_id] = negotiation
            # the provider connector screens requests against the live policy
            policy = self.catalog[asset_id].access_policy
            decision = enforce_policy(policy, message.sender, self.clock())
            if not decision.allowed:
                negotiation.termination_reason = f"policy-denied:{decision.reason.value}"
                negotiation.record("terminate", negotiation.state.value, NegotiationState.TERMINATED)
            return negotiation

        negotiation = self.negotiations.get(message.negotiation_id or "")
        if negotiation is None:
            raise ProtocolViolation(f"unknown negotiation {message.negotiation_id!r}")

        if message.message_type == "terminate":
            if negotiation.state in NEGOTIATION_ABSORBING:
                raise ProtocolViolation("negotiation already terminated")
            negotiation.termination_reason = message.payload.get("reason", "terminated")
            negotiation.agreement = None  # agreements exist only in AGREED/FINALIZED
            negotiation.record("terminate", negotiation.state.value, NegotiationState.TERMINATED)
            return negotiation

        edge = _NEGOTIATION_EDGES.get(message.message_type)
        if edge is None:
            raise ProtocolViolation(f"unknown message_type {message.message_type!r}")
        role, source, target = edge
        expected_sender = negotiation.provider_id if role == "provider" else negotiation.consumer_id
        if message.sender != expected_sender:
            raise ProtocolViolation(
                f"{message.message_type} must come from the {role}, not {message.sender!r}"
            )
        if negotiation.state is not source:
            # duplicate accept while already accepted is tolerated, all else rejected
            if message.message_type == "accept" and negotiation.state is NegotiationState.ACCEPTED:
                return negotiation
            raise ProtocolViolation(
                f"{message.message_type} not valid in state {negotiation.state.value}"
            )
        if message.message_type == "agree":
            policy = self.catalog[negotiation.asset_id].access_policy
            decision = enforce_policy(policy, negotiation.consumer_id, self.clock())
            if not decision.allowed:
                negotiation.termination_reason = f"policy-denied:{decision.reason.value}"
                negotiation.record("terminate", negotiation.state.value, NegotiationState.TERMINATED)
                return negotiation
            negotiation.agreement = Agreement(
                agreement_id=f"agr-{negotiation.negotiation_id}",
                asset_id=negotiation.asset_id,
                provider_id=negotiation.provider_id,
                consumer_id=negotiation.consumer_id,
                policy_snapshot=copy.deepcopy(policy),
                agreed_at=int(self.clock()),
            )
        negotiation.record(message.message_type, negotiation.state.value, target)
        return negotiation

    def negotiate(self, consumer_id: str, asset_id: str) -> ContractNegotiation:
        """Drive the happy path; returns FINALIZED, or TERMINATED on policy denial."""
        negotiation = self.handle_message(
            Message("request", sender=consumer_id, payload={"asset_id": asset_id})
        )
        if negotiation.state is NegotiationState.TERMINATED:
            return negotiation
        provider = negotiation.provider_id
        for message_type, sender in (
            ("offer", provider),
            ("accept", consumer_id),
            ("agree", provider),
            ("finalize", provider),
        ):
            negotiation = self.handle_message(
                Message(message_type, sender=sender, negotiation_id=negotiation.negotiation_id)
            )
            if negotiation.state is NegotiationState.TERMINATED:
                return negotiation
        return negotiation

    # -- transfer process --------------------------------------------------

    def start_transfer(self, negotiation_id: str, consumer_id: str) -> TransferProcess:
        """Admit a transfer only under a FINALIZED, unexpired, permitting agreement."""
        with self._lock:
            return self._admit_transfer(negotiation_id, consumer_id)

    def _admit_transfer(self, negotiation_id: str, consumer_id: str) -> TransferProcess:
        negotiation = self.negotiations.get(negotiation_id)
        if negotiation is None:
            raise TransferDenied(f"unknown negotiation {negotiation_id!r}")
        if negotiation.state is not NegotiationState.FINALIZED or negotiation.agreement is None:
            raise TransferDenied(
                f"negotiation {negotiation_id} is {negotiation.state.value}, not FINALIZED"
            )
        agreement = negotiation.agreement
        if consumer_id != agreement.consumer_id:
            raise TransferDenied(f"{consumer_id!r} is not party to agreement {agreement.agreement_id}")
        decision = enforce_policy(agreement.policy_snapshot, consumer_id, self.clock())
        if not decision.allowed:
            raise TransferDenied(f"policy denies transfer: {decision.reason.value}")
        transfer = TransferProcess(
            transfer_id=f"tp-{next(self._ids)}",
            negotiation_id=negotiation_id,
            agreement=agreement,
        )
        self.transfers[transfer.transfer_id] = transfer
        return transfer

    def run_transfer(
        self,
        transfer: TransferProcess,
        sink: Callable[[SensorReading], None],
        window: TimeWindow | None = None,
        pace_s: float = 0.0,
    ) -> TransferProcess:
        """Stream the asset's readings into the consumer sink under the agreement.

        The policy snapshot is re-checked before every delivery: reaching the
        expiry suspends and then terminates the transfer; exceeding the rate
        cap throttles it (the stream waits, it does not die).
        """
        if transfer.state is not TransferState.REQUESTED:
            raise ProtocolViolation(f"transfer {transfer.transfer_id} already {transfer.state.value}")
        policy = transfer.agreement.policy_snapshot
        readings = self.sources.get(transfer.agreement.asset_id, [])
        if window is not None:
            readings = [r for r in readings if window.contains(r.timestamp)]
        transfer._move(TransferState.STARTED)
        minute_start = self.clock()
        in_minute = 0
        for reading in sorted(readings, key=lambda r: r.timestamp):
            if pace_s > 0 and transfer.delivered > 0:
                self.sleep(pace_s)
            now = self.clock()
            if policy.expiry is not None and now > policy.expiry:
                transfer._move(TransferState.SUSPENDED)
                transfer.termination_reason = "expired"
                transfer._move(TransferState.TERMINATED)
                return transfer
            if policy.max_request_rate is not None:
                if now - minute_start >= 60.0:
                    minute_start = now
                    in_minute = 0
                if in_minute >= policy.max_request_rate:
                    self.sleep(max(0.0, 60.0 - (now - minute_start)))
                    minute_start = self.clock()
                    in_minute = 0
                    if policy.expiry is not None and self.clock() > policy.expiry:
                        transfer._move(TransferState.SUSPENDED)
                        transfer.termination_reason = "expired"
                        transfer._move(TransferState.TERMINATED)
                        return transfer
            try:
                sink(reading)
            except Exception as exc:  # noqa: BLE001 - consumer failure ends the transfer
                transfer.termination_reason = f"sink-error: {type(exc).__name__}: {exc}"
                transfer._move(TransferState.TERMINATED)
                return transfer
            transfer.delivered += 1
            in_minute += 1
        transfer._move(TransferState.COMPLETED)
        return transfer
