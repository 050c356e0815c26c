"""Simulated cloud-edge continuum: placement, deployment, health and scaling.

Placement is a deterministic greedy pass over descriptors in descending cpu
demand; each replica takes the first candidate node ordered by preference-tier
match, latency to its data sources, free cpu and node id.  The registry is a
logical simulation: instances are bookkeeping entries, not containers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from threading import RLock
from typing import Iterable, Mapping, Sequence


class Tier(str, Enum):
    EDGE = "edge"
    CLOUD = "cloud"


class PlacementPreference(str, Enum):
    EDGE_PREFERRED = "edge_preferred"
    CLOUD_PREFERRED = "cloud_preferred"
    ANY = "any"


class InstanceState(str, Enum):
    RUNNING = "RUNNING"
    FAILED = "FAILED"
    PENDING = "PENDING"


@dataclass(frozen=True, slots=True)
class NodeSpec:
    node_id: str
    tier: Tier
    cpu_capacity: float
    memory_capacity: float
    latency_ms: float
    latency_to_source: Mapping[str, float] = field(default_factory=dict)
    healthy: bool = True

    def __post_init__(self) -> None:
        if self.cpu_capacity <= 0 or self.memory_capacity <= 0:
            raise ValueError("node capacities must be positive")
        object.__setattr__(self, "latency_to_source", dict(self.latency_to_source))

    def latency_for(self, asset_ids: Sequence[str]) -> float:
        """Worst-case latency to the given data sources (default when unmapped)."""
        if not asset_ids:
            return self.latency_ms
        return max(self.latency_to_source.get(a, self.latency_ms) for a in asset_ids)


@dataclass(frozen=True, slots=True)
class DeploymentDescriptor:
    service_id: str
    cpu_request: float
    memory_request: float
    placement_preference: PlacementPreference = PlacementPreference.ANY
    latency_bound_ms: float | None = None
    data_dependencies: tuple[str, ...] = ()
    replicas: int = 1

    def __post_init__(self) -> None:
        if self.cpu_request <= 0 or self.memory_request <= 0:
            raise ValueError("resource requests must be positive")
        if self.latency_bound_ms is not None and self.latency_bound_ms <= 0:
            raise ValueError("latency bound must be positive")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        object.__setattr__(self, "data_dependencies", tuple(self.data_dependencies))


ReplicaRef = tuple[str, int]  # (service_id, replica index)


@dataclass(slots=True)
class PlacementPlan:
    assignments: dict[ReplicaRef, str] = field(default_factory=dict)
    unplaced: list[tuple[ReplicaRef, str]] = field(default_factory=list)


def _preference_mismatch(descriptor: DeploymentDescriptor, node: NodeSpec) -> int:
    if descriptor.placement_preference is PlacementPreference.EDGE_PREFERRED:
        return 0 if node.tier is Tier.EDGE else 1
    if descriptor.placement_preference is PlacementPreference.CLOUD_PREFERRED:
        return 0 if node.tier is Tier.CLOUD else 1
    return 0


def place(
    descriptors: Sequence[DeploymentDescriptor],
    nodes: Sequence[NodeSpec],
    free: Mapping[str, tuple[float, float]] | None = None,
) -> PlacementPlan:
    """Assign every replica to a node, or explain why it cannot be placed.

    ``free`` overrides per-node remaining capacity (defaults to full capacity).
    """
    if not nodes:
        plan = PlacementPlan()
        for d in sorted(descriptors, key=lambda d: (-d.cpu_request, d.service_id)):
            for i in range(d.replicas):
                plan.unplaced.append(((d.service_id, i), "no-nodes"))
        return plan
    remaining: dict[str, list[float]] = {}
    for node in nodes:
        cpu, mem = (free or {}).get(node.node_id, (node.cpu_capacity, node.memory_capacity))
        remaining[node.node_id] = [cpu, mem]
    plan = PlacementPlan()
    for descriptor in sorted(descriptors, key=lambda d: (-d.cpu_request, d.service_id)):
        used_nodes: set[str] = set()
        for i in range(descriptor.replicas):
            healthy = [n for n in nodes if n.healthy]
            if not healthy:
                plan.unplaced.append(((descriptor.service_id, i), "no-nodes"))
                continue
            fits = [
                n
                for n in healthy
                if remaining[n.node_id][0] >= descriptor.cpu_request
                and remaining[n.node_id][1] >= descriptor.memory_request
            ]
            if not fits:
                plan.unplaced.append(((descriptor.service_id, i), "capacity"))
                continue
            candidates = [
                n
                for n in fits
                if descriptor.latency_bound_ms is None
                or n.latency_for(descriptor.data_dependencies) <= descriptor.latency_bound_ms
            ]
            if not candidates:
                plan.unplaced.append(((descriptor.service_id, i), "latency"))
                continue
            candidates.sort(
                key=lambda n: (
                    _preference_mismatch(descriptor, n),
                    n.latency_for(descriptor.data_dependencies),
                    -remaining[n.node_id][0],
                    n.node_id,
                )
            )
            fresh = [n for n in candidates if n.node_id not in used_nodes]
            chosen = (fresh or candidates)[0]
            plan.assignments[(descriptor.service_id, i)] = chosen.node_id
            used_nodes.add(chosen.node_id)
            remaining[chosen.node_id][0] -= descriptor.cpu_request
            remaining[chosen.node_id][1] -= descriptor.memory_request
    return plan


@dataclass(slots=True)
class Instance:
    instance_id: str
    service_id: str
    replica_index: int
    node_id: str | None
    state: InstanceState
    cpu_request: float
    memory_request: float
    last_heartbeat: float = 0.0


@dataclass(slots=True)
class SweepReport:
    failed: list[str] = field(default_factory=list)
    recovered: dict[str, str] = field(default_factory=dict)  # instance -> new node
    pending: list[str] = field(default_factory=list)

    @property
    def actions(self) -> list[str]:
        out = [f"FAILED {i}" for i in self.failed]
        out += [f"RECOVERED {i} -> {n}" for i, n in self.recovered.items()]
        out += [f"PENDING {i}" for i in self.pending]
        return out


class Orchestrator:
    """Single-writer registry of nodes and logical service instances."""

    def __init__(self, nodes: Iterable[NodeSpec], event_log_path: str | Path | None = None):
        self.nodes: dict[str, NodeSpec] = {n.node_id: n for n in nodes}
        self.free: dict[str, list[float]] = {
            n.node_id: [n.cpu_capacity, n.memory_capacity] for n in self.nodes.values()
        }
        self.instances: dict[str, Instance] = {}
        self.descriptors: dict[str, DeploymentDescriptor] = {}
        self.logical_time = 0
        self.events: list[dict] = []
        self._event_path = Path(event_log_path) if event_log_path else None
        self._lock = RLock()

    # -- events ----------------------------------------------------------

    def _emit(self, event: str, subject: str, detail: str = "") -> None:
        self.logical_time += 1
        entry = {
            "logical_time": self.logical_time,
            "event": event,
            "subject": subject,
            "detail": detail,
        }
        self.events.append(entry)
        if self._event_path is not None:
            with self._event_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry) + "\n")

    # -- deployment --------------------------------------------------------

    def plan(self, descriptors: Sequence[DeploymentDescriptor]) -> PlacementPlan:
        with self._lock:
            for d in descriptors:
                self.descriptors[d.service_id] = d
            return place(descriptors, list(self.nodes.values()), free={
                k: (v[0], v[1]) for k, v in self.free.items()
            })

    def deploy(self, plan: PlacementPlan, now: float = 0.0) -> list[Instance]:
        """Materialize a plan; redeploying an identical plan is a no-op."""
        deployed: list[Instance] = []
        with self._lock:
            for (service_id, idx), node_id in sorted(plan.assignments.items()):
                instance_id = f"{service_id}:{idx}"
                existing = self.instances.get(instance_id)
                if (
                    existing is not None
                    and existing.state is InstanceState.RUNNING
                    and existing.node_id == node_id
                ):
                    deployed.append(existing)
                    continue
                descriptor = self.descriptors.get(service_id)
                cpu = descriptor.cpu_request if descriptor else 1.0
                mem = descriptor.memory_request if descriptor else 1.0
                node = self.nodes.get(node_id)
                if node is None or not node.healthy:
                    self._emit("unplaced", instance_id, "no-nodes")
                    self.instances[instance_id] = Instance(
                        instance_id, service_id, idx, None, InstanceState.PENDING, cpu, mem
                    )
                    continue
                if self.free[node_id][0] < cpu or self.free[node_id][1] < mem:
                    self._emit("unplaced", instance_id, "capacity")
                    self.instances[instance_id] = Instance(
                        instance_id, service_id, idx, None, InstanceState.PENDING, cpu, mem
                    )
                    continue
                self.free[node_id][0] -= cpu
                self.free[node_id][1] -= mem
                instance = Instance(
                    instance_id, service_id, idx, node_id, InstanceState.RUNNING, cpu, mem,
                    last_heartbeat=now,
                )
                self.instances[instance_id] = instance
                deployed.append(instance)
                self._emit("deployed", instance_id, node_id)
        return deployed

    def heartbeat(self, instance_id: str, now: float) -> None:
        with self._lock:
            instance = self.instances[instance_id]
            instance.last_heartbeat = now

    def kill_node(self, node_id: str) -> None:
        with self._lock:
            node = self.nodes[node_id]
            self.nodes[node_id] = replace(node, healthy=False)
            self._emit("node_down", node_id)

    def _release(self, instance: Instance) -> None:
        if instance.node_id is not None and instance.node_id in self.free:
            self.free[instance.node_id][0] += instance.cpu_request
            self.free[instance.node_id][1] += instance.memory_request
        instance.node_id = None

    def heartbeat_sweep(self, now: float, timeout_s: float) -> SweepReport:
        """Fail silent instances and try to re-place them on healthy nodes."""
        if timeout_s <= 0:
            raise ValueError("timeout must be > 0")
        report = SweepReport()
        with self._lock:
            for instance in self.instances.values():
                node = self.nodes.get(instance.node_id) if instance.node_id else None
                node_dead = node is not None and not node.healthy
                if instance.state is InstanceState.RUNNING and (
                    node_dead or now - instance.last_heartbeat > timeout_s
                ):
                    instance.state = InstanceState.FAILED
                    self._release(instance)
                    report.failed.append(instance.instance_id)
                    self._emit("failed", instance.instance_id, "heartbeat timeout")
            # failed and parked replicas are retried every sweep
            to_recover = [
                i
                for i in self.instances.values()
                if i.state in (InstanceState.FAILED, InstanceState.PENDING)
            ]
            for instance in sorted(to_recover, key=lambda i: i.instance_id):
                descriptor = self.descriptors.get(instance.service_id)
                if descriptor is None:
                    continue
                single = replace(descriptor, replicas=1)
                plan = place(
                    [single],
                    [n for n in self.nodes.values() if n.healthy],
                    free={k: (v[0], v[1]) for k, v in self.free.items()},
                )
                if plan.assignments:
                    node_id = plan.assignments[(instance.service_id, 0)]
                    self.free[node_id][0] -= instance.cpu_request
                    self.free[node_id][1] -= instance.memory_request
                    instance.node_id = node_id
                    instance.state = InstanceState.RUNNING
                    instance.last_heartbeat = now
                    report.recovered[instance.instance_id] = node_id
                    self._emit("recovered", instance.instance_id, node_id)
                else:
                    instance.state = InstanceState.PENDING
                    report.pending.append(instance.instance_id)
                    self._emit("pending", instance.instance_id, plan.unplaced[0][1])
        return report

    def used_capacity(self) -> dict[str, tuple[float, float]]:
        with self._lock:
            out: dict[str, tuple[float, float]] = {}
            for node_id, node in self.nodes.items():
                free_cpu, free_mem = self.free[node_id]
                out[node_id] = (node.cpu_capacity - free_cpu, node.memory_capacity - free_mem)
            return out

    def scale(self, service_id: str, delta: int, now: float = 0.0) -> list[Instance]:
        """Add or remove one replica of a service."""
        with self._lock:
            descriptor = self.descriptors[service_id]
            current = [
                i
                for i in self.instances.values()
                if i.service_id == service_id and i.state is not InstanceState.FAILED
            ]
            if delta > 0:
                idx = max((i.replica_index for i in current), default=-1) + 1
                single = replace(descriptor, replicas=1)
                plan = place(
                    [single],
                    [n for n in self.nodes.values() if n.healthy],
                    free={k: (v[0], v[1]) for k, v in self.free.items()},
                )
                if not plan.assignments:
                    self._emit("scale_blocked", service_id, plan.unplaced[0][1])
                    return []
                node_id = plan.assignments[(service_id, 0)]
                instance = Instance(
                    f"{service_id}:{idx}", service_id, idx, node_id,
                    InstanceState.RUNNING, descriptor.cpu_request, descriptor.memory_request,
                    last_heartbeat=now,
                )
                self.free[node_id][0] -= descriptor.cpu_request
                self.free[node_id][1] -= descriptor.memory_request
                self.instances[instance.instance_id] = instance
                self._emit("scaled_up", service_id, node_id)
                return [instance]
            if delta < 0 and current:
                victim = max(current, key=lambda i: i.replica_index)
                self._release(victim)
                del self.instances[victim.instance_id]
                self._emit("scaled_down", service_id, victim.instance_id)
                return [victim]
            return []


@dataclass(slots=True)
class ScalePolicy:
    """Threshold scaler with hysteresis: one non-zero decision per cooldown."""

    low: float
    high: float
    min_replicas: int = 1
    max_replicas: int = 3
    cooldown_s: float = 60.0
    last_change_at: float | None = None

    def __post_init__(self) -> None:
        if not self.low < self.high:
            raise ValueError("low threshold must be below high")
        if self.min_replicas < 1 or self.max_replicas < self.min_replicas:
            raise ValueError("need 1 <= min_replicas <= max_replicas")

    def decide(self, load: float, replicas: int, now: float) -> int:
        if self.last_change_at is not None and now - self.last_change_at < self.cooldown_s:
            return 0
        delta = 0
        if load > self.high and replicas < self.max_replicas:
            delta = 1
        elif load < self.low and replicas > self.min_replicas:
            delta = -1
        if delta != 0:
            self.last_change_at = now
        return delta
