import random

import pytest

from smartbuilding.orchestrator import (
    DeploymentDescriptor,
    InstanceState,
    NodeSpec,
    Orchestrator,
    PlacementPreference,
    ScalePolicy,
    Tier,
    place,
)


def edge(node_id="edge-0", cpu=2.0, mem=2048.0, latency=5.0):
    return NodeSpec(node_id, Tier.EDGE, cpu, mem, latency)


def cloud(node_id="cloud-0", cpu=16.0, mem=65536.0, latency=50.0):
    return NodeSpec(node_id, Tier.CLOUD, cpu, mem, latency)


def descriptor(service="svc", cpu=1.0, mem=512.0, pref=PlacementPreference.ANY, **kw):
    return DeploymentDescriptor(service, cpu, mem, pref, **kw)


class TestPlace:
    def test_latency_bound_prefers_edge(self):
        # candidate ordering: only the 5 ms edge node satisfies the 10 ms bound
        d = descriptor(pref=PlacementPreference.ANY, latency_bound_ms=10.0,
                       data_dependencies=("a1",))
        plan = place([d], [edge(), cloud()])
        assert plan.assignments[("svc", 0)] == "edge-0"
        assert plan.unplaced == []

    def test_oversized_request_unplaced_capacity(self):
        d = descriptor(cpu=64.0)
        plan = place([d], [edge(), cloud()])
        assert plan.assignments == {}
        assert plan.unplaced == [(("svc", 0), "capacity")]

    def test_impossible_latency_unplaced_latency(self):
        d = descriptor(latency_bound_ms=1.0, data_dependencies=("a1",))
        plan = place([d], [edge(latency=5.0), cloud()])
        assert plan.unplaced == [(("svc", 0), "latency")]

    def test_no_nodes(self):
        plan = place([descriptor()], [])
        assert plan.unplaced == [(("svc", 0), "no-nodes")]

    def test_identical_nodes_tie_break_by_node_id(self):
        nodes = [edge("node-b"), edge("node-a")]
        plan = place([descriptor()], nodes)
        assert plan.assignments[("svc", 0)] == "node-a"

    def test_edge_preferred_goes_to_edge_even_when_cloud_is_better(self):
        d = descriptor(pref=PlacementPreference.EDGE_PREFERRED)
        plan = place([d], [edge(cpu=1.0), cloud(cpu=64.0)])
        assert plan.assignments[("svc", 0)] == "edge-0"

    def test_cloud_preferred_goes_to_cloud(self):
        d = descriptor(pref=PlacementPreference.CLOUD_PREFERRED)
        plan = place([d], [edge(), cloud()])
        assert plan.assignments[("svc", 0)] == "cloud-0"

    def test_replicas_spread_across_nodes(self):
        d = descriptor(replicas=2)
        plan = place([d], [edge("edge-0"), edge("edge-1")])
        used = {plan.assignments[("svc", 0)], plan.assignments[("svc", 1)]}
        assert used == {"edge-0", "edge-1"}

    def test_replicas_share_node_when_unavoidable(self):
        d = descriptor(replicas=2, cpu=0.5)
        plan = place([d], [edge("solo", cpu=2.0)])
        assert plan.assignments[("svc", 0)] == plan.assignments[("svc", 1)] == "solo"

    def test_descending_cpu_demand_order(self):
        # the big service grabs the only edge slot first even if listed second
        small = descriptor(service="small", cpu=1.0, pref=PlacementPreference.EDGE_PREFERRED)
        big = descriptor(service="big", cpu=2.0, pref=PlacementPreference.EDGE_PREFERRED)
        plan = place([small, big], [edge(cpu=2.0), cloud()])
        assert plan.assignments[("big", 0)] == "edge-0"
        assert plan.assignments[("small", 0)] == "cloud-0"

    def test_determinism(self):
        nodes = [edge("e0"), edge("e1", cpu=3.0), cloud()]
        descriptors = [
            descriptor("a", cpu=1.0),
            descriptor("b", cpu=2.0, pref=PlacementPreference.EDGE_PREFERRED),
            descriptor("c", cpu=0.5, replicas=3),
        ]
        p1 = place(descriptors, nodes)
        p2 = place(descriptors, nodes)
        assert p1.assignments == p2.assignments and p1.unplaced == p2.unplaced

    def test_latency_bound_respected_in_plan(self):
        rng = random.Random(7)
        for _ in range(100):
            nodes = [
                NodeSpec(
                    f"n{i}",
                    rng.choice([Tier.EDGE, Tier.CLOUD]),
                    rng.uniform(1, 8),
                    4096.0,
                    rng.uniform(1, 80),
                )
                for i in range(rng.randint(1, 4))
            ]
            d = descriptor(
                cpu=rng.uniform(0.5, 4), latency_bound_ms=rng.uniform(5, 60),
                data_dependencies=("a1",),
            )
            plan = place([d], nodes)
            for (_, _), node_id in plan.assignments.items():
                node = next(n for n in nodes if n.node_id == node_id)
                assert node.latency_for(("a1",)) <= d.latency_bound_ms


class TestOrchestrator:
    def test_empty_plan_deploys_nothing(self):
        orch = Orchestrator([edge()])
        assert orch.deploy(orch.plan([])) == []

    def test_two_replicas_on_distinct_nodes(self):
        orch = Orchestrator([edge("e0"), edge("e1")])
        plan = orch.plan([descriptor(replicas=2)])
        instances = orch.deploy(plan)
        assert len(instances) == 2
        assert {i.node_id for i in instances} == {"e0", "e1"}
        assert all(i.state is InstanceState.RUNNING for i in instances)

    def test_redeploy_is_idempotent(self):
        orch = Orchestrator([edge(), cloud()])
        plan = orch.plan([descriptor()])
        first = orch.deploy(plan)
        second = orch.deploy(plan)
        assert [i.instance_id for i in first] == [i.instance_id for i in second]
        used = orch.used_capacity()
        assert used["edge-0"][0] <= 1.0  # not double-counted

    def test_kill_edge_node_recovers_to_cloud(self):
        orch = Orchestrator([edge(), cloud()])
        plan = orch.plan([descriptor("forecast", pref=PlacementPreference.EDGE_PREFERRED)])
        orch.deploy(plan, now=0.0)
        assert orch.instances["forecast:0"].node_id == "edge-0"
        orch.kill_node("edge-0")
        report = orch.heartbeat_sweep(now=1.0, timeout_s=30.0)
        assert report.failed == ["forecast:0"]
        assert report.recovered == {"forecast:0": "cloud-0"}
        assert orch.instances["forecast:0"].node_id == "cloud-0"

    def test_fresh_heartbeats_mean_no_actions(self):
        orch = Orchestrator([edge()])
        orch.deploy(orch.plan([descriptor()]), now=0.0)
        orch.heartbeat("svc:0", now=10.0)
        report = orch.heartbeat_sweep(now=12.0, timeout_s=30.0)
        assert report.actions == []

    def test_silent_instance_fails_after_timeout(self):
        orch = Orchestrator([edge()])
        orch.deploy(orch.plan([descriptor()]), now=0.0)
        report = orch.heartbeat_sweep(now=100.0, timeout_s=30.0)
        assert "svc:0" in report.failed

    def test_no_capacity_parks_pending_then_retries(self):
        orch = Orchestrator([edge(cpu=1.0)])
        orch.deploy(orch.plan([descriptor("a", cpu=1.0)]), now=0.0)
        orch.descriptors["b"] = descriptor("b", cpu=1.0)
        orch.instances["b:0"] = type(orch.instances["a:0"])(
            "b:0", "b", 0, None, InstanceState.PENDING, 1.0, 512.0
        )
        report = orch.heartbeat_sweep(now=1.0, timeout_s=300.0)
        assert "b:0" in report.pending
        # capacity frees up: the parked replica lands on the node
        orch.heartbeat("a:0", now=2.0)
        orch.scale("a", -1)
        report = orch.heartbeat_sweep(now=3.0, timeout_s=300.0)
        assert report.recovered.get("b:0") == "edge-0"

    def test_event_log_written(self, tmp_path):
        log = tmp_path / "events.jsonl"
        orch = Orchestrator([edge()], event_log_path=log)
        orch.deploy(orch.plan([descriptor()]), now=0.0)
        lines = log.read_text().strip().splitlines()
        assert lines
        import json

        entry = json.loads(lines[-1])
        assert set(entry) == {"logical_time", "event", "subject", "detail"}


class TestScalePolicy:
    def test_between_thresholds_is_zero(self):
        policy = ScalePolicy(low=10, high=100)
        assert policy.decide(50.0, 1, now=0.0) == 0

    def test_high_load_at_max_replicas_is_zero(self):
        policy = ScalePolicy(low=10, high=100, max_replicas=2)
        assert policy.decide(500.0, 2, now=0.0) == 0

    def test_scale_up_then_cooldown(self):
        policy = ScalePolicy(low=10, high=100, cooldown_s=60.0)
        assert policy.decide(150.0, 1, now=0.0) == 1
        assert policy.decide(150.0, 2, now=10.0) == 0  # hysteresis window
        assert policy.decide(150.0, 2, now=61.0) == 1

    def test_scale_down_at_low_load(self):
        policy = ScalePolicy(low=10, high=100, min_replicas=1)
        assert policy.decide(5.0, 2, now=0.0) == -1
        assert policy.decide(5.0, 1, now=100.0) == 0  # at the floor

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            ScalePolicy(low=10, high=10)


class TestCapacitySafetyFuzz:
    def test_random_event_sequences_never_overcommit(self):
        rng = random.Random(99)
        for _ in range(150):
            nodes = [
                NodeSpec(
                    f"n{i}",
                    rng.choice([Tier.EDGE, Tier.CLOUD]),
                    rng.choice([1.0, 2.0, 4.0]),
                    rng.choice([1024.0, 4096.0]),
                    rng.uniform(1, 60),
                )
                for i in range(rng.randint(1, 4))
            ]
            orch = Orchestrator(nodes)
            services = [
                descriptor(
                    f"s{j}",
                    cpu=rng.choice([0.5, 1.0, 2.0]),
                    mem=rng.choice([256.0, 512.0]),
                    pref=rng.choice(list(PlacementPreference)),
                    replicas=rng.randint(1, 2),
                )
                for j in range(rng.randint(1, 3))
            ]
            orch.deploy(orch.plan(services), now=0.0)
            clock = 0.0
            for _ in range(rng.randint(2, 10)):
                clock += 10.0
                roll = rng.random()
                if roll < 0.25 and orch.nodes:
                    alive = [n for n in orch.nodes.values() if n.healthy]
                    if alive:
                        orch.kill_node(rng.choice(alive).node_id)
                elif roll < 0.5:
                    for iid in list(orch.instances):
                        if rng.random() < 0.7:
                            try:
                                orch.heartbeat(iid, clock)
                            except KeyError:
                                pass
                    orch.heartbeat_sweep(clock, timeout_s=25.0)
                elif roll < 0.75 and services:
                    orch.scale(rng.choice(services).service_id, rng.choice([-1, 1]), now=clock)
                else:
                    orch.heartbeat_sweep(clock, timeout_s=25.0)
                for node_id, (used_cpu, used_mem) in orch.used_capacity().items():
                    node = orch.nodes[node_id]
                    assert used_cpu <= node.cpu_capacity + 1e-9
                    assert used_mem <= node.memory_capacity + 1e-9
