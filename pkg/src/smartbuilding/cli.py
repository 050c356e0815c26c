"""Command-line entry point: simulate, train, evaluate, serve, demo-dataspace.

Exit codes: 0 success, 2 configuration/usage error, 3 domain failure (for
example a policy-denied negotiation).
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, build_layout, build_profile, load_config
from .connector import AssetDescriptor, Dataspace, NegotiationState, TransferState, UsagePolicy
from .core import (
    ConfigurationError,
    ContractError,
    Modality,
    SensorReading,
    TimeWindow,
    is_plausible,
)
from .ingest import (
    AnomalyKey,
    FormatError,
    OccupancyRecord,
    generate_synthetic,
    load_normalized_csv,
    load_occupancy_csv,
    write_normalized_csv,
)
from .models.metrics import MetricsKind, format_regression_table
from .models.persist import load_model, save_model
from .orchestrator import (
    DeploymentDescriptor,
    NodeSpec,
    Orchestrator,
    PlacementPreference,
    Tier,
)
from .pipeline import (
    chrono_split,
    evaluate_on_stream,
    grid_search_anomaly,
    make_windows,
    preprocess,
    presence_table,
    train_forecaster,
    train_presence,
)
from .service import ServiceState, create_app, layout_to_doc, transfer_sink
from .store import SeriesStore

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3

ANOMALY_MODALITIES = (Modality.TEMPERATURE, Modality.HUMIDITY, Modality.CO2, Modality.LIGHT)


class DomainFailure(RuntimeError):
    pass


def _load_cfg(args) -> RunConfig:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["rng_seed"] = args.seed
    return load_config(getattr(args, "config", None), overrides)


def _window_for(cfg: RunConfig, anchor_now: bool) -> TimeWindow:
    syn = cfg.synthetic
    if anchor_now or syn.start_epoch_s is None:
        end = int(time.time())
        return TimeWindow(end - syn.duration_s, end)
    return TimeWindow(syn.start_epoch_s, syn.start_epoch_s + syn.duration_s)


def _write_anomaly_index(index, path: Path) -> None:
    doc = {
        "anomalies": [
            {"device_id": k.device_id, "modality": k.modality.value, "timestamp": k.timestamp}
            for k in sorted(index, key=lambda k: (k.timestamp, k.device_id, k.modality.value))
        ]
    }
    path.write_text(json.dumps(doc), encoding="utf-8")


def _read_anomaly_index(path: Path) -> set[AnomalyKey]:
    doc = json.loads(path.read_text(encoding="utf-8"))
    return {
        AnomalyKey(a["device_id"], Modality(a["modality"]), a["timestamp"])
        for a in doc["anomalies"]
    }


def cmd_simulate(args) -> int:
    cfg = _load_cfg(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    layout = build_layout(cfg)
    profile = build_profile(cfg)
    window = _window_for(cfg, anchor_now=False)
    result = generate_synthetic(
        profile, layout, window, cadence_s=cfg.synthetic.cadence_s, rng_seed=cfg.rng_seed
    )
    rows = write_normalized_csv(result.readings, out / "readings.csv")
    _write_anomaly_index(result.anomaly_index, out / "anomalies.json")
    (out / "layout.json").write_text(json.dumps(layout_to_doc(layout)), encoding="utf-8")
    print(f"wrote {rows} readings to {out / 'readings.csv'}")
    print(f"wrote {len(result.anomaly_index)} ground-truth anomalies to {out / 'anomalies.json'}")
    return EXIT_OK


def _anomaly_feature_rows(readings, modality, injected: set[AnomalyKey] | None):
    values = []
    labels = []
    for r in readings:
        if r.modality is not modality:
            continue
        values.append([r.value])
        if injected is not None:
            labels.append(AnomalyKey(r.device_id, r.modality, r.timestamp) in injected)
        else:
            labels.append(not is_plausible(r))
    return np.array(values), np.array(labels, dtype=int)


def _combined_anomaly_rows(readings, injected: set[AnomalyKey] | None):
    """3-column (temperature, humidity, co2) matrix aligned by exact timestamp."""
    wanted = (Modality.TEMPERATURE, Modality.HUMIDITY, Modality.CO2)
    by_ts: dict[int, dict[Modality, list]] = {}
    flagged: dict[int, bool] = {}
    for r in readings:
        if r.modality not in wanted:
            continue
        by_ts.setdefault(r.timestamp, {}).setdefault(r.modality, []).append(r.value)
        bad = (
            AnomalyKey(r.device_id, r.modality, r.timestamp) in injected
            if injected is not None
            else not is_plausible(r)
        )
        flagged[r.timestamp] = flagged.get(r.timestamp, False) or bad
    rows = []
    labels = []
    for ts in sorted(by_ts):
        cols = by_ts[ts]
        if all(m in cols for m in wanted):
            rows.append([float(np.mean(cols[m])) for m in wanted])
            labels.append(flagged[ts])
    return np.array(rows), np.array(labels, dtype=int)


def _train_anomaly(args, cfg: RunConfig, out: Path) -> int:
    data_dir = Path(args.data)
    loaded = load_normalized_csv(data_dir / "readings.csv")
    index_path = data_dir / "anomalies.json"
    injected = _read_anomaly_index(index_path) if index_path.exists() else None
    grid = cfg.grids.anomaly or None
    label_source = "injection index" if injected is not None else "plausibility rules"
    print(f"anomaly ground truth: {label_source}")
    for modality in ANOMALY_MODALITIES:
        rows, labels = _anomaly_feature_rows(loaded.readings, modality, injected)
        if rows.shape[0] == 0:
            continue
        model, run = grid_search_anomaly(rows, labels, grid=grid, rng_seed=cfg.rng_seed)
        save_model(model, out / f"anomaly_{modality.value}.json")
        run.save(out / f"anomaly_{modality.value}.run.json")
        f1 = run.report.per_class.get(1)
        print(
            f"anomaly[{modality.value}] grid_point={run.grid_point} "
            f"f1={f1.f1 if f1 else float('nan'):.3f} "
            f"precision={f1.precision if f1 else float('nan'):.3f} "
            f"recall={f1.recall if f1 else float('nan'):.3f}"
        )
    rows, labels = _combined_anomaly_rows(loaded.readings, injected)
    if rows.shape[0] >= 8:
        model, run = grid_search_anomaly(rows, labels, grid=grid, rng_seed=cfg.rng_seed)
        save_model(model, out / "anomaly_combined.json")
        run.save(out / "anomaly_combined.run.json")
        print(f"anomaly[combined] grid_point={run.grid_point}")
    return EXIT_OK


def _train_forecast(args, cfg: RunConfig, out: Path) -> int:
    data_dir = Path(args.data)
    loaded = load_normalized_csv(data_dir / "readings.csv")
    prep = preprocess(loaded.readings, cadence_s=cfg.synthetic.cadence_s)
    grid = cfg.grids.forecast or None
    targets = [m for m in prep.modalities if m is not Modality.MOTION]
    if args.modality:
        targets = [Modality(args.modality)]
    for modality in targets:
        series = prep.column(modality)
        x, y = make_windows(series)
        if x.shape[0] < 10:
            print(f"forecast[{modality.value}] skipped: not enough windows")
            continue
        train_xy, _ = chrono_split(np.arange(x.shape[0]))
        model, run = train_forecaster(
            x[train_xy],
            y[train_xy],
            grid=grid,
            rng_seed=cfg.rng_seed,
            norm_params=prep.norm_params[modality],
        )
        save_model(model, out / f"forecast_{modality.value}.json")
        run.save(out / f"forecast_{modality.value}.run.json")
        print(
            f"forecast[{modality.value}] grid_point={run.grid_point} "
            f"best_epoch={run.best_epoch} val_mae={min(run.epoch_mae_history):.5f}"
        )
        if args.format == "table":
            print("  epoch  val_mae")
            for i, mae in enumerate(run.epoch_mae_history, start=1):
                marker = " *" if i == run.best_epoch else ""
                print(f"  {i:5d}  {mae:.5f}{marker}")
    combined = (Modality.TEMPERATURE, Modality.HUMIDITY, Modality.CO2)
    if args.modality is None and all(m in prep.modalities for m in combined):
        cols = np.column_stack([prep.column(m) for m in combined])
        x, y = cols[:-1], cols[1:]
        if x.shape[0] >= 10:
            train_idx, _ = chrono_split(np.arange(x.shape[0]))
            model, run = train_forecaster(
                x[train_idx], y[train_idx], grid=grid, rng_seed=cfg.rng_seed, output_dim=3
            )
            save_model(model, out / "forecast_combined.json")
            run.save(out / "forecast_combined.run.json")
            print(
                f"forecast[combined] grid_point={run.grid_point} "
                f"val_mae={min(run.epoch_mae_history):.5f}"
            )
    return EXIT_OK


def _train_presence(args, cfg: RunConfig, out: Path) -> int:
    records: list[OccupancyRecord] = []
    for path in args.data.split(","):
        records.extend(load_occupancy_csv(path.strip()))
    records.sort(key=lambda r: r.timestamp)
    grid = cfg.grids.presence or None
    model, run = train_presence(records, grid=grid, rng_seed=cfg.rng_seed)
    save_model(model, out / "presence.json")
    run.save(out / "presence.run.json")
    print(f"presence grid_point={run.grid_point}")
    print(presence_table(run.report))
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.task == "anomaly":
        return _train_anomaly(args, cfg, out)
    if args.task == "forecast":
        return _train_forecast(args, cfg, out)
    return _train_presence(args, cfg, out)


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    kind = type(model).__name__
    if kind == "RandomForestModel":
        try:
            records = load_occupancy_csv(args.data)
        except FormatError as exc:
            raise ConfigurationError(
                f"presence models need an occupancy CSV: {exc}"
            ) from exc
        stream = (((r.temperature, r.humidity, r.co2), r.occupancy_label) for r in records)
        report = evaluate_on_stream(model, stream)
        if args.format == "doc":
            print(json.dumps(report.to_doc(), indent=2))
        else:
            print(presence_table(report))
        return EXIT_OK
    if kind == "DenseNetModel" and model.output_dim == 3:
        loaded = load_normalized_csv(Path(args.data))
        prep = preprocess(loaded.readings)
        combined = (Modality.TEMPERATURE, Modality.HUMIDITY, Modality.CO2)
        missing = [m.value for m in combined if m not in prep.modalities]
        if missing:
            raise ConfigurationError(f"data lacks usable series for: {', '.join(missing)}")
        cols = np.column_stack([prep.column(m) for m in combined])
        from .models.densenet import densenet_forward
        from .models.metrics import regression_metrics

        preds = densenet_forward(model, cols[:-1])
        report = regression_metrics(np.asarray(preds).ravel(), cols[1:].ravel())
        if args.format == "doc":
            print(json.dumps(report.to_doc(), indent=2))
        else:
            print(format_regression_table(report, model_name="Combined (normalized)"))
        return EXIT_OK
    if kind == "DenseNetModel":
        loaded = load_normalized_csv(Path(args.data))
        modality = Modality(args.modality) if args.modality else _modality_from_name(args.model)
        prep = preprocess(loaded.readings)
        if modality not in prep.modalities:
            raise ConfigurationError(f"data has no usable {modality.value} series")
        lo = model.norm_min if model.norm_min is not None else 0.0
        hi = model.norm_max if model.norm_max is not None else 1.0
        raw = prep.raw_column(modality)
        series = (raw - lo) / (hi - lo) if hi != lo else raw * 0.0
        x, y = make_windows(series)
        if x.shape[0] == 0:
            raise ConfigurationError("not enough data to build evaluation windows")
        from .models.densenet import densenet_forward

        preds = densenet_forward(model, x)
        from .models.metrics import regression_metrics

        report = regression_metrics(np.atleast_1d(preds).ravel(), y)
        if args.format == "doc":
            print(json.dumps(report.to_doc(), indent=2))
        else:
            print(format_regression_table(report, model_name=modality.value.title()))
        return EXIT_OK
    if kind == "IsolationForestModel":
        loaded = load_normalized_csv(Path(args.data))
        modality = Modality(args.modality) if args.modality else _modality_from_name(args.model)
        rows, labels = _anomaly_feature_rows(loaded.readings, modality, None)
        if rows.shape[0] == 0:
            raise ConfigurationError(f"data has no {modality.value} readings")
        from .models.iforest import iforest_classify_many
        from .models.metrics import classification_metrics, format_classification_table

        preds = iforest_classify_many(model, rows).astype(int)
        report = classification_metrics(preds, labels)
        if args.format == "doc":
            print(json.dumps(report.to_doc(), indent=2))
        else:
            print(format_classification_table(report, {0: "Normal", 1: "Anomaly"}))
        return EXIT_OK
    raise ConfigurationError(f"cannot evaluate model kind {kind}")


def _modality_from_name(model_path: str) -> Modality:
    stem = Path(model_path).stem
    for modality in Modality:
        if stem.endswith(modality.value):
            return modality
    raise ConfigurationError(
        f"cannot infer modality from {model_path!r}; pass --modality explicitly"
    )


def _descriptors_from_cfg(cfg: RunConfig) -> list[DeploymentDescriptor]:
    return [
        DeploymentDescriptor(
            service_id=d.service_id,
            cpu_request=d.cpu,
            memory_request=d.memory_mb,
            placement_preference=PlacementPreference(d.preference),
            latency_bound_ms=d.latency_bound_ms,
            data_dependencies=tuple(d.data_dependencies),
            replicas=d.replicas,
        )
        for d in cfg.deployments
    ]


def _nodes_from_cfg(cfg: RunConfig) -> list[NodeSpec]:
    return [
        NodeSpec(
            node_id=n.node_id,
            tier=Tier(n.tier),
            cpu_capacity=n.cpu,
            memory_capacity=n.memory_mb,
            latency_ms=n.latency_ms,
        )
        for n in cfg.nodes
    ]


def _schedule_labels(profile, timestamps) -> np.ndarray:
    return np.array(
        [1 if profile.occupied_since(int(t)) is not None else 0 for t in timestamps], dtype=int
    )


def cmd_demo(args) -> int:
    cfg = _load_cfg(args)
    # demo grids stay small so the walkthrough finishes in seconds
    cfg.grids.anomaly = cfg.grids.anomaly or {
        "n_estimators": [50],
        "max_samples_fraction": [0.05],
        "contamination": [0.01, 0.02, 0.05],
    }
    cfg.grids.forecast = cfg.grids.forecast or {"learning_rate": [0.01], "hidden_width": [64]}
    cfg.grids.presence = cfg.grids.presence or {
        "n_estimators": [50], "max_depth": [10], "min_samples_split": [2]
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "models").mkdir(exist_ok=True)
    layout = build_layout(cfg)
    profile = build_profile(cfg)
    window = _window_for(cfg, anchor_now=not args.fixed_window)

    print("== simulate ==")
    result = generate_synthetic(
        profile, layout, window, cadence_s=cfg.synthetic.cadence_s, rng_seed=cfg.rng_seed
    )
    write_normalized_csv(result.readings, out / "readings.csv")
    _write_anomaly_index(result.anomaly_index, out / "anomalies.json")
    print(f"generated {len(result.readings)} readings, {len(result.anomaly_index)} injected anomalies")

    print("== register asset ==")
    ds_cfg = cfg.dataspace
    allowed = list(ds_cfg.allowed_participants)
    if args.deny_consumer and ds_cfg.consumer_id in allowed:
        allowed.remove(ds_cfg.consumer_id)
    policy = UsagePolicy(
        allowed_participants=frozenset(allowed),
        purpose=ds_cfg.purpose,
        expiry=(int(time.time()) + ds_cfg.expiry_s) if ds_cfg.expiry_s else None,
        max_request_rate=ds_cfg.max_request_rate,
    )
    asset = AssetDescriptor(
        asset_id="smart-office-telemetry",
        endpoint="https://provider.local/assets/smart-office-telemetry",
        device_type="sensirion+shelly",
        location="office-building",
        data_modality="environmental+motion",
        protocol="https",
        temporal_resolution=cfg.synthetic.cadence_s,
        update_frequency=cfg.synthetic.cadence_s,
        license="demo-internal",
        access_policy=policy,
    )
    dataspace = Dataspace(journal_path=out / "catalog.jsonl", provider_id=ds_cfg.provider_id)
    dataspace.register_asset(asset, readings=result.readings)
    print(f"registered {asset.asset_id} (catalog size {len(dataspace.catalog)})")

    print("== negotiate contract ==")
    negotiation = dataspace.negotiate(ds_cfg.consumer_id, asset.asset_id)
    for message_type, old, new in negotiation.transitions:
        arrow = f"{old} -> {new}" if old else new
        print(f"[{negotiation.negotiation_id}] {message_type}: {arrow}")
    if negotiation.state is not NegotiationState.FINALIZED:
        print(f"negotiation ended {negotiation.state.value} ({negotiation.termination_reason})")
        return EXIT_DOMAIN

    print("== place services ==")
    orchestrator = Orchestrator(_nodes_from_cfg(cfg), event_log_path=out / "events.jsonl")
    plan = orchestrator.plan(_descriptors_from_cfg(cfg))
    for (service_id, idx), node_id in sorted(plan.assignments.items()):
        print(f"{service_id}:{idx} -> {node_id}")
    for (service_id, idx), reason in plan.unplaced:
        print(f"{service_id}:{idx} unplaced ({reason})")
    now = time.time()
    orchestrator.deploy(plan, now=now)
    if args.kill_edge_node:
        victim = plan.assignments.get(("forecast-service", 0))
        print(f"== kill node {victim} ==")
        orchestrator.kill_node(victim)
        report = orchestrator.heartbeat_sweep(now + 1.0, timeout_s=30.0)
        for action in report.actions:
            print(action)

    print("== transfer ==")
    store = SeriesStore(journal_path=out / "store.jsonl")
    transfer = dataspace.start_transfer(negotiation.negotiation_id, ds_cfg.consumer_id)
    transfer = dataspace.run_transfer(transfer, transfer_sink(store))
    print(f"[{transfer.transfer_id}] delivered {transfer.delivered} readings ({transfer.state.value})")
    if transfer.state is not TransferState.COMPLETED:
        print(f"transfer failed: {transfer.termination_reason}")
        return EXIT_DOMAIN

    print("== train models ==")
    injected = result.anomaly_index
    for modality in ANOMALY_MODALITIES:
        rows, labels = _anomaly_feature_rows(result.readings, modality, injected)
        if rows.shape[0] == 0:
            continue
        model, run = grid_search_anomaly(
            rows, labels, grid=cfg.grids.anomaly, rng_seed=cfg.rng_seed
        )
        save_model(model, out / "models" / f"anomaly_{modality.value}.json")
        run.save(out / "models" / f"anomaly_{modality.value}.run.json")
        cls1 = run.report.per_class.get(1)
        print(f"anomaly[{modality.value}] f1={cls1.f1 if cls1 else 0.0:.3f}")

    prep = preprocess(result.readings, cadence_s=cfg.synthetic.cadence_s)
    labels = _schedule_labels(profile, prep.grid_timestamps)
    records = [
        OccupancyRecord(
            timestamp=int(ts),
            temperature=prep.raw_column(Modality.TEMPERATURE)[i],
            humidity=prep.raw_column(Modality.HUMIDITY)[i],
            light=prep.raw_column(Modality.LIGHT)[i] if Modality.LIGHT in prep.modalities else 0.0,
            co2=prep.raw_column(Modality.CO2)[i],
            occupancy_label=int(labels[i]),
        )
        for i, ts in enumerate(prep.grid_timestamps)
    ]
    if len(set(labels.tolist())) > 1:
        presence_model, presence_run = train_presence(
            records, grid=cfg.grids.presence, rng_seed=cfg.rng_seed
        )
        save_model(presence_model, out / "models" / "presence.json")
        presence_run.save(out / "models" / "presence.run.json")
        print(f"presence weighted_f1={presence_run.report.weighted.f1:.3f}")
    else:
        print("presence training skipped: schedule produced a single class")

    series = prep.column(Modality.TEMPERATURE)
    x, y = make_windows(series)
    cap = min(x.shape[0], 1200)
    model, run = train_forecaster(
        x[-cap:], y[-cap:],
        grid=cfg.grids.forecast,
        rng_seed=cfg.rng_seed,
        norm_params=prep.norm_params[Modality.TEMPERATURE],
    )
    save_model(model, out / "models" / "forecast_temperature.json")
    run.save(out / "models" / "forecast_temperature.run.json")
    print(f"forecast[temperature] val_mae={min(run.epoch_mae_history):.5f}")

    (out / "layout.json").write_text(json.dumps(layout_to_doc(layout)), encoding="utf-8")
    (out / "service.json").write_text(
        json.dumps(
            {
                "cadence_s": cfg.synthetic.cadence_s,
                "port": cfg.service.port,
                "retention_s": cfg.service.retention_s,
            }
        ),
        encoding="utf-8",
    )
    store.close()
    print("== done ==")
    print(f"state written to {out}")
    print("FINALIZED -> STARTED -> COMPLETED")
    return EXIT_OK


def _orchestrator_loop(cfg: RunConfig, out_dir: Path, stop) -> None:
    """Background placement simulation: deploy once, then sweep heartbeats."""
    orchestrator = Orchestrator(_nodes_from_cfg(cfg), event_log_path=out_dir / "events.jsonl")
    plan = orchestrator.plan(_descriptors_from_cfg(cfg))
    now = time.time()
    orchestrator.deploy(plan, now=now)
    interval = 5.0
    while not stop.wait(interval):
        now = time.time()
        for instance_id, instance in list(orchestrator.instances.items()):
            node = orchestrator.nodes.get(instance.node_id) if instance.node_id else None
            if node is not None and node.healthy:
                orchestrator.heartbeat(instance_id, now)
        report = orchestrator.heartbeat_sweep(now, timeout_s=3 * interval)
        for action in report.actions:
            print(f"[orchestrator] {action}")


def cmd_serve(args) -> int:
    cfg = _load_cfg(args)
    state_dir = Path(args.state)
    if not (state_dir / "layout.json").exists():
        raise ConfigurationError(
            f"{state_dir} has no layout.json; run `smartbuilding demo-dataspace --out {state_dir}` first"
        )
    port = args.port or cfg.service.port
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind(("127.0.0.1", port))
    except OSError as exc:
        raise ConfigurationError(f"port {port} unavailable: {exc}") from exc
    finally:
        probe.close()
    state = ServiceState.from_dir(state_dir)
    static_dir = Path(args.static) if args.static else None
    app = create_app(state, static_dir=static_dir)
    import threading

    import uvicorn

    stop = threading.Event()
    loop = threading.Thread(
        target=_orchestrator_loop, args=(cfg, state_dir, stop), daemon=True
    )
    loop.start()
    print(f"serving on http://127.0.0.1:{port} (ctrl-c to stop)")
    try:
        uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
    finally:
        stop.set()
        state.store.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smartbuilding",
        description="Smart-building telemetry platform with dataspace sharing and edge placement.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate synthetic telemetry")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train a model family")
    p.add_argument("--task", choices=["anomaly", "forecast", "presence"], required=True)
    p.add_argument("--data", required=True, help="data directory (or CSV path(s) for presence)")
    p.add_argument("--out", required=True, help="model output directory")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--modality", default=None)
    p.add_argument("--format", choices=["table", "doc"], default="doc")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a saved model on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--modality", default=None)
    p.add_argument("--format", choices=["table", "doc"], default="table")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("demo-dataspace", help="scripted end-to-end walkthrough")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default="demo-out")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--deny-consumer", action="store_true")
    p.add_argument("--kill-edge-node", action="store_true")
    p.add_argument(
        "--fixed-window",
        action="store_true",
        help="use the configured start epoch instead of anchoring the window at now",
    )
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("serve", help="run the monitoring API")
    p.add_argument("--config", default=None)
    p.add_argument("--state", default="demo-out", help="directory produced by demo-dataspace")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--static", default=None, help="built dashboard bundle directory")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, FormatError, ContractError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
