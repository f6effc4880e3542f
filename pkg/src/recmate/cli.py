"""Command line entry point: gen, cluster, evaluate, simulate, recommend, serve.

Every subcommand is reproducible: the same inputs and seed produce
byte-identical output files (fixed JSON key order, shortest round-trip
float repr). Exit codes: 0 success, 1 input/usage error, 2 internal error.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import sys
from pathlib import Path

from . import clustering, community, datagen, profiles, recommender

_INPUT_ERRORS = (
    profiles.ProfileError,
    clustering.ClusteringError,
    community.CommunityError,
    recommender.RecommenderError,
    FileNotFoundError,
    NotADirectoryError,
    json.JSONDecodeError,
    ValueError,
    KeyError,
)


class CliError(Exception):
    """Bad invocation or bad input files; exits with status 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the CLI contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _dump_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _load_json(path: Path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _read_csv_dir(path: Path) -> list[profiles.ConsumerDataset]:
    if not path.is_dir():
        raise CliError(f"not a directory: {path}")
    files = sorted(path.glob("*.csv"))
    datasets = []
    for f in files:
        datasets.append(profiles.parse_consumption_csv(f.read_text(encoding="utf-8"), consumer_id=f.stem))
    return datasets


def _feature_vectors(datasets, layout, normalization, min_coverage):
    return [profiles.build_feature_vector(ds, layout, normalization, min_coverage) for ds in datasets]


def _merge_config(args: argparse.Namespace, keys: dict[str, object]) -> argparse.Namespace:
    """Fill flags left at None from --config JSON, then hard defaults.

    Explicit flags always win; unknown config keys are errors.
    """
    config = {}
    if args.config is not None:
        config = _load_json(Path(args.config))
        unknown = set(config) - set(keys)
        if unknown:
            raise CliError(f"unknown config keys: {sorted(unknown)}")
    for key, default in keys.items():
        if getattr(args, key) is None:
            setattr(args, key, config.get(key, default))
    return args


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


# --- subcommands -------------------------------------------------------------


def cmd_gen(args) -> int:
    _merge_config(args, {"seed": 7, "days": 60, "noise": 0.1, "start": "2023-01-02", "p_max": 5.0})
    out = Path(args.out)
    start = dt.date.fromisoformat(args.start)
    corpus = datagen.gen_corpus(seed=args.seed, days=args.days, noise_sigma=args.noise, start=start)

    consumers_dir = out / "consumers"
    consumers_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "seed": args.seed,
        "days": args.days,
        "noise_sigma": args.noise,
        "start": start.isoformat(),
        "consumers": [],
    }
    for dataset, archetype in corpus:
        (consumers_dir / f"{dataset.consumer_id}.csv").write_text(
            profiles.serialize_consumption_csv(dataset), encoding="utf-8"
        )
        manifest["consumers"].append(
            {
                "consumer_id": dataset.consumer_id,
                "archetype": archetype.value,
                "seed": args.seed * 1000 + len(manifest["consumers"]),
            }
        )
    _dump_json(out / "manifest.json", manifest)

    producer = datagen.gen_producer(args.p_max, seed=args.seed)
    state = community.CommunityState(
        members=(),
        producers=(producer,),
        horizon_hours=args.days * 24,
        initial_soc=0.0,
        start=start,
    )
    _dump_json(out / "community.json", community.community_to_dict(state))
    _say(args, f"wrote {len(corpus)} consumers, manifest.json and community.json to {out}")
    return 0


def cmd_cluster(args) -> int:
    _merge_config(
        args,
        {
            "k": 3,
            "layout": "WEEKPART_48",
            "normalization": "UNIT_TOTAL",
            "init": "KMEANSPP",
            "tolerance": 1e-6,
            "max_iter": 300,
            "restarts": 10,
            "seed": 0,
            "min_coverage": 0.8,
        },
    )
    datasets = _read_csv_dir(Path(args.in_dir))
    if not datasets:
        raise CliError(f"no candidate CSV files in {args.in_dir}")
    vectors = _feature_vectors(datasets, profiles.Layout[args.layout], profiles.Normalization[args.normalization], args.min_coverage)
    config = clustering.KMeansConfig(
        k=args.k,
        init=clustering.Init[args.init],
        tolerance=args.tolerance,
        max_iterations=args.max_iter,
        restarts=args.restarts,
        seed=args.seed,
    )
    model = clustering.kmeans_fit(vectors, config)
    _dump_json(Path(args.out), clustering.model_to_dict(model))
    _say(args, f"fitted k={model.k} wcss={model.wcss:.6g} converged={model.converged} -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    _merge_config(args, {"min_coverage": 0.8, "out": None})
    model = clustering.model_from_dict(_load_json(Path(args.model)))
    datasets = _read_csv_dir(Path(args.in_dir))
    if not datasets:
        raise CliError(f"no CSV files in {args.in_dir}")
    vectors = _feature_vectors(datasets, model.layout, model.normalization, args.min_coverage)

    manifest = _load_json(Path(args.labels))
    label_of = {c["consumer_id"]: c["archetype"] for c in manifest["consumers"]}
    try:
        labels = [label_of[v.consumer_id] for v in vectors]
    except KeyError as exc:
        raise CliError(f"labels manifest is missing consumer {exc}") from None

    assignments = [clustering.assign(model, v) for v in vectors]
    roc = clustering.roc_auc_vs_labels(model, vectors, labels)
    report = {
        "wcss": clustering.wcss(model, vectors),
        "silhouette": clustering.silhouette(vectors, assignments),
        "roc_auc": {
            "per_cluster": list(roc.auc_per_cluster),
            "mapped_labels": list(roc.mapped_labels),
            "macro": roc.macro_auc,
        },
        "assignments": {v.consumer_id: a.cluster_index for v, a in zip(vectors, assignments)},
    }
    if args.out:
        _dump_json(Path(args.out), report)
    _say(args, json.dumps(report, indent=2))
    return 0


def cmd_simulate(args) -> int:
    _merge_config(args, {"trace": None})
    state = community.community_from_dict(_load_json(Path(args.community)))
    report = community.simulate(state)
    _dump_json(Path(args.out), community.report_to_dict(report))
    if args.trace:
        trace_path = Path(args.trace)
        trace_path.parent.mkdir(parents=True, exist_ok=True)
        trace_path.write_text(community.trace_to_csv(report), encoding="utf-8")
    _say(
        args,
        f"shared={report.shared_energy:.3f} kWh  scr={report.self_consumption_ratio:.3f}  "
        f"self-sufficiency={report.self_sufficiency:.3f} -> {args.out}",
    )
    return 0


def cmd_recommend(args) -> int:
    _merge_config(args, {"policy": None})
    model = clustering.model_from_dict(_load_json(Path(args.model)))
    state = community.community_from_dict(_load_json(Path(args.community)))
    policy = recommender.AdmissionPolicy()
    if args.policy:
        policy = recommender.policy_from_dict(_load_json(Path(args.policy)))

    candidates = _read_csv_dir(Path(args.in_dir))
    if not candidates:
        raise CliError(f"no candidate CSV files in {args.in_dir}")

    ranked, failures = recommender.rank_candidates(state, model, candidates, policy)
    doc = {
        "recommendations": [recommender.recommendation_to_dict(r) for r in ranked],
        "failures": [{"candidate_id": f.candidate_id, "error": f.error, "detail": f.detail} for f in failures],
    }
    _dump_json(Path(args.out), doc)
    for r in ranked:
        _say(args, f"{r.decision.value:7s} {r.candidate_id}  marginal_shared={r.marginal_shared:.3f} kWh")
    for f in failures:
        _say(args, f"FAILED  {f.candidate_id}  {f.error}: {f.detail}")
    return 0


def cmd_serve(args) -> int:
    _merge_config(
        args,
        {"policy": None, "snapshot": None, "port": 8080, "host": "127.0.0.1", "cors_origin": None, "static_dir": None},
    )
    import uvicorn

    from .service.app import create_app
    from .service.state import ServiceState

    snapshot = Path(args.snapshot) if args.snapshot else None
    if snapshot is not None and snapshot.exists():
        state = ServiceState.load(snapshot)
    else:
        if not args.community or not args.model:
            raise CliError("serve needs --community and --model when no snapshot exists")
        policy = recommender.AdmissionPolicy()
        if args.policy:
            policy = recommender.policy_from_dict(_load_json(Path(args.policy)))
        state = ServiceState(
            community=community.community_from_dict(_load_json(Path(args.community))),
            model=clustering.model_from_dict(_load_json(Path(args.model))),
            policy=policy,
            snapshot_path=snapshot,
        )
        state.save()

    app = create_app(state, cors_origin=args.cors_origin, static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning" if args.quiet else "info")
    return 0


# --- argument wiring ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="recmate", description="Energy-community profiling and admission recommendations")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with flag defaults (explicit flags win)")
        p.add_argument("--quiet", action="store_true", help="suppress stdout summaries")

    p = sub.add_parser("gen", help="emit a synthetic consumer corpus and community file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--days", type=int)
    p.add_argument("--noise", type=float, help="lognormal noise sigma")
    p.add_argument("--start", help="first day, ISO date")
    p.add_argument("--p-max", dest="p_max", type=float, help="producer peak power in kW")
    common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("cluster", help="fit a k-means model from a directory of consumption CSVs")
    p.add_argument("--in", dest="in_dir", required=True, help="directory of consumer CSV files")
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--k", type=int)
    p.add_argument("--layout", choices=[l.name for l in profiles.Layout])
    p.add_argument("--normalization", choices=[n.name for n in profiles.Normalization])
    p.add_argument("--init", choices=[i.name for i in clustering.Init])
    p.add_argument("--tolerance", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--min-coverage", dest="min_coverage", type=float)
    common(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("evaluate", help="WCSS / silhouette / ROC-AUC report for a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--labels", required=True, help="manifest JSON with consumer archetypes")
    p.add_argument("--out")
    p.add_argument("--min-coverage", dest="min_coverage", type=float)
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="simulate a community and write the sharing report")
    p.add_argument("--community", required=True)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--trace", help="hourly trace CSV path")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("recommend", help="rank admission candidates against a community")
    p.add_argument("--model", required=True)
    p.add_argument("--community", required=True)
    p.add_argument("--in", dest="in_dir", required=True, help="directory of candidate CSV files")
    p.add_argument("--out", required=True, help="ranked recommendations JSON path")
    p.add_argument("--policy", help="admission policy JSON")
    common(p)
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("serve", help="run the HTTP decision service")
    p.add_argument("--community")
    p.add_argument("--model")
    p.add_argument("--policy")
    p.add_argument("--snapshot", help="snapshot JSON path (restored if it exists)")
    p.add_argument("--port", type=int)
    p.add_argument("--host")
    p.add_argument("--cors-origin", dest="cors_origin")
    p.add_argument("--static-dir", dest="static_dir", help="directory with the dashboard build, served at /")
    common(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handles usage/help itself
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"recmate: error: {exc}", file=sys.stderr)
        return 1
    except _INPUT_ERRORS as exc:
        print(f"recmate: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # internal failure
        import traceback

        traceback.print_exc()
        print(f"recmate: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
