"""Single entry point for the whole pipeline.

Subcommands mirror the stages: dataset-gen -> train -> attack -> encode ->
validate, plus serve/push/pull for the sharing leg.  Every command is
deterministic given its flags and seeds (serve excepted); when a command
needs randomness and --seed is absent, the chosen seed is printed so the run
can be reproduced.

Exit codes: 0 success, 1 validation errors, 2 network failure, 3 auth
failure, 64 usage.
"""

import argparse
import json
import os
import socket
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from aiti.timestamps import parse_timestamp

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NETWORK = 2
EXIT_AUTH = 3
EXIT_USAGE = 64

MODES = ("canonical", "paper-compat")


class CliParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class CliConfig:
    """Defaults loadable from a JSON config file; flags always win."""

    server_url: Optional[str] = None
    token: Optional[str] = None
    default_mode: str = "canonical"
    model_path: Optional[str] = None
    dataset_path: Optional[str] = None
    report_path: Optional[str] = None
    bundle_path: Optional[str] = None

    @classmethod
    def load(cls, path) -> "CliConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in doc.items() if k in known})


def _config(args) -> CliConfig:
    if getattr(args, "config", None):
        return CliConfig.load(args.config)
    return CliConfig()


def _resolve(parser, flag_value, config_value, flag_name):
    value = flag_value if flag_value is not None else config_value
    if value is None:
        parser.error(f"{flag_name} is required (flag or config file)")
    return value


def _timestamp_flag(text: str):
    try:
        return parse_timestamp(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _clip_flag(text: str):
    if text.lower() == "none":
        return None
    try:
        lo, hi = (float(v) for v in text.split(","))
        return (lo, hi)
    except ValueError:
        raise argparse.ArgumentTypeError("clip must be LO,HI or 'none'")


def _pick_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    seed = int.from_bytes(os.urandom(4), "big")
    print(f"seed: {seed} (chosen from entropy; pass --seed {seed} to reproduce)")
    return seed


# ---------------------------------------------------------------------------
# dataset-gen / train / attack
# ---------------------------------------------------------------------------


def cmd_dataset_gen(parser, args) -> int:
    from aiti.redteam import generate_blobs, write_dataset_csv

    seed = _pick_seed(args)
    dataset = generate_blobs(
        seed=seed,
        n_per_class=args.per_class,
        n_classes=args.classes,
        n_features=args.features,
        separation=args.separation,
    )
    write_dataset_csv(dataset, args.out)
    print(f"wrote {dataset.n_samples} samples x {dataset.n_features} features to {args.out}")
    return EXIT_OK


def cmd_train(parser, args) -> int:
    from aiti.redteam import accuracy, new_classifier, read_dataset_csv, save_model, train

    cfg = _config(args)
    dataset_path = _resolve(parser, args.dataset, cfg.dataset_path, "--dataset")
    dataset = read_dataset_csv(dataset_path)
    seed = _pick_seed(args)
    if args.arch == "softmax":
        widths = (dataset.n_features, dataset.n_classes)
    else:
        widths = (dataset.n_features, args.hidden, dataset.n_classes)
    name = args.name or args.arch
    model = new_classifier(widths, activation=args.activation, name=name)
    model = train(model, dataset, learning_rate=args.lr, epochs=args.epochs, seed=seed)
    save_model(model, args.out)
    print(f"clean accuracy: {accuracy(model, dataset):.4f}")
    return EXIT_OK


def cmd_attack(parser, args) -> int:
    from aiti.redteam import (
        Dataset,
        FgmConfig,
        evaluate_attack,
        fgm_perturb,
        load_model,
        read_dataset_csv,
        save_report,
        write_dataset_csv,
    )

    import numpy as np

    from aiti.timestamps import utc_now

    cfg = _config(args)
    model = load_model(_resolve(parser, args.model, cfg.model_path, "--model"))
    dataset = read_dataset_csv(_resolve(parser, args.dataset, cfg.dataset_path, "--dataset"))
    targets = None
    if args.target_class is not None:
        targets = tuple([args.target_class] * dataset.n_samples)
    config = FgmConfig(
        epsilon=args.epsilon,
        norm=args.norm,
        targeted=targets is not None,
        target_labels=targets,
        clip_range=args.clip,
    )
    created = args.created
    report = evaluate_attack(
        model, dataset, config, clock=(lambda: created) if created else utc_now
    )
    save_report(report, args.out)
    print(
        f"clean accuracy: {report.clean_accuracy:.4f}  "
        f"adversarial accuracy: {report.adversarial_accuracy:.4f}  "
        f"success rate: {report.success_rate:.4f}"
    )
    if args.adv_out:
        perturbed = []
        for i in range(dataset.n_samples):
            label = targets[i] if targets is not None else int(dataset.labels[i])
            perturbed.append(fgm_perturb(model, dataset.features[i], label, config))
        adv = Dataset(
            features=np.array(perturbed),
            labels=dataset.labels,
            n_classes=dataset.n_classes,
            name=dataset.name + "-adv",
        )
        write_dataset_csv(adv, args.adv_out)
        print(f"wrote perturbed samples to {args.adv_out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# encode / validate
# ---------------------------------------------------------------------------


def cmd_encode(parser, args) -> int:
    from aiti.encoder import EncoderOptions, encode
    from aiti.objects import serialize_bundle
    from aiti.redteam import load_report

    cfg = _config(args)
    report = load_report(_resolve(parser, args.report, cfg.report_path, "--report"))
    # Default clock is the report's own timestamp so output is a pure
    # function of the flags and the input file.
    created = args.created if args.created else report.created
    opts = EncoderOptions(
        id_strategy=args.id_strategy,
        verbatim_id=args.verbatim_id,
        clock=lambda: created,
        emit_pattern_object=args.emit_pattern,
        emit_sighting=args.emit_sighting,
        producer_identity=args.producer,
    )
    try:
        bundle = encode(report, opts)
    except ValueError as exc:
        parser.error(str(exc))
    mode = args.mode or cfg.default_mode
    Path(args.out).write_text(serialize_bundle(bundle, mode), encoding="utf-8")
    print(f"wrote bundle with {len(bundle.objects)} object(s) to {args.out}")
    return EXIT_OK


def cmd_validate(parser, args) -> int:
    from aiti.objects import AitiParseError, parse_bundle
    from aiti.validation import has_errors, validate

    cfg = _config(args)
    bundle_path = _resolve(parser, args.bundle, cfg.bundle_path, "--bundle")
    mode = args.mode or cfg.default_mode
    try:
        bundle = parse_bundle(Path(bundle_path).read_text(encoding="utf-8"), mode)
    except AitiParseError as exc:
        print(f"error: {exc.code} at {exc.path}: {exc.message}", file=sys.stderr)
        return EXIT_VALIDATION
    diagnostics = validate(bundle, args.level)
    for d in diagnostics:
        print(f"{d.severity}: {d.code} at {d.path}: {d.message}", file=sys.stderr)
    if has_errors(diagnostics):
        return EXIT_VALIDATION
    print(f"bundle valid at level {args.level} ({len(diagnostics)} warning(s))")
    return EXIT_OK


# ---------------------------------------------------------------------------
# serve / push / pull
# ---------------------------------------------------------------------------


def cmd_serve(parser, args) -> int:
    import uvicorn

    from aiti.server import create_app, load_server_config

    config = load_server_config(args.config)
    app = create_app(config)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((config.host, config.port))
    host, port = sock.getsockname()[:2]
    print(f"serving at http://{host}:{port}", flush=True)
    server = uvicorn.Server(uvicorn.Config(app, log_level="warning", lifespan="off"))
    server.run(sockets=[sock])
    return EXIT_OK


def _client(parser, args):
    from aiti.client import SharingClient

    cfg = _config(args)
    url = _resolve(parser, args.server_url, cfg.server_url, "--server-url")
    token = _resolve(parser, args.token, cfg.token, "--token")
    return SharingClient(server_url=url, token=token)


def cmd_push(parser, args) -> int:
    from aiti.client import AuthError, NetworkError, ServerError

    cfg = _config(args)
    bundle_path = _resolve(parser, args.bundle, cfg.bundle_path, "--bundle")
    try:
        doc = json.loads(Path(bundle_path).read_text(encoding="utf-8"))
        objects = doc["objects"]
    except (ValueError, KeyError) as exc:
        print(f"error: {bundle_path} is not a bundle: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    client = _client(parser, args)
    try:
        status = client.push(args.root, args.collection, objects)
    except AuthError as exc:
        print(f"auth failure: {exc}", file=sys.stderr)
        return EXIT_AUTH
    except (NetworkError, ServerError) as exc:
        print(f"push failed: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    print(json.dumps(status, indent=2))
    return EXIT_OK if status.get("failure_count", 1) == 0 else EXIT_VALIDATION


def cmd_pull(parser, args) -> int:
    from aiti.client import AuthError, NetworkError, ServerError
    from aiti.objects import content_id

    client = _client(parser, args)
    try:
        objects = client.pull(
            args.root,
            args.collection,
            match_type=args.match_type,
            match_id=args.match_id,
            added_after=args.added_after,
            page_limit=args.limit,
        )
    except AuthError as exc:
        print(f"auth failure: {exc}", file=sys.stderr)
        return EXIT_AUTH
    except (NetworkError, ServerError) as exc:
        print(f"pull failed: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    bundle_id = content_id("bundle", ",".join(str(o.get("id", "")) for o in objects))
    doc = {"type": "bundle", "id": bundle_id, "objects": objects}
    Path(args.out).write_text(
        json.dumps(doc, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    print(f"pulled {len(objects)} object(s) into {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------


def _add_config_flag(sub):
    sub.add_argument("--config", help="JSON file with default paths/credentials")


def _add_client_flags(sub):
    _add_config_flag(sub)
    sub.add_argument("--server-url", help="base URL of the sharing server")
    sub.add_argument("--token", help="bearer token")
    sub.add_argument("--root", default="aiti", help="API root name (default: aiti)")


def build_parser() -> CliParser:
    parser = CliParser(prog="aiti", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    subs = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)

    p = subs.add_parser("dataset-gen", help="generate a Gaussian-blobs dataset CSV")
    p.add_argument("--seed", type=int)
    p.add_argument("--per-class", type=int, default=50)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--features", type=int, default=2)
    p.add_argument("--separation", type=float, default=4.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dataset_gen)

    p = subs.add_parser("train", help="train a classifier on a dataset CSV")
    _add_config_flag(p)
    p.add_argument("--dataset")
    p.add_argument("--out", required=True, help="model JSON output path")
    p.add_argument("--arch", choices=("softmax", "mlp"), default="softmax")
    p.add_argument("--hidden", type=int, default=8, help="hidden width for --arch mlp")
    p.add_argument("--activation", choices=("tanh", "relu"), default="tanh")
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--seed", type=int)
    p.add_argument("--name", help="model name recorded in the file")
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("attack", help="run FGM against a model and write a report")
    _add_config_flag(p)
    p.add_argument("--model")
    p.add_argument("--dataset")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--norm", choices=("inf", "one", "two"), default="inf")
    p.add_argument("--target-class", type=int, help="targeted attack toward this class")
    p.add_argument("--clip", type=_clip_flag, default=(0.0, 1.0), help="LO,HI or 'none' (default 0,1)")
    p.add_argument("--created", type=_timestamp_flag, help="report timestamp (default: now)")
    p.add_argument("--out", required=True, help="report JSON output path")
    p.add_argument("--adv-out", help="optional CSV of perturbed samples")
    p.set_defaults(func=cmd_attack)

    p = subs.add_parser("encode", help="encode a report into a threat-intel bundle")
    _add_config_flag(p)
    p.add_argument("--report")
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=MODES)
    p.add_argument(
        "--id-strategy",
        choices=("canonical-random", "deterministic-from-content", "verbatim"),
        default="deterministic-from-content",
    )
    p.add_argument("--verbatim-id")
    p.add_argument("--created", type=_timestamp_flag, help="object timestamp (default: report's)")
    p.add_argument("--emit-pattern", action="store_true")
    p.add_argument("--emit-sighting", action="store_true")
    p.add_argument("--producer", help="emit an identity object for this producer")
    p.set_defaults(func=cmd_encode)

    p = subs.add_parser("validate", help="validate a bundle; exit 0 iff error-free")
    _add_config_flag(p)
    p.add_argument("--bundle")
    p.add_argument("--level", choices=("strict", "lenient"), default="strict")
    p.add_argument("--mode", choices=MODES)
    p.set_defaults(func=cmd_validate)

    p = subs.add_parser("serve", help="run the sharing server until interrupted")
    p.add_argument("--config", required=True, help="server config JSON")
    p.set_defaults(func=cmd_serve)

    p = subs.add_parser("push", help="push a bundle's objects to a collection")
    _add_client_flags(p)
    p.add_argument("--bundle")
    p.add_argument("--collection", required=True, help="collection id or alias")
    p.set_defaults(func=cmd_push)

    p = subs.add_parser("pull", help="pull objects from a collection into a bundle")
    _add_client_flags(p)
    p.add_argument("--collection", required=True, help="collection id or alias")
    p.add_argument("--match-type", help="filter by object type (either spelling)")
    p.add_argument("--match-id", help="filter by object id")
    p.add_argument("--added-after", help="only objects added strictly after this timestamp")
    p.add_argument("--limit", type=int, help="page size while following pagination")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pull)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(parser, args)


if __name__ == "__main__":
    sys.exit(main())
