"""``gatectl``: pod lifecycle, scenario runs, the console server, audit checks.

The passphrase is never taken from the command line: it comes from the
``GATECTL_PASSPHRASE`` environment variable or an interactive prompt
(``GATECTL_NEW_PASSPHRASE`` for rotations).  Decrypted attribute values
are only ever printed under an explicit ``--reveal`` flag.

Exit codes: 0 success, 1 audit chain invalid, 2 authentication failure,
3 file format error, 4 configuration error, 5 reproducibility guard.
"""

from __future__ import annotations

import argparse
import dataclasses
import getpass
import json
import os
import sys
from pathlib import Path

from . import pod, service, updl
from .gatekeeper import AuditLog, GatekeeperError
from .sim import ConfigError, ScenarioConfig, StrictReproError, persona, run_scenario

PASSPHRASE_ENV = "GATECTL_PASSPHRASE"
NEW_PASSPHRASE_ENV = "GATECTL_NEW_PASSPHRASE"

EXIT_OK = 0
EXIT_AUDIT_INVALID = 1
EXIT_AUTH = 2
EXIT_FORMAT = 3
EXIT_CONFIG = 4
EXIT_STRICT_REPRO = 5

_GRANULARITY_NAMES = {
    updl.FULL: "full",
    updl.BUCKETED: "bucketed",
    updl.CATEGORY: "category",
    updl.REDACTED: "redacted",
}


class CliError(Exception):
    """A user-facing failure with a pinned exit code."""

    def __init__(self, message: str, code: int) -> None:
        super().__init__(message)
        self.code = code


def _passphrase(
    *,
    env: str = PASSPHRASE_ENV,
    prompt: str = "Passphrase: ",
    confirm: bool = False,
) -> str:
    """Read a passphrase from the environment or an interactive prompt.

    Passphrases deliberately have no command-line flag: argv leaks into
    shell history and process listings.
    """
    value = os.environ.get(env)
    if value is not None:
        if not value:
            raise CliError(f"{env} is set but empty", EXIT_CONFIG)
        return value
    try:
        value = getpass.getpass(prompt)
        if confirm and getpass.getpass("Confirm: ") != value:
            raise CliError("passphrases do not match", EXIT_CONFIG)
    except (EOFError, KeyboardInterrupt) as exc:
        raise CliError("no passphrase provided", EXIT_CONFIG) from exc
    if not value:
        raise CliError("passphrase must be non-empty", EXIT_CONFIG)
    return value


# -------------------------------------------------------------- pod commands


def _load_profile(path: str) -> tuple[updl.ProfileGraph, list[pod.LogEntry]]:
    """Build a graph and log entries from a profile description file.

    Expected shape::

        {"attributes": [[field_path, ontology_class, value], ...],
         "relations":  [[subject_path, predicate, object_path], ...],
         "logs":       [{"text": ..., "timestamp": ..., "tags": [...]}, ...]}
    """
    try:
        raw = json.loads(Path(path).read_text("utf-8"))
    except OSError as exc:
        raise CliError(f"cannot read profile {path}: {exc}", EXIT_CONFIG) from exc
    except ValueError as exc:
        raise CliError(f"profile {path} is not valid JSON: {exc}", EXIT_CONFIG) from exc
    if not isinstance(raw, dict):
        raise CliError(f"profile {path} must be a JSON object", EXIT_CONFIG)
    try:
        attributes = [
            (str(p), str(c), tuple(v) if isinstance(v, list) else v)
            for p, c, v in raw.get("attributes", [])
        ]
        relations = [(str(s), str(pr), str(o)) for s, pr, o in raw.get("relations", [])]
        logs = [
            pod.LogEntry(
                text=str(entry["text"]),
                timestamp=float(entry.get("timestamp", index)),
                tags=tuple(str(tag) for tag in entry.get("tags", ())),
            )
            for index, entry in enumerate(raw.get("logs", []))
        ]
        graph = updl.build_profile_graph(attributes, relations)
    except (KeyError, TypeError, ValueError, updl.UpdlError) as exc:
        raise CliError(f"profile {path} is malformed: {exc}", EXIT_CONFIG) from exc
    return graph, logs


def _cmd_pod_create(args: argparse.Namespace) -> int:
    if args.profile is not None:
        graph, logs = _load_profile(args.profile)
    else:
        graph, logs = persona.build_profile_graph(), persona.build_activity_log()
    prompted = os.environ.get(PASSPHRASE_ENV) is None
    passphrase = _passphrase(confirm=prompted)
    sealed = pod.create_pod(graph, logs, passphrase=passphrase)
    pod.export_pod(sealed, args.out)
    print(f"sealed pod written to {args.out} ({len(sealed)} bytes, "
          f"{len(graph.nodes)} nodes, {len(logs)} log entries)")
    return EXIT_OK


def _cmd_pod_inspect(args: argparse.Namespace) -> int:
    sealed = pod.import_pod(args.pod)
    session = pod.mount(sealed, _passphrase())
    try:
        graph = session.graph
        rows = []
        for node in graph.nodes:
            level = updl.classify_sensitivity(node.field_path, updl.DEFAULT_ONTOLOGY)
            value = updl.to_plain(node.value) if args.reveal else "[sealed]"
            rows.append({
                "field_path": node.field_path,
                "ontology_class": node.ontology_class,
                "sensitivity": level,
                "granularity": _GRANULARITY_NAMES[node.granularity],
                "value": value,
            })
        if args.json:
            print(json.dumps(
                {"v": 1, "format_version": sealed.format_version,
                 "nodes": rows, "edges": len(graph.edges),
                 "log_count": session.log_count},
                sort_keys=True, indent=2,
            ))
        else:
            print(f"pod {args.pod}: format v{sealed.format_version}, "
                  f"{len(rows)} nodes, {len(graph.edges)} edges, "
                  f"{session.log_count} log entries")
            width = max(len(r["field_path"]) for r in rows)
            for row in rows:
                print(f"  {row['field_path']:<{width}}  s={row['sensitivity']:>2}  "
                      f"{row['granularity']:<8}  {row['value']}")
            if not args.reveal:
                print("(values sealed; pass --reveal to print them)")
    finally:
        receipt = pod.unmount(session)
    print(f"unmounted; {receipt.cleared_buffers} buffers cleared", file=sys.stderr)
    return EXIT_OK


def _cmd_pod_export(args: argparse.Namespace) -> int:
    sealed = pod.import_pod(args.pod)
    old = _passphrase()
    prompted = os.environ.get(NEW_PASSPHRASE_ENV) is None
    new = _passphrase(env=NEW_PASSPHRASE_ENV, prompt="New passphrase: ", confirm=prompted)
    rotated = pod.reseal(sealed, old, new)
    pod.export_pod(rotated, args.out)
    print(f"pod re-sealed under new passphrase: {args.out} ({len(rotated)} bytes)")
    return EXIT_OK


def _cmd_pod_import(args: argparse.Namespace) -> int:
    sealed = pod.import_pod(args.pod)
    session = pod.mount(sealed, _passphrase())
    try:
        summary = (f"pod verified: format v{sealed.format_version}, "
                   f"{len(session.graph.nodes)} nodes, {session.log_count} log entries")
    finally:
        pod.unmount(session)
    print(summary)
    return EXIT_OK


def _cmd_pod_migrate(args: argparse.Namespace) -> int:
    try:
        data = Path(args.pod).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {args.pod}: {exc}", EXIT_FORMAT) from exc
    if data[: len(pod.MAGIC)] != pod.MAGIC or len(data) <= len(pod.MAGIC):
        raise CliError(f"{args.pod} is not a sealed pod", EXIT_FORMAT)
    version = data[len(pod.MAGIC)]
    if version != pod.FORMAT_VERSION:
        raise CliError(
            f"no migration path from format v{version} to v{pod.FORMAT_VERSION}",
            EXIT_FORMAT,
        )
    pod.SealedPod.from_bytes(data)  # full structural check
    if args.out is not None:
        pod.export_pod(data, args.out)
        print(f"already at format v{pod.FORMAT_VERSION}; copied to {args.out}")
    else:
        print(f"already at format v{pod.FORMAT_VERSION}; nothing to do")
    return EXIT_OK


# -------------------------------------------------------------- sim command


def _cmd_sim(args: argparse.Namespace) -> int:
    if args.config is not None:
        config = ScenarioConfig.from_file(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.strict_repro:
            overrides["strict_repro"] = True
        if overrides:
            config = dataclasses.replace(config, **overrides)
    else:
        config = ScenarioConfig(
            seed=args.seed if args.seed is not None else 42,
            strict_repro=args.strict_repro,
        )
    result = run_scenario(args.rq, config)
    print(result.report.to_text())
    if args.out is not None:
        written = result.write(args.out)
        print(f"\nwrote {len(written)} files to {args.out}")
    return EXIT_OK


# ------------------------------------------------------------ serve command


def _default_static_dir() -> Path | None:
    candidate = Path("frontend") / "dist"
    return candidate if candidate.is_dir() else None


def _cmd_serve(args: argparse.Namespace) -> int:
    static_dir = args.static_dir if args.static_dir is not None else _default_static_dir()
    state = service.build_state(
        pod_path=args.pod,
        passphrase=_passphrase() if args.pod is not None else None,
        strictness=args.strictness,
        static_dir=static_dir,
        decision_timeout=args.decision_timeout,
    )
    return service.serve_forever(
        state,
        host=args.host,
        port=args.port,
        with_sim=args.with_sim,
        sim_interval=args.interval,
    )


# ----------------------------------------------------- verify-audit command


def _cmd_verify_audit(args: argparse.Namespace) -> int:
    try:
        text = Path(args.audit).read_text("utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {args.audit}: {exc}", EXIT_FORMAT) from exc
    try:
        audit = AuditLog.from_jsonl(text)
    except (GatekeeperError, KeyError, TypeError, ValueError) as exc:
        raise CliError(f"{args.audit} is not an audit log: {exc}", EXIT_FORMAT) from exc
    bad = audit.verify()
    if bad is None:
        print(f"audit chain intact ({len(audit.records)} records)")
        return EXIT_OK
    print(f"audit chain broken at record {bad}")
    return EXIT_AUDIT_INVALID


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gatectl",
        description="Manage sealed pods, run disclosure scenarios, "
                    "serve the reviewer console, verify audit chains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pod_parser = sub.add_parser("pod", help="sealed pod lifecycle")
    pod_sub = pod_parser.add_subparsers(dest="pod_command", required=True)

    create = pod_sub.add_parser("create", help="seal a profile into a pod file")
    create.add_argument("--out", required=True, help="output pod file")
    create.add_argument("--profile", help="profile JSON (default: built-in fixture)")
    create.set_defaults(func=_cmd_pod_create)

    inspect = pod_sub.add_parser("inspect", help="mount a pod and list its nodes")
    inspect.add_argument("pod", help="pod file")
    inspect.add_argument("--reveal", action="store_true",
                         help="print decrypted values (off by default)")
    inspect.add_argument("--json", action="store_true", help="machine-readable output")
    inspect.set_defaults(func=_cmd_pod_inspect)

    export = pod_sub.add_parser("export", help="re-seal under a new passphrase")
    export.add_argument("pod", help="source pod file")
    export.add_argument("--out", required=True, help="rotated pod file")
    export.set_defaults(func=_cmd_pod_export)

    imp = pod_sub.add_parser("import", help="validate a pod file end to end")
    imp.add_argument("pod", help="pod file")
    imp.set_defaults(func=_cmd_pod_import)

    migrate = pod_sub.add_parser("migrate", help="upgrade a pod to the current format")
    migrate.add_argument("pod", help="pod file")
    migrate.add_argument("--out", help="write the (possibly upgraded) pod here")
    migrate.set_defaults(func=_cmd_pod_migrate)

    sim = sub.add_parser("sim", help="run a disclosure scenario")
    sim.add_argument("--rq", type=int, required=True,
                     help="scenario number (1, 2, or 3)")
    sim.add_argument("--seed", type=int, help="override the scenario seed")
    sim.add_argument("--out", help="directory for trace/report/audit files")
    sim.add_argument("--config", help="scenario config JSON")
    sim.add_argument("--strict-repro", action="store_true",
                     help="refuse any non-deterministic backend")
    sim.set_defaults(func=_cmd_sim)

    serve = sub.add_parser("serve", help="serve the reviewer console API")
    serve.add_argument("--port", type=int, default=8787)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--pod", help="pod file to mount (default: built-in fixture)")
    serve.add_argument("--with-sim", action="store_true",
                       help="drive scripted counterparts in the background")
    serve.add_argument("--interval", type=float, default=1.5,
                       help="seconds between scripted handshakes")
    serve.add_argument("--strictness", type=int, default=5, choices=range(11),
                       metavar="0..10")
    serve.add_argument("--static-dir", help="directory with the console frontend")
    serve.add_argument("--decision-timeout", type=float, default=90.0,
                       help="seconds to hold a handshake for a reviewer")
    serve.set_defaults(func=_cmd_serve)

    verify = sub.add_parser("verify-audit", help="check an audit chain")
    verify.add_argument("audit", help="audit JSONL file")
    verify.set_defaults(func=_cmd_verify_audit)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except pod.PodAuthenticationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_AUTH
    except pod.PodFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except StrictReproError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STRICT_REPRO
    except (ConfigError, service.ServiceError, pod.PodError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
