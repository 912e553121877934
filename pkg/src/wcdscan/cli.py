"""Command-line driver: scan, lab, oracle, report, selfcheck.

Exit codes: 0 clean / all checks passed, 1 vulnerabilities found (scan) or
oracle disagreements (selfcheck), 2 configuration or runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .crawler import ConfigError, ingest_domains
from .detector import RandomnessConfig
from .http_engine import DEFAULT_USER_AGENT, RateLimiter, Transport
from .lab import catalog
from .lab.oracle import enumerate_oracle
from .lab.server import LabServer
from .pipeline import ALL_TECHNIQUES, LockedJournal, ScanSettings, run_selfcheck, scan_pool
from .reporting import (
    aggregate,
    build_site_map,
    read_records,
    redact_verdicts,
    render_table,
    stats_to_records,
    write_records,
)
from .url_toolkit import PathConfusionTechnique

EXIT_CLEAN = 0
EXIT_FINDINGS = 1
EXIT_ERROR = 2

log = logging.getLogger(__name__)


def _parse_techniques(spec: str) -> tuple[PathConfusionTechnique, ...]:
    if spec.strip().lower() == "all":
        return ALL_TECHNIQUES
    return tuple(PathConfusionTechnique.from_name(t.strip()) for t in spec.split(","))


def _parse_resolve(entries: list[str]) -> dict[str, tuple[str, int]]:
    overrides = {}
    for entry in entries:
        try:
            host, addr = entry.split("=", 1)
            ip, port = addr.rsplit(":", 1)
            overrides[host.lower()] = (ip, int(port))
        except ValueError as exc:
            raise ConfigError(f"bad --resolve entry {entry!r} (want HOST=IP:PORT)") from exc
    return overrides


def _load_wordlist(path: str) -> tuple[str, ...]:
    return tuple(Path(path).read_text(encoding="utf-8").split())


def _catalog_sites(which: str):
    if which == "matrix":
        return catalog.matrix_sites()
    if which == "support":
        return catalog.support_sites()
    return catalog.all_sites()


def _scenario_sites(args):
    if getattr(args, "scenarios", None):
        return catalog.load_scenarios(args.scenarios)
    return _catalog_sites(getattr(args, "catalog", "all"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wcdscan",
        description="Web cache deception scanner with a deterministic cache lab",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    scan = sub.add_parser("scan", help="scan a seed pool and emit verdicts")
    scan.add_argument("--seeds", required=True, help="seed file: one host per line, optional config ref")
    scan.add_argument("--techniques", default="all", help="'all' or comma list of technique names")
    scan.add_argument("--budget", type=int, default=500, help="unique page groups per domain")
    scan.add_argument("--rate", type=float, default=2.0, help="max requests/second/host")
    scan.add_argument("--burst", type=int, default=4)
    scan.add_argument("--mode", choices=["full", "marker-gated"], default="full")
    scan.add_argument("--delay", type=float, default=0.0, help="seconds between victim and attacker steps")
    scan.add_argument("--extension", default="css", help="bogus static extension for attack URLs")
    scan.add_argument("--seed", type=int, default=None, help="deterministic grouping/nonce seed")
    scan.add_argument("--workers", type=int, default=4, help="concurrent site workers")
    scan.add_argument("--out", default=None, help="write verdict records (JSONL) to this file")
    scan.add_argument("--format", choices=["table", "records"], default="table")
    scan.add_argument("--redact", action="store_true", help="replace impacted hostnames in records")
    scan.add_argument("--resolve", action="append", default=[], metavar="HOST=IP:PORT",
                      help="connect to IP:PORT for HOST (repeatable; lab routing)")
    scan.add_argument("--user-agent", default=DEFAULT_USER_AGENT)
    scan.add_argument("--respect-robots", action="store_true",
                      help="honor robots.txt (ignored by default; see README)")
    scan.add_argument("--wordlist", default=None, help="dictionary file for the entropy stripper")
    scan.add_argument("--question-embed", default=None, metavar="NAME=VAL",
                      help="use the embedded-parameter encoded-? payload form")
    scan.add_argument("--no-probe", action="store_true", help="skip seed liveness probing")
    scan.add_argument("--journal", default=None, metavar="FILE",
                      help="append crawl-journal records (JSONL) for resumability")

    lab = sub.add_parser("lab", help="run the scenario catalog as local HTTP listeners")
    lab.add_argument("--port", type=int, default=0)
    lab.add_argument("--scenarios", default=None, help="scenario JSON file (default: built-in catalog)")
    lab.add_argument("--catalog", choices=["matrix", "support", "all"], default="all")
    lab.add_argument("--export", default=None, metavar="FILE",
                     help="write the selected scenarios as JSON and exit")
    lab.add_argument("--write-seeds", default=None, metavar="DIR",
                     help="write a seeds file + per-site configs for the scanner and exit")

    oracle = sub.add_parser("oracle", help="enumerate ground-truth exploitability")
    oracle.add_argument("--scenarios", default=None)
    oracle.add_argument("--catalog", choices=["matrix", "support", "all"], default="matrix")
    oracle.add_argument("--techniques", default="all")
    oracle.add_argument("--extension", default="css")
    oracle.add_argument("--format", choices=["table", "records"], default="table")

    report = sub.add_parser("report", help="aggregate a verdict stream into tables")
    report.add_argument("--records", required=True, help="verdict JSONL file ('-' for stdin)")
    report.add_argument("--format", choices=["table", "records"], default="table")
    report.add_argument("--redact", action="store_true")

    selfcheck = sub.add_parser("selfcheck", help="scan the lab and diff against the oracle")
    selfcheck.add_argument("--techniques", default="all")
    selfcheck.add_argument("--rate", type=float, default=500.0)
    selfcheck.add_argument("--workers", type=int, default=8)
    selfcheck.add_argument("--extension", default="css")
    selfcheck.add_argument("--quick", action="store_true",
                           help="run a 16-site sample of the matrix instead of all 128")
    return parser


def _cmd_scan(args) -> int:
    randomness = RandomnessConfig()
    if args.wordlist:
        randomness = RandomnessConfig(dictionary=_load_wordlist(args.wordlist))
    journal_fh = open(args.journal, "a", encoding="utf-8") if args.journal else None
    settings = ScanSettings(
        techniques=_parse_techniques(args.techniques),
        budget=args.budget,
        mode=args.mode,
        rate=args.rate,
        burst=args.burst,
        extension=args.extension,
        seed=args.seed,
        attacker_delay=args.delay,
        workers=args.workers,
        user_agent=args.user_agent,
        transport=Transport(resolve_overrides=_parse_resolve(args.resolve)),
        randomness=randomness,
        respect_robots=args.respect_robots,
        embed_query=args.question_embed,
        journal=LockedJournal(journal_fh) if journal_fh else None,
    )
    limiter = RateLimiter(rate=settings.rate, burst=settings.burst)
    try:
        pool = ingest_domains(
            args.seeds, settings.transport, limiter, probe=not args.no_probe
        )
        run = scan_pool(pool, settings)
    finally:
        if journal_fh:
            journal_fh.close()
    for domain, error in run.errors:
        print(f"error: {domain}: {error}", file=sys.stderr)

    verdicts = run.verdicts
    if args.redact:
        verdicts = redact_verdicts(verdicts)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            write_records(verdicts, fh)
    if args.format == "records" and not args.out:
        write_records(verdicts, sys.stdout)
    if args.format == "table":
        hosts = {h for site in pool.sites for h in site.hosts()}
        stats = aggregate(verdicts, build_site_map(hosts))
        print(render_table(stats))
    if any(v.vulnerable for v in run.verdicts):
        return EXIT_FINDINGS
    if run.errors and not run.verdicts and pool.sites:
        return EXIT_ERROR  # nothing was actually tested
    return EXIT_CLEAN


def _write_seed_files(sites, directory: str) -> Path:
    target = Path(directory)
    target.mkdir(parents=True, exist_ok=True)
    lines = []
    for site in sites:
        entry = catalog.seed_entry(site)
        config_name = f"{site.name}.json"
        (target / config_name).write_text(json.dumps(entry, indent=2), encoding="utf-8")
        lines.append(f"http://{site.host} {config_name}")
    seeds = target / "seeds.txt"
    seeds.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return seeds


def _cmd_lab(args) -> int:
    sites = _scenario_sites(args)
    if not sites:
        print("no scenarios to serve", file=sys.stderr)
        return EXIT_ERROR
    if args.export:
        catalog.dump_scenarios(sites, args.export)
        print(f"wrote {len(sites)} scenarios to {args.export}")
        return EXIT_CLEAN
    if args.write_seeds:
        seeds = _write_seed_files(sites, args.write_seeds)
        print(f"wrote scanner seeds for {len(sites)} sites to {seeds}")
        return EXIT_CLEAN
    server = LabServer(sites, port=args.port).start()
    print(f"lab listening on {server.address}:{server.port} ({len(sites)} sites)")
    print("scan with, e.g.:")
    example = sites[0].host
    print(
        f"  wcdscan scan --seeds seeds.txt "
        f"--resolve {example}={server.address}:{server.port} ..."
    )
    for host in sorted(server.runtimes):
        print(f"  {host} -> {server.address}:{server.port}")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        print("stopping lab")
        server.stop()
    return EXIT_CLEAN


def _cmd_oracle(args) -> int:
    sites = _scenario_sites(args)
    sites = [s for s in sites if s.marker_pages()]
    techniques = _parse_techniques(args.techniques)
    truth = enumerate_oracle(sites, techniques, args.extension)
    if args.format == "records":
        for site in sites:
            for technique in techniques:
                print(json.dumps({
                    "site": site.name,
                    "technique": technique.value,
                    "vulnerable": truth[(site.name, technique)],
                }))
        return EXIT_CLEAN
    width = max(len(s.name) for s in sites) + 2
    header = " " * width + "".join(f"{t.value.replace('encoded_', ''):>16}" for t in techniques)
    print(header)
    for site in sites:
        row = f"{site.name:<{width}}"
        for technique in techniques:
            row += f"{'VULN' if truth[(site.name, technique)] else '-':>16}"
        print(row)
    return EXIT_CLEAN


def _cmd_report(args) -> int:
    if args.records == "-":
        verdicts = read_records(sys.stdin)
    else:
        with open(args.records, "r", encoding="utf-8") as fh:
            verdicts = read_records(fh)
    if args.redact:
        verdicts = redact_verdicts(verdicts)
    hosts = set()
    for verdict in verdicts:
        hosts.add(verdict.page.split("//", 1)[1].split("/", 1)[0].split(":")[0])
    stats = aggregate(verdicts, build_site_map(hosts))
    if args.format == "records":
        print(json.dumps(stats_to_records(stats), indent=2))
    else:
        print(render_table(stats))
    return EXIT_CLEAN


def _cmd_selfcheck(args) -> int:
    sites = catalog.matrix_sites()
    if args.quick:
        sites = sites[:: len(sites) // 16 or 1][:16]
    sites = sites + [catalog.classic_site()]
    settings = ScanSettings(
        techniques=_parse_techniques(args.techniques),
        rate=args.rate,
        burst=max(4, int(args.rate)),
        workers=args.workers,
        extension=args.extension,
        seed=0,
    )
    report = run_selfcheck(sites, settings)
    checked = len(report.scanned)
    print(
        f"selfcheck: {len(report.sites)} sites x {len(settings.techniques)} techniques "
        f"= {checked} verdicts in {report.elapsed_seconds:.1f}s"
    )
    print(f"  inconclusive verdicts: {report.inconclusive}")
    print(f"  disagreements with oracle: {len(report.disagreements)}")
    for name, technique, expected, got in report.disagreements:
        print(f"    {name} / {technique.value}: oracle={expected} scanner={got}")
    if report.ok:
        print("selfcheck PASS: scanner verdicts match the ground-truth oracle")
        return EXIT_CLEAN
    print("selfcheck FAIL")
    return EXIT_FINDINGS


def cli_run(args: argparse.Namespace) -> int:
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    handlers = {
        "scan": _cmd_scan,
        "lab": _cmd_lab,
        "oracle": _cmd_oracle,
        "report": _cmd_report,
        "selfcheck": _cmd_selfcheck,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return cli_run(args)


if __name__ == "__main__":
    sys.exit(main())
