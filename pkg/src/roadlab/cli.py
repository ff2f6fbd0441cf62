"""Command-line entry point: serve, generate, check, stats."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import Config
from .engine import Engine


def _load(project: str, config_file: str = None) -> Engine:
    path = Path(project)
    if (path / "manifest.json").exists():
        engine = Engine.load(path)
    else:
        config = Config.from_file(config_file) if config_file else Config()
        engine = Engine(config)
    return engine


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    engine = _load(args.project, args.config)
    uvicorn.run(create_app(engine), host=args.host, port=args.port)
    return 0


def cmd_generate(args) -> int:
    engine = _load(args.project)
    committed = engine.generate()
    engine.save(args.project)
    print(f"regenerated: {len(committed)} change records")
    return 0


def cmd_check(args) -> int:
    engine = _load(args.project)
    problems = engine.check()
    for p in problems:
        print(p)
    if problems:
        print(f"{len(problems)} violation(s)", file=sys.stderr)
        return 1
    print("ok")
    return 0


def cmd_stats(args) -> int:
    engine = _load(args.project)
    stats = engine.stats()
    print(f"{'cells':>10} {'todo':>10} {'done':>10} {'cumulated_ms':>14}")
    print(f"{stats['cells']:>10} {stats['todo']:>10} {stats['done']:>10} "
          f"{stats['cumulated_ms']:>14}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roadlab",
                                     description="reactive street-model engine")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--project", required=True)
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--config")
    serve.set_defaults(fn=cmd_serve)

    generate = sub.add_parser("generate", help="batch full regeneration")
    generate.add_argument("--project", required=True)
    generate.set_defaults(fn=cmd_generate)

    check = sub.add_parser("check", help="run every store-wide invariant sweep")
    check.add_argument("--project", required=True)
    check.set_defaults(fn=cmd_check)

    stats = sub.add_parser("stats", help="hex-grid progress table")
    stats.add_argument("--project", required=True)
    stats.set_defaults(fn=cmd_stats)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
