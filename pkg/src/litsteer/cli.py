"""Command-line entry points: serve the API, run a scripted pipeline, export.

`serve` hosts the HTTP/event-stream API. `run` drives one pipeline headlessly
and renders the synthesis as Markdown; without --auto-approve it stops at the
first checkpoint so a human can pick it up over the API. `export` writes a
canonical snapshot of a persisted session.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from .arxiv import ArxivClient
from .errors import LitsteerError
from .events import Session
from .gateway import gateway_from_env
from .session import SessionManager
from .workflow import NodeStatus, PipelineRun

logger = logging.getLogger(__name__)


def _build_manager(data_dir: str | None, mock: bool) -> SessionManager:
    if mock:
        from .mocks import build_mock_manager

        return build_mock_manager(data_dir=data_dir)
    return SessionManager(
        gateway=gateway_from_env(),
        arxiv_client=ArxivClient(),
        data_dir=data_dir,
    )


def _default_data_dir(args_value: str | None) -> str | None:
    return args_value or os.environ.get("DATA_DIR")


def render_report_markdown(session: Session, run: PipelineRun) -> str:
    """Markdown for a finished pipeline: body, cited sources, review table."""
    tree_node = session.tree.get(run.tree_node_id)
    report = session.reports[run.pipeline_id]
    lines = [f"# {tree_node.query_text}", "", report.body, ""]
    if report.citations:
        lines.append("## Sources")
        lines.append("")
        for marker, chunk_id in report.citations:
            chunk = session.chunks[chunk_id]
            paper = session.corpus[chunk.arxiv_id]
            lines.append(f"- [{marker}] {paper.title} ({paper.abs_url})")
            lines.append(f'  - "{chunk.text}"')
        lines.append("")
    lines.append("## Reviewed papers")
    lines.append("")
    for verdict in session.verdicts.values():
        paper = session.corpus.get(verdict.arxiv_id)
        title = paper.title if paper else verdict.arxiv_id
        lines.append(
            f"- {verdict.arxiv_id} | score {verdict.relevance_score:.2f} | "
            f"{verdict.user_state.value} | {title}"
        )
    return "\n".join(lines) + "\n"


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app

    manager = _build_manager(_default_data_dir(args.data_dir), args.mock)
    app = create_app(manager, ui_dir=args.ui_dir)
    if args.ui_dir:
        print(f"serving web client at http://{args.host}:{args.port}/ui/")
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    manager = _build_manager(_default_data_dir(args.data_dir), args.mock)
    session = manager.create_session()
    run = manager.create_pipeline(
        session.session_id,
        query_text=args.query,
        auto_approve=args.auto_approve,
        run_to_next_checkpoint=args.auto_approve,
    )
    manager.step(run.pipeline_id)
    failed = [n for n in run.nodes if n.status is NodeStatus.FAILED]
    if failed:
        print(f"pipeline {run.pipeline_id} failed at {failed[0].kind.value}:")
        print(f"  {failed[0].error}")
        return 1
    if not run.is_complete:
        node = run.nodes[run.current_index]
        print(
            f"pipeline {run.pipeline_id} paused at checkpoint: "
            f"{node.kind.value} is {node.status.value}"
        )
        print(
            f"session {session.session_id}: approve or edit node "
            f"{node.node_id} over the API (litsteer serve), or rerun with "
            "--auto-approve"
        )
        return 0
    text = render_report_markdown(session, run)
    out = Path(args.out)
    out.write_text(text, encoding="utf-8")
    print(f"wrote {out}")
    print(f"session {session.session_id}, pipeline {run.pipeline_id}")
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    data_dir = _default_data_dir(args.data_dir)
    if not data_dir:
        print("export needs --data-dir or DATA_DIR to locate session logs")
        return 2
    manager = _build_manager(data_dir, mock=True)
    manager.export_snapshot(args.session, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="litsteer",
        description="steerable literature-research pipelines over arXiv",
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="debug logging"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="host the HTTP API and event stream")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--data-dir", default=None)
    serve.add_argument(
        "--ui-dir",
        default=None,
        help="directory of built web-client assets to serve at /ui",
    )
    serve.add_argument(
        "--mock", action="store_true", help="use offline deterministic providers"
    )
    serve.set_defaults(func=cmd_serve)

    run = sub.add_parser("run", help="run one pipeline headlessly")
    run.add_argument("--query", required=True)
    run.add_argument(
        "--auto-approve",
        action="store_true",
        help="accept every checkpoint and run to completion",
    )
    run.add_argument("--out", default="report.md")
    run.add_argument("--data-dir", default=None)
    run.add_argument(
        "--mock", action="store_true", help="use offline deterministic providers"
    )
    run.set_defaults(func=cmd_run)

    export = sub.add_parser("export", help="write a canonical session snapshot")
    export.add_argument("--session", required=True)
    export.add_argument("--out", default="snapshot.json")
    export.add_argument("--data-dir", default=None)
    export.set_defaults(func=cmd_export)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except LitsteerError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
