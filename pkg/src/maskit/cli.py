"""Command line entry point: validate a project document or serve it over HTTP.

Exit codes: 0 ok, 1 validation failure, 2 runtime failure (e.g. port in use).
"""
from __future__ import annotations

import argparse
import logging
import sys
from socketserver import ThreadingMixIn
from wsgiref.simple_server import WSGIRequestHandler, WSGIServer, make_server

from .api import build_app
from .project import boot, load_project

log = logging.getLogger("maskit")


class ThreadingWSGIServer(ThreadingMixIn, WSGIServer):
    daemon_threads = True


class QuietHandler(WSGIRequestHandler):
    def log_message(self, fmt, *args):
        logging.getLogger("maskit.http").debug(fmt, *args)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="maskit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check a project document")
    p_validate.add_argument("--project", required=True)

    p_serve = sub.add_parser("serve", help="boot a project and serve its HTTP API")
    p_serve.add_argument("--project", required=True)
    p_serve.add_argument("--port", type=int, default=None, help="overrides http.port; 0 picks a free port")
    p_serve.add_argument("--bind", default=None, help="overrides http.bind")
    p_serve.add_argument("--log-level", choices=["error", "info", "debug"], default="info")
    p_serve.add_argument("--persist-dir", default=None, help="enable file persistence into this directory")

    args = parser.parse_args(argv)

    if args.command == "validate":
        project, errors = load_project(args.project)
        if errors:
            for e in errors:
                print(f"error: {e}", file=sys.stderr)
            return 1
        print(f"ok: project {project.name!r} validates")
        return 0

    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    project, errors = load_project(args.project)
    if errors:
        for e in errors:
            print(f"error: {e}", file=sys.stderr)
        return 1

    try:
        system = boot(project, persist_dir=args.persist_dir)
    except Exception as e:  # boot aborts atomically on any spec error
        print(f"error: boot failed: {e}", file=sys.stderr)
        return 2

    bind = args.bind if args.bind is not None else project.bind
    port = args.port if args.port is not None else project.port
    try:
        server = make_server(bind, port, build_app(system), ThreadingWSGIServer, QuietHandler)
    except OSError as e:
        print(f"error: cannot bind {bind}:{port}: {e}", file=sys.stderr)
        return 2

    system.scheduler.start()
    print(f"listening on http://{bind}:{server.server_port}", flush=True)
    log.info("project %r: %d agents", project.name, len(project.agents))
    try:
        server.serve_forever(poll_interval=0.1)
    except KeyboardInterrupt:
        pass
    finally:
        system.scheduler.stop()
        server.server_close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
