import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

import pytest


class StubIntensityServer:
    """Local stand-in for an electricity-maps-style intensity service.

    ``responses`` maps zone id -> (status, body); unknown zones get 404.
    """

    def __init__(self):
        self.responses = {}
        self.hits = []
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):
                url = urlsplit(self.path)
                zone = parse_qs(url.query).get("zone", [""])[0]
                stub.hits.append((url.path, zone, dict(self.headers)))
                status, body = stub.responses.get(zone, (404, {"error": "unknown zone"}))
                data = body if isinstance(body, bytes) else json.dumps(body).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    @property
    def url(self):
        host, port = self.httpd.server_address
        return f"http://{host}:{port}"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def ci_server():
    with StubIntensityServer() as s:
        yield s


# ---------------------------------------------------------- acceptance lines

_criteria = {}


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None and (report.when == "call" or report.failed or report.skipped):
        number, title = mark.args
        ok = report.passed and report.when == "call"
        prev = _criteria.get(number, (True, title))[0]
        _criteria[number] = (prev and ok, title)
    return report


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        ok, title = _criteria[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title}")
