"""Runs pb-server, pb-controller and pb-wpm as separate processes and checks
every document they exchange against docs/schemas."""

import argparse
import json
import os
import signal
import socket
import subprocess
import sys
import tempfile
import time
import urllib.error
import urllib.request
from pathlib import Path

import jsonschema
from referencing import Registry, Resource


def load_schemas(directory):
    resources = []
    for path in sorted(Path(directory).glob("*.schema.json")):
        doc = json.loads(path.read_text())
        jsonschema.Draft202012Validator.check_schema(doc)
        resources.append((doc["$id"], Resource.from_contents(doc)))
    registry = Registry().with_resources(resources)
    return lambda name: jsonschema.Draft202012Validator(
        registry.contents(name), registry=registry, format_checker=jsonschema.FormatChecker()
    )


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def call(method, url, body=None, token=None):
    data = None if body is None else json.dumps(body).encode()
    req = urllib.request.Request(url, data=data, method=method)
    req.add_header("Content-Type", "application/json")
    if token:
        req.add_header("Authorization", "Bearer " + token)
    try:
        with urllib.request.urlopen(req, timeout=10) as r:
            raw = r.read()
            return r.status, json.loads(raw) if raw else None
    except urllib.error.HTTPError as e:
        raw = e.read()
        return e.code, json.loads(raw) if raw else None


def wait_for(predicate, timeout, what):
    deadline = time.time() + timeout
    while time.time() < deadline:
        if predicate():
            return
        time.sleep(0.1)
    raise AssertionError("timed out waiting for " + what)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--bin-dir", required=True)
    ap.add_argument("--schemas", required=True)
    args = ap.parse_args()
    validator = load_schemas(args.schemas)
    bins = Path(args.bin_dir)
    checked = 0

    def check(schema, doc):
        nonlocal checked
        validator(schema).validate(doc)
        checked += 1

    # offline: request and locally simulated report
    wpm = [str(bins / "pb-wpm")]
    req = json.loads(subprocess.check_output(wpm + ["request", "--sites", "5", "--reps", "3"]))
    check("wpm_request.schema.json", req)
    # failed sites make the run exit 2 but the report is still complete
    sim = subprocess.run(
        wpm + ["--catalog-sites", "6", "--cert-errors", "1", "--timeouts", "1", "simulate", "--sites", "6", "--reps", "3", "--budget", "9",
               "--slot", "12"],
        capture_output=True, text=True,
    )
    report = json.loads(sim.stdout)
    check("wpm_report.schema.json", report)
    assert any(u["failed"] for u in report["result"]["urls"]), "injected failures should mark URLs failed"
    interact = json.loads(
        subprocess.check_output(wpm + ["simulate", "--urls", "site001.com", "--reps", "1", "--budget", "9", "--slot",
                                       "12", "--automation", "interact", "--visual"])
    )
    check("wpm_report.schema.json", interact)
    csv = subprocess.check_output(wpm + ["simulate", "--sites", "2", "--reps", "1", "--budget", "9", "--slot", "12",
                                         "--format", "csv"], text=True)
    assert len(csv.strip().splitlines()) == 3, csv
    bad = subprocess.run(wpm + ["request", "--sites", "2", "--reps", "0"], capture_output=True, text=True)
    assert bad.returncode != 0

    with tempfile.TemporaryDirectory() as tmp:
        tokens = Path(tmp) / "tokens.json"
        tokens.write_text(json.dumps({"tokens": [
            {"token": "root-t", "id": "root", "role": "administrator"},
            {"token": "alice-t", "id": "alice", "role": "experimenter"},
        ]}))
        sport, cport = free_port(), free_port()
        server = subprocess.Popen(
            [str(bins / "pb-server"), "--listen", f"127.0.0.1:{sport}", "--zone", "lab.test", "--refresh-period",
             "1s", "--tick", "0.1", "--state-dir", str(Path(tmp) / "state"), "--tokens", str(tokens)],
            stderr=subprocess.PIPE, text=True,
        )
        controller = subprocess.Popen(
            [str(bins / "pb-controller"), "--listen", f"127.0.0.1:{cport}", "--server", f"127.0.0.1:{sport}",
             "--node-id", "node1", "--token", "root-t", "--location", "lab", "--label", "wifi5", "--time-scale",
             "5"],
            stderr=subprocess.PIPE, text=True,
        )
        base, ctl = f"http://127.0.0.1:{sport}", f"http://127.0.0.1:{cport}"
        try:
            def online():
                try:
                    status, doc = call("GET", base + "/nodes?state=online", token="alice-t")
                except OSError:
                    return False
                return status == 200 and len(doc["nodes"]) == 1
            wait_for(online, 20, "node1 online")

            status, doc = call("GET", base + "/nodes/node1", token="alice-t")
            assert status == 200
            check("node.schema.json", doc)
            assert doc["dns_name"] == "node1.lab.test" and doc["devices"], doc
            status, doc = call("GET", base + "/nodes", token=None)
            assert status == 401
            check("error.schema.json", doc)
            status, doc = call("GET", base + "/jobs/job-999", token="alice-t")
            assert status == 404 and doc["error"]["code"] == "not_found"
            check("error.schema.json", doc)

            # provisioning job finished
            wait_for(lambda: all(j["state"] == "succeeded" for j in call("GET", base + "/jobs", token="root-t")[1]["jobs"]),
                     20, "provisioning")

            # WPM through the whole chain
            out = subprocess.run(
                wpm + ["submit", "--server", f"127.0.0.1:{sport}", "--token", "alice-t", "--sites", "2", "--reps",
                       "1", "--budget", "9", "--slot", "12", "--wait", "--poll", "0.2"],
                capture_output=True, text=True, timeout=120,
            )
            assert out.returncode == 0, out.stderr
            remote = json.loads(out.stdout)
            check("wpm_report.schema.json", remote)
            assert remote["result"]["ok"]

            status, doc = call("GET", base + "/jobs", token="root-t")
            for job in doc["jobs"]:
                check("job.schema.json", job)
                check("job_spec.schema.json", job["spec"])
            bad_spec = {"steps": []}
            status, doc = call("POST", base + "/jobs", bad_spec, token="alice-t")
            assert status == 400
            check("error.schema.json", doc)

            # console surface on the controller
            status, doc = call("GET", ctl + "/frames?device_id=dev1")
            assert status == 503
            check("error.schema.json", doc)
            status, _ = call("POST", ctl + "/device_mirroring", {"device_id": "dev1", "on": True})
            assert status == 200
            status, frame = call("GET", ctl + "/frames?device_id=dev1")
            assert status == 200
            check("frame.schema.json", frame)
            status, opened = call("POST", ctl + "/input/sessions", {"device_id": "dev1"})
            assert status == 201
            batch = {"session_id": opened["session_id"], "live": True, "events": [
                {"t": 0, "kind": "mouse_down", "x": 100, "y": 200, "view": [360, 640]},
                {"t": 70, "kind": "mouse_up", "x": 100, "y": 200, "view": [360, 640]},
                {"t": 500, "kind": "key_down", "key": "a"},
                {"t": 560, "kind": "key_up", "key": "a"},
            ]}
            check("input_batch.schema.json", batch)
            status, doc = call("POST", ctl + "/input", batch)
            assert status == 200 and doc["count"] == 4, doc
            status, later = call("GET", ctl + f"/frames?device_id=dev1&after={frame['seq']}")
            assert status == 200 and later["seq"] > frame["seq"]
            status, _ = call("POST", ctl + "/cleanup", {})
            assert status == 200
            status, doc = call("GET", ctl + "/status")
            assert doc["safe"] is True
        finally:
            for p in (controller, server):
                p.send_signal(signal.SIGTERM)
            codes = [p.wait(timeout=10) for p in (controller, server)]
        assert codes == [0, 0], (codes, server.stderr.read(), controller.stderr.read())
        assert (Path(tmp) / "state" / "registry.json").exists()
        assert (Path(tmp) / "state" / "events.jsonl").exists()

    print(f"ok: {checked} documents valid")


if __name__ == "__main__":
    sys.exit(main())
