"""Runs the fairsel CLI on a small configuration and validates every JSON it
writes against the schemas in schemas/."""

import json
import pathlib
import shutil
import subprocess
import sys

import jsonschema


def main():
    cli, schema_dir, work = (pathlib.Path(a) for a in sys.argv[1:4])
    shutil.rmtree(work, ignore_errors=True)
    work.mkdir(parents=True)
    schemas = {p.name.split(".")[0]: json.loads(p.read_text()) for p in schema_dir.glob("*.schema.json")}
    checked = 0

    def check(kind, instance, where):
        nonlocal checked
        jsonschema.validate(instance, schemas[kind], cls=jsonschema.Draft202012Validator)
        checked += 1

    def run(*args, expect_ok=True):
        proc = subprocess.run([str(cli), *map(str, args)], capture_output=True, text=True)
        if expect_ok and proc.returncode != 0:
            sys.exit(f"fairsel {' '.join(map(str, args))} failed: {proc.stderr}")
        return proc

    config = {
        "dataset": {"synthetic": {"n": 3000}},
        "split": {"trial_count": 2},
        "methods": ["T", "M", "ERM"],
        "coteach": {"train": {"epochs": 2}},
        "sweep": {"nu": [1e-3, 1e3], "n_select": [0.6]},
        "output": {"trace": "all", "save_models": True},
    }
    config_path = work / "config.json"
    config_path.write_text(json.dumps(config))
    check("config", config, config_path)

    run("synth", "--config", config_path, work / "data.csv")
    run("run", "--config", config_path, "--out", work / "run")
    run("sweep", "--config", config_path, "--out", work / "sweep")
    run("report", work / "run")

    for path in sorted(work.rglob("*.json")):
        name = path.name
        data = json.loads(path.read_text())
        if path.parent.name == "models":
            check("checkpoint", data, path)
        elif name.startswith("trial_"):
            check("trial", data, path)
        elif name in ("aggregate.json", "report.json"):
            check("aggregate", data, path)
        elif name == "sweep.json":
            check("sweep", data, path)
        elif name == "config.json":
            check("config", data, path)
        elif path.parent.name == "models":
            check("checkpoint", data, path)
        else:
            sys.exit(f"no schema for {path}")
    for path in sorted(work.rglob("trace.jsonl")):
        for line in path.read_text().splitlines():
            check("trace", json.loads(line), path)

    bad = run("run", "--nu", "-1", expect_ok=False)
    if bad.returncode == 0:
        sys.exit("invalid configuration was accepted")
    check("error", json.loads(bad.stderr.strip().splitlines()[-1]), "stderr")
    print(f"validated {checked} documents")


if __name__ == "__main__":
    main()
