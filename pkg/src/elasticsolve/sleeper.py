"""Deterministic stand-in solver used to exercise the orchestrator.

Usage: ``python sleeper.py INSTANCE SEED [--marker TOKEN]``

``INSTANCE`` is a JSON file such as::

    {"durations": {"0": 0.2, "1": 2.0}, "default": 1.0,
     "exit_code": 10, "fail_seeds": [3], "fail_code": 1, "mode": "sleep"}

The process waits ``durations[seed]`` seconds (``default`` if absent),
sleeping or, with ``"mode": "burn"``, spinning on the CPU, and then exits
with ``exit_code`` (``fail_code`` for seeds in ``fail_seeds``).

Kept free of package imports so the interpreter starts fast.
"""
import json
import sys
import time


def main(argv):
    instance, seed = argv[0], argv[1]
    with open(instance) as fh:
        spec = json.load(fh)
    duration = float(spec.get("durations", {}).get(str(seed), spec.get("default", 1.0)))
    deadline = time.monotonic() + duration
    if spec.get("mode", "sleep") == "burn":
        x = 0
        while time.monotonic() < deadline:
            x += 1
    else:
        time.sleep(duration)
    if int(seed) in spec.get("fail_seeds", []):
        return int(spec.get("fail_code", 1))
    return int(spec.get("exit_code", 10))


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
