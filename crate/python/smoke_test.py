"""Smoke test for the mibench Python extension.

Build it with `maturin develop -m crates/python/Cargo.toml`, or with
`cargo build --release -p mibench-python --features extension-module` and copy
target/release/libmibench_py.so next to this script as mibench_py.so.
"""

import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import mibench_py as mb


def main():
    ids = mb.task_ids()
    assert len(ids) == 40, len(ids)
    assert len(mb.task_ids("student")) > 0

    task = mb.Task("1v1-normal-0.75")
    assert math.isclose(task.mi_true, -0.5 * math.log(1 - 0.75**2), rel_tol=1e-12)
    x, y = task.sample(2000, seed_index=1)
    assert len(x) == len(y) == 2000 and len(x[0]) == 1
    assert task.sample(5, seed_index=1) == task.sample(5, seed_index=1)

    value, flags = mb.estimate("cca", x, y)
    assert abs(value - task.mi_true) < 0.05, value
    assert flags == []
    value, _ = mb.estimate("ksg-10", x, y)
    assert abs(value - task.mi_true) < 0.08, value
    value, flags = mb.estimate("ksg", x[:5], y[:5])
    assert math.isnan(value) and "below-minimum-size" in flags

    assert math.isclose(mb.additive_noise_mi(0.75), 1 / 3, rel_tol=1e-12)
    assert math.isclose(mb.gaussian_mi([[1, 0.75], [0.75, 1]], 1, 1), task.mi_true, rel_tol=1e-12)
    assert mb.student_correction(1.0, 1, 1) > 0

    records = mb.run_benchmark(["mn-2pair-3x3"], ["cca"], seeds=2, n_points=[500])
    assert len(records) == 2 and all(not r.flags for r in records)

    try:
        mb.Task("no-such-task")
    except KeyError:
        pass
    else:
        raise AssertionError("unknown task accepted")
    print("python smoke test: ok")


if __name__ == "__main__":
    main()
