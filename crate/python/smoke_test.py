"""Smoke test for the frontfill Python extension.

Builds the extension with cargo unless FRONTFILL_SO points at a built
library, copies it next to a temporary import path as ``frontfill.so`` and
exercises fill, quality, IO and the solver.
"""

import json
import os
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def built_library():
    so = os.environ.get("FRONTFILL_SO")
    if so:
        return pathlib.Path(so)
    subprocess.run(
        ["cargo", "build", "--release", "-p", "frontfill-py"], cwd=ROOT, check=True
    )
    target = pathlib.Path(os.environ.get("CARGO_TARGET_DIR", ROOT / "target"))
    return target / "release" / "libfrontfill_py.so"


def main():
    tmp = pathlib.Path(tempfile.mkdtemp())
    shutil.copy(built_library(), tmp / "frontfill.so")
    sys.path.insert(0, str(tmp))
    import frontfill

    cfg = frontfill.Config.load(ROOT / "configs" / "clover2d.json")
    assert cfg.dim == 2

    seq = frontfill.fill(cfg, target_np=2000, sequential=True)
    par = frontfill.fill(cfg, threads=2, n_s=4, target_np=2000)
    h = cfg.spacing()
    for s in (seq, par):
        assert len(s) > 1000, s
        assert frontfill.verify_min_spacing(s, h) == []
    print("fill:", seq, par)

    path = tmp / "points.csv.gz"
    seq.write(str(path))
    back = frontfill.read_points(str(path))
    assert back.positions() == seq.positions()

    report = frontfill.quality_report(cfg, seq, seed=3)
    assert report["gamma"] >= 1.0
    assert sum(report["histogram"]["counts"]) == len(seq) * report["k"]
    print("quality:", json.dumps({k: report[k] for k in ("mean_dbar", "std_dbar", "gamma")}))

    rows = [frontfill.solve_manufactured(n, sequential=True, seed=1) for n in (500, 2000)]
    assert rows[1]["e_inf"] < rows[0]["e_inf"]
    order = frontfill.convergence_order(rows)
    assert order > 1.0
    print("solve: e_inf", [r["e_inf"] for r in rows], "order", round(order, 2))

    try:
        frontfill.Config.from_json('{"dim": 2, "domain": {"kind": "clover"}, "spacing": {"kind": "constant", "h_s": "x"}}')
    except ValueError as e:
        assert "spacing.h_s" in str(e), e
    else:
        raise AssertionError("bad config accepted")
    try:
        frontfill.solve_manufactured(500, stencil=5)
    except ValueError:
        pass
    else:
        raise AssertionError("stencil of 5 accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
