"""Smoke test for the nearfield_hcb extension module.

Build first, e.g. `maturin develop -m crates/python/Cargo.toml`, then run
`python python/smoke_test.py`.
"""

import json
import math
import os
import tempfile

import nearfield_hcb as nf


def main():
    cfg = nf.ArrayConfig(32, 40e9)
    assert cfg.n_elements == 32
    assert math.isclose(cfg.max_curvature, 1.0 / cfg.fresnel_distance)

    e = nf.fresnel(1.0)
    assert abs(e.real - 0.7798934003768228) < 1e-12
    assert abs(e.imag - 0.4382591473903548) < 1e-12

    lower = nf.LowerCodebook.build(cfg, 0.64)
    assert len(lower) == lower.n_angles * lower.n_rings
    assert lower.worst_corner_gain() >= 0.64

    w = lower.codeword(0, 3)
    assert len(w) == 32 and abs(w.norm() - 1.0) < 1e-12
    theta, r = lower.steering_point(0, 3)
    assert r is None
    assert abs(w.gain(cfg, theta) - 1.0) < 1e-12

    moved = nf.rotate(cfg, w, 0.1)
    assert abs(moved.gain(cfg, theta + 0.1) - 1.0) < 1e-12
    focused = nf.relocate(cfg, w, 2.0)
    assert abs(focused.gain(cfg, theta, 2.0 * (1.0 - theta * theta)) - 1.0) < 1e-9

    hier = nf.HierarchicalCodebook.build(lower, int(math.log2(lower.n_angles)), "deact")
    assert hier.ring_counts()[-1] == lower.n_rings
    assert len(hier.children(0, 0)) > 0

    h = nf.los_channel(cfg, 0.3, 1.0)
    assert len(h) == 32 and isinstance(h[0], complex)
    ex = lower.search(h)
    hi = hier.search(h)
    assert ex.steps == len(lower)
    assert hi.steps < ex.steps
    assert hi.achieved_gain <= ex.achieved_gain + 1e-12
    assert len(hi.trace) == hier.n_levels

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "h.nfcb")
        hier.save(path)
        back = nf.load_codebook(path)
        assert isinstance(back, nf.HierarchicalCodebook)
        assert back.content_hash() == hier.content_hash()
        try:
            nf.load_codebook(os.path.join(d, "missing"))
        except OSError:
            pass
        else:
            raise AssertionError("missing file should raise")

    try:
        nf.ArrayConfig(0, 40e9)
    except ValueError:
        pass
    else:
        raise AssertionError("empty array should raise")

    config = json.dumps({"n_elements": 32, "n_users": 50, "seed": 3})
    one = nf.run_experiment(config, "search", threads=1)
    four = nf.run_experiment(config, "search", threads=4)
    assert one == four
    report = json.loads(one)
    assert [c["name"] for c in report["codebooks"]] == ["exhaustive", "deact", "bmwss", "quadric"]

    print("smoke test passed")


if __name__ == "__main__":
    main()
