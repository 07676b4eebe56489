"""Smoke test for the otbench Python module.

Build and install first:
    pip install -e crates/py --no-build-isolation
"""

import json
import math
import tempfile

import otbench


def check_planes():
    plane = otbench.ImagePlane.from_rows([[0.0, 0.5], [1.0, 0.25]])
    assert (plane.width, plane.height) == (2, 2)
    assert otbench.invert_channel(otbench.invert_channel(plane)) == plane
    smooth = otbench.gaussian_filter(plane, 3)
    assert all(0.0 <= v <= 1.0 for v in smooth.data())
    assert otbench.mean_filter(plane, 1) == plane
    assert max(otbench.normalize_max(plane).data()) == 1.0
    try:
        otbench.ImagePlane(2, 2, [0.0])
    except ValueError:
        pass
    else:
        raise AssertionError("length mismatch accepted")


def check_augment():
    plane = otbench.ImagePlane(3, 2, [i / 6 for i in range(6)])
    mask = otbench.BinaryMask(3, 2, [True, False, False, False, False, True])
    derived = otbench.augment_pair(plane, mask)
    assert [tag for tag, _, _ in derived] == ["rot90", "rot180", "rot270", "normalized", "hflip", "vflip"]
    assert all(m.count() == 2 for _, _, m in derived)


def check_metrics():
    a = otbench.BinaryMask(2, 2, [True, True, False, False])
    b = otbench.BinaryMask(2, 2, [True, False, True, False])
    assert otbench.dice_score(a, b) == 0.5
    assert math.isclose(otbench.iou_score(a, b), 1 / 3)
    truth = [1, 1, 1, 0, 1, 1, 0, 0, 0, 0]
    pred = [1, 1, 1, 1, 0, 0, 0, 0, 0, 0]
    s = otbench.classification_scores(pred, truth)
    assert (s["accuracy"], s["precision"], s["recall"]) == (0.7, 0.75, 0.6)
    mean, std = otbench.aggregate_folds([0.929, 0.951, 1.0, 1.0, 1.0])
    assert (round(mean, 3), round(std, 3)) == (0.976, 0.030)


def check_losses():
    loss, grad = otbench.soft_dice_loss([0.9, 0.2, 0.7], [True, False, True])
    jloss, _ = otbench.soft_jaccard_loss([0.9, 0.2, 0.7], [True, False, True])
    assert 0.0 <= loss <= jloss <= 1.0 and len(grad) == 3
    ce, g = otbench.scce_loss([2.0, -1.0, 0.5], 0)
    assert ce > 0 and abs(sum(g)) < 1e-12


def check_folds():
    labels = [0] * 6 + [1] * 4
    folds = otbench.stratified_kfold(labels, 5, 11)
    assert sorted(folds.count(f) for f in range(5)) == [2] * 5
    batches = otbench.balanced_batches([0] * 6 + [1] * 2, 4, 0)
    assert len(batches) == 3 and all(len(b) == 4 for b in batches)


def check_benchmark():
    with tempfile.TemporaryDirectory() as tmp:
        manifest = otbench.write_synth(tmp, count=30, size=32, healthy_fraction=0.4, seed=2)
        runs = [
            otbench.benchmark("segment", manifest, epochs=3, lr=0.01, batch_size=8, gaussian_k=5, threads=t)
            for t in (1, 2)
        ]
        assert runs[0] == runs[1]
        report = json.loads(runs[0])
        assert len(report["scores"]["folds"]) == 5
        oracle = otbench.benchmark("classify", manifest, model="oracle", format="csv")
        assert all(line.split(",")[2] == "1.000" for line in oracle.splitlines()[1:])
        img = otbench.load_rgb(f"{tmp}/images/synth_0029.png")
        pre = otbench.preprocess(img, gaussian_k=5)
        assert (pre.width, pre.height) == (32, 32)


if __name__ == "__main__":
    for check in (check_planes, check_augment, check_metrics, check_losses, check_folds, check_benchmark):
        check()
        print(f"{check.__name__}: ok")
    print("smoke test passed")
