"""Regenerates coco_fixture.json: a 10-image detection fixture plus the AP/AR values
computed by pycocotools (class-agnostic, area range all, maxDets 100).

Run once; the output is committed and read by the C++ tests.
"""

import contextlib
import io
import json
import pathlib
import random

from pycocotools.coco import COCO
from pycocotools.cocoeval import COCOeval

OUT = pathlib.Path(__file__).with_name("coco_fixture.json")


def jitter(rng, box, amount):
    x0, y0, x1, y1 = box
    d = [round(rng.uniform(-amount, amount), 1) for _ in range(4)]
    return [x0 + d[0], y0 + d[1], max(x0 + d[0] + 2, x1 + d[2]), max(y0 + d[1] + 2, y1 + d[3])]


def build_images():
    rng = random.Random(7)
    images = []
    # perfect single detection
    images.append({"gt": [[10, 10, 110, 140]], "dets": [[10, 10, 110, 140, 0.9]]})
    # IoU exactly 0.6 against its gt: [0,0,100,100] vs [0,0,100,60] -> 6000/10000
    images.append({"gt": [[0, 0, 100, 100]], "dets": [[0, 0, 100, 60, 0.8]]})
    # duplicate detections on one gt, a miss, and a background false positive
    images.append({"gt": [[50, 50, 150, 150], [300, 40, 360, 200]],
                   "dets": [[52, 48, 149, 153, 0.95], [55, 55, 145, 150, 0.7], [400, 400, 450, 450, 0.6]]})
    # detections only, no ground truth
    images.append({"gt": [], "dets": [[20, 20, 80, 80, 0.85], [100, 100, 130, 160, 0.3]]})
    # ground truth only
    images.append({"gt": [[5, 5, 60, 90], [200, 200, 260, 330]], "dets": []})
    # tied scores across two gts
    images.append({"gt": [[0, 0, 50, 50], [60, 0, 110, 50]],
                   "dets": [[2, 1, 51, 50, 0.5], [58, 3, 111, 52, 0.5], [30, 0, 80, 50, 0.5]]})
    # random crowd of jittered detections
    for _ in range(4):
        gts, dets = [], []
        for _ in range(rng.randint(2, 5)):
            x0 = round(rng.uniform(0, 500), 1)
            y0 = round(rng.uniform(0, 300), 1)
            box = [x0, y0, x0 + round(rng.uniform(20, 150), 1), y0 + round(rng.uniform(20, 150), 1)]
            gts.append(box)
            for _ in range(rng.randint(0, 3)):
                dets.append(jitter(rng, box, rng.choice([2, 8, 20])) + [round(rng.uniform(0.05, 1.0), 3)])
        for _ in range(rng.randint(0, 2)):
            x0 = round(rng.uniform(0, 500), 1)
            y0 = round(rng.uniform(0, 300), 1)
            dets.append([x0, y0, x0 + 40, y0 + 30, round(rng.uniform(0.05, 1.0), 3)])
        images.append({"gt": gts, "dets": dets})
    return images


def reference(images):
    gt = {"images": [], "annotations": [], "categories": [{"id": 1, "name": "object"}]}
    dts = []
    ann_id = 1
    for i, img in enumerate(images, start=1):
        gt["images"].append({"id": i, "width": 1000, "height": 1000})
        for x0, y0, x1, y1 in img["gt"]:
            w, h = x1 - x0, y1 - y0
            gt["annotations"].append({"id": ann_id, "image_id": i, "category_id": 1, "bbox": [x0, y0, w, h],
                                      "area": w * h, "iscrowd": 0})
            ann_id += 1
        for x0, y0, x1, y1, s in img["dets"]:
            dts.append({"image_id": i, "category_id": 1, "bbox": [x0, y0, x1 - x0, y1 - y0], "score": s})
    with contextlib.redirect_stdout(io.StringIO()):
        coco_gt = COCO()
        coco_gt.dataset = gt
        coco_gt.createIndex()
        coco_dt = coco_gt.loadRes(dts)
        ev = COCOeval(coco_gt, coco_dt, "bbox")
        ev.params.useCats = 0
        ev.evaluate()
        ev.accumulate()
        ev.summarize()
    return float(ev.stats[0]), float(ev.stats[8])


def main():
    images = build_images()
    ap, ar = reference(images)
    lines = ",\n  ".join(json.dumps(img) for img in images)
    OUT.write_text(f'{{\n "ap_50_95": {ap!r},\n "ar_50_95": {ar!r},\n "images": [\n  {lines}\n ]\n}}\n')
    print(f"ap_50_95={ap:.10f} ar_50_95={ar:.10f}")


if __name__ == "__main__":
    main()
