from ._core import (
    auprc,
    coco_ap_ar,
    crop_tier,
    detection_prompts,
    hybrid_prompt,
    iou,
    match,
    nms,
    pearson,
    run_cli,
    single_concept_prompt,
    spearman,
)

__all__ = [
    "auprc",
    "coco_ap_ar",
    "crop_tier",
    "detection_prompts",
    "hybrid_prompt",
    "iou",
    "match",
    "nms",
    "pearson",
    "run_cli",
    "single_concept_prompt",
    "spearman",
]
