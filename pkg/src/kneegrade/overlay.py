"""Model-free overlay rendering: landmark stations, minimum-width station,
ROI boxes with tiers and subchondral band shading, all drawn from the audit
record of the extraction pass."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

POINT_R = 2

TIER_COLORS = {
    "mask_landmark": (80, 220, 100),
    "heuristic": (250, 200, 60),
    "fixed": (240, 90, 90),
}


def render_overlay(image_path, audit_path, out_path) -> Path:
    """Render the audit record onto the radiograph and save a PNG."""
    audit = json.loads(Path(audit_path).read_text())
    base = Image.open(image_path).convert("L")
    img = base.convert("RGB")
    w, h = img.size
    draw = ImageDraw.Draw(img, "RGBA")

    landmarks = audit.get("landmarks") or {}
    any_measured = False
    for comp, color in (("medial", (90, 170, 255)), ("lateral", (255, 150, 220))):
        lm = landmarks.get(comp)
        if not lm:
            continue
        any_measured = True
        xs = lm["x"]
        for i, x in enumerate(xs):
            fy, ty = lm["f_y"][i], lm["t_y"][i]
            draw.line([(x, fy), (x, ty)], fill=color + (160,), width=1)
            for y in (fy, ty):
                draw.ellipse([x - POINT_R, y - POINT_R, x + POINT_R, y + POINT_R],
                             fill=color)
        k = lm["min_station"]
        x, fy, ty = xs[k], lm["f_y"][k], lm["t_y"][k]
        draw.line([(x, fy), (x, ty)], fill=(255, 60, 60, 255), width=2)
        draw.text((min(x + 3, w - 40), (fy + ty) / 2),
                  f"{lm['widths'][k]:.1f}px", fill=(255, 60, 60))
        # shade the subchondral band under the tibial boundary
        band = [(xs[i], lm["t_y"][i]) for i in range(len(xs))]
        band += [(xs[i], min(lm["t_y"][i] + 28, h - 1)) for i in reversed(range(len(xs)))]
        draw.polygon(band, fill=(255, 255, 0, 50))

    for box in audit.get("roi_boxes", []):
        cx, cy = box["center"]
        half = box["size"] / 2
        color = TIER_COLORS.get(box["tier"], (200, 200, 200))
        draw.rectangle([cx - half, cy - half, cx + half, cy + half],
                       outline=color, width=1)
        draw.text((max(cx - half + 2, 2), max(cy - half + 2, 2)),
                  f"{box['site']}:{box['tier']}", fill=color)

    if not any_measured:
        draw.text((4, 4), "imputed (no usable mask)", fill=(255, 80, 80))

    out_path = Path(out_path)
    img.save(out_path)
    return out_path
