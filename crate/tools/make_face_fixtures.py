#!/usr/bin/env python3
"""Regenerate the annotated face-detection fixture corpus.

Faces are cropped from the public-domain astronaut portrait shipped with
scikit-image and pasted onto public-domain backgrounds from the same data
set. Annotations are the pasted face boxes, so the ground truth is exact.

Usage: make_face_fixtures.py OUTPUT_DIR
"""
import json
import os
import sys

import cv2
import numpy as np
import skimage.data as data

WIDTH, HEIGHT = 240, 180
# Face box inside the astronaut portrait, and the crop pasted around it.
FACE = (175, 66, 97, 97)
CROP = (160, 50, 127, 127)


def backgrounds():
    out = []
    for name in ["brick", "grass", "gravel", "camera", "coins"]:
        g = getattr(data, name)()
        out.append(np.dstack([g, g, g]))
    for name in ["coffee", "chelsea", "rocket", "hubble_deep_field"]:
        out.append(getattr(data, name)())
    return out


def crop_background(rng, bg):
    h, w = bg.shape[:2]
    scale = max(HEIGHT / h, WIDTH / w) * rng.uniform(1.0, 1.6)
    bg = cv2.resize(bg, (int(round(w * scale)), int(round(h * scale))), interpolation=cv2.INTER_AREA)
    h, w = bg.shape[:2]
    y = rng.integers(0, h - HEIGHT + 1)
    x = rng.integers(0, w - WIDTH + 1)
    return bg[y:y + HEIGHT, x:x + WIDTH].copy()


def paste_face(rng, canvas, portrait, face_px, taken):
    cx, cy, cw, ch = CROP
    fx, fy, fw, fh = FACE
    scale = face_px / fw
    size = int(round(cw * scale))
    patch = cv2.resize(portrait[cy:cy + ch, cx:cx + cw], (size, size), interpolation=cv2.INTER_AREA)
    if rng.random() < 0.5:
        patch = patch[:, ::-1]
        off_x = size - int(round((fx - cx + fw) * scale))
    else:
        off_x = int(round((fx - cx) * scale))
    off_y = int(round((fy - cy) * scale))
    gain = rng.uniform(0.75, 1.2)
    patch = np.clip(patch.astype(np.float64) * gain, 0, 255).astype(np.uint8)
    for _ in range(200):
        x = int(rng.integers(0, WIDTH - size + 1))
        y = int(rng.integers(0, HEIGHT - size + 1))
        if all(x + size <= tx or tx + ts <= x or y + size <= ty or ty + ts <= y for tx, ty, ts in taken):
            canvas[y:y + size, x:x + size] = patch
            taken.append((x, y, size))
            return [x + off_x, y + off_y, int(round(fw * scale)), int(round(fh * scale))]
    raise RuntimeError("no room for face")


def main(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(20160201)
    portrait = data.astronaut()
    bgs = backgrounds()
    records = []
    plan = [0] * 16 + [1] * 24 + [2] * 8
    rng.shuffle(plan)
    for i, n_faces in enumerate(plan):
        canvas = crop_background(rng, bgs[i % len(bgs)])
        taken, boxes = [], []
        for _ in range(n_faces):
            face_px = int(rng.integers(30, 60 if n_faces == 2 else 90))
            boxes.append(paste_face(rng, canvas, portrait, face_px, taken))
        ext = "png" if i % 2 == 0 else "jpg"
        name = "face_%02d.%s" % (i, ext)
        bgr = cv2.cvtColor(canvas, cv2.COLOR_RGB2BGR)
        if ext == "png":
            cv2.imwrite(os.path.join(out_dir, name), bgr)
        else:
            cv2.imwrite(os.path.join(out_dir, name), bgr, [cv2.IMWRITE_JPEG_QUALITY, 92])
        group = "depressed" if i % 4 in (0, 1) else "healthy"
        records.append({"file": name, "group": group, "face_count": len(boxes), "faces": boxes})

    # Single-face portrait: the astronaut downscaled to half size.
    small = cv2.resize(portrait, (256, 256), interpolation=cv2.INTER_AREA)
    cv2.imwrite(os.path.join(out_dir, "portrait.png"), cv2.cvtColor(small, cv2.COLOR_RGB2BGR))
    fx, fy, fw, fh = FACE
    portrait_rec = {"file": "portrait.png", "group": "healthy", "face_count": 1,
                    "faces": [[fx // 2, fy // 2, fw // 2, fh // 2]]}

    with open(os.path.join(out_dir, "annotations.json"), "w") as fh:
        json.dump({"corpus": records, "portrait": portrait_rec}, fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    main(sys.argv[1])
