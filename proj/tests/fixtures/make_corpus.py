#!/usr/bin/env python3
# Copyright 2026 The uiinstruct Authors
# SPDX-License-Identifier: Apache-2.0
"""Regenerates tests/fixtures/corpus50: synthetic screenshots, detections
and transitions for end-to-end tests. Output is deterministic."""

import json
import random
from pathlib import Path

from PIL import Image, ImageDraw

WIDTH, HEIGHT = 375, 812
SCREENS = 50
OUT = Path(__file__).resolve().parent / "corpus50"

APPS = ["Recipes", "Weather", "Podcasts", "Bank", "Fitness", "Notes", "Maps", "Music", "Mail", "Shop"]
ACTIONS = ["Continue", "Save", "Share", "Open", "Details", "Play", "Subscribe", "Edit", "Next", "Done"]
ICONS = ["back", "more", "close", "search", "settings", "star", "play", "share"]


def screen(i, rng):
    app = APPS[i % len(APPS)]
    els = []

    def add(label, box, text=None, icon=None, conf=None):
        d = {"label": label, "box": list(box)}
        if text is not None:
            d["text"] = text
        if icon is not None:
            d["iconType"] = icon
        if conf is not None:
            d["confidence"] = conf
        els.append(d)

    add("icon", (8, 40, 40, 72), icon="back", conf=0.97)
    add("text", (120, 44, 255, 70), text=f"{app} {i:02d}", conf=0.99)
    add("icon", (335, 40, 367, 72), icon=ICONS[i % len(ICONS)], conf=0.91)
    add("picture", (0, 90, 375, 300), conf=0.88)
    add("text", (16, 316, 359, 360), text=f"Item {i} summary line", conf=0.95)
    y = 380
    for k in range(3):
        label = ACTIONS[(i + k) % len(ACTIONS)]
        add("button", (16, y, 359, y + 56), text=f"{label} {i}-{k}", conf=round(0.6 + 0.1 * k, 2))
        y += 70
    kind = i % 4
    if kind == 0:
        add("toggle", (300, 600, 359, 630), conf=0.8)
        add("text", (16, 600, 280, 630), text="Notifications")
    elif kind == 1:
        add("text_field", (16, 600, 359, 648), text="Search", conf=0.9)
    elif kind == 2:
        add("segmented_control", (16, 600, 359, 640), text="Day, Week, Month", conf=0.85)
    else:
        add("slider", (16, 610, 359, 630), conf=0.7)
        add("checkbox", (16, 650, 44, 678), conf=0.75)
    # Below the default threshold; filtered out at load.
    add("icon", (180, 700, 196, 716), icon="info", conf=0.2)
    add("tab", (0, 740, 125, 812), text="Home")
    add("tab", (125, 740, 250, 812), text="Browse")
    add("tab", (250, 740, 375, 812), text="Profile")
    return els


def draw(els, rng):
    img = Image.new("RGB", (WIDTH, HEIGHT), (245, 245, 247))
    d = ImageDraw.Draw(img)
    for e in els:
        x1, y1, x2, y2 = e["box"]
        color = tuple(rng.randrange(40, 220) for _ in range(3))
        d.rectangle([x1, y1, x2 - 1, y2 - 1], outline=color, fill=None if e["label"] == "text" else color)
    return img


def main():
    rng = random.Random(20231015)
    OUT.mkdir(parents=True, exist_ok=True)
    for i in range(SCREENS):
        sid = f"s{i:03d}"
        els = screen(i, rng)
        draw(els, rng).save(OUT / f"{sid}.png", optimize=True)
        with open(OUT / f"{sid}.detections", "w") as f:
            for e in els:
                f.write(json.dumps(e) + "\n")
    with open(OUT / "transitions.jsonl", "w") as f:
        for i in range(0, SCREENS - 1, 2):
            # Taps land inside the first button of the source screen.
            f.write(json.dumps({"from": f"s{i:03d}", "to": f"s{i + 1:03d}", "tap": [100 + i, 400]}) + "\n")
        # A tap on empty space resolves to nothing and is counted as unresolved.
        f.write(json.dumps({"from": "s001", "to": "s002", "tap": [370, 720]}) + "\n")


if __name__ == "__main__":
    main()
