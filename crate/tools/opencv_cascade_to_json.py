#!/usr/bin/env python3
"""Convert an OpenCV stump-based Haar cascade XML file into the JSON cascade
format read by `depscreen::imaging::CascadeModel`.

Usage: opencv_cascade_to_json.py INPUT.xml OUTPUT.json

Only upright (non-tilted) stump cascades are supported.
"""
import json
import sys
import xml.etree.ElementTree as ET


def main(src, dst):
    root = ET.parse(src).getroot()
    cascade = root.find("cascade")
    if cascade.findtext("featureType").strip() != "HAAR":
        raise SystemExit("only HAAR cascades are supported")
    width = int(cascade.findtext("width"))
    height = int(cascade.findtext("height"))

    features = []
    for feat in cascade.find("features"):
        if int(feat.findtext("tilted", "0")) != 0:
            raise SystemExit("tilted features are not supported")
        rects = []
        for r in feat.find("rects"):
            x, y, w, h, weight = r.text.split()
            rects.append([int(x), int(y), int(w), int(h), float(weight)])
        features.append(rects)

    stages = []
    for stage in cascade.find("stages"):
        weak = []
        for wc in stage.find("weakClassifiers"):
            nodes = wc.findtext("internalNodes").split()
            leaves = wc.findtext("leafValues").split()
            if len(nodes) != 4 or len(leaves) != 2:
                raise SystemExit("only stump weak classifiers are supported")
            weak.append({
                "rects": features[int(nodes[2])],
                "threshold": float(nodes[3]),
                "left": float(leaves[0]),
                "right": float(leaves[1]),
            })
        stages.append({"threshold": float(stage.findtext("stageThreshold")), "weak": weak})

    # One weak classifier per line keeps loader error positions readable.
    with open(dst, "w") as fh:
        fh.write('{"window": [%d, %d], "stages": [\n' % (width, height))
        for si, stage in enumerate(stages):
            fh.write(' {"threshold": %s, "weak": [\n' % json.dumps(stage["threshold"]))
            lines = [json.dumps(w, separators=(",", ":")) for w in stage["weak"]]
            fh.write(",\n".join("  " + l for l in lines))
            fh.write("\n ]}%s\n" % ("," if si + 1 < len(stages) else ""))
        fh.write("]}\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
