#!/usr/bin/env python3
"""Export torchvision VGG-16 conv weights up to relu4_1 as a DMT tensor archive.

The archive is what `FeatureExtractor::load_vgg16` reads (`vgg_weights` in a
run config). Layout: magic b"DMTCKPT\\0", uint32 LE version, uint64 LE header
length, JSON header, then the little-endian float32 tensor blob.
"""

import argparse
import json
import struct

import torch
import torchvision

MAGIC = b"DMTCKPT\0"
VERSION = 1
# Conv layers of vgg16().features that precede relu4_1.
LAYERS = (0, 2, 5, 7, 10, 12, 14, 17)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output archive path")
    parser.add_argument(
        "--random",
        action="store_true",
        help="skip the ImageNet download and export an untrained network (for offline plumbing tests)",
    )
    args = parser.parse_args()

    weights = None if args.random else torchvision.models.VGG16_Weights.IMAGENET1K_V1
    features = torchvision.models.vgg16(weights=weights).features

    entries, blobs, offset = [], [], 0
    for index in LAYERS:
        conv = features[index]
        for kind in ("weight", "bias"):
            tensor = getattr(conv, kind).detach().to(torch.float32).contiguous()
            data = tensor.numpy().astype("<f4").tobytes()
            entries.append(
                {
                    "name": f"features.{index}.{kind}",
                    "dtype": "f32",
                    "shape": list(tensor.shape),
                    "offset": offset,
                    "nbytes": len(data),
                }
            )
            blobs.append(data)
            offset += len(data)

    meta = {"kind": "vgg16-features", "layer": "relu4_1", "pretrained": not args.random}
    header = json.dumps({"meta": meta, "tensors": entries}).encode("utf-8")
    with open(args.out, "wb") as out:
        out.write(MAGIC)
        out.write(struct.pack("<IQ", VERSION, len(header)))
        out.write(header)
        for data in blobs:
            out.write(data)
    print(f"wrote {len(entries)} tensors ({offset} bytes) to {args.out}")


if __name__ == "__main__":
    main()
