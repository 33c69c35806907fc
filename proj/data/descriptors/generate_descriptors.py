#!/usr/bin/env python3
# Copyright 2026 The adact Authors
# SPDX-License-Identifier: Apache-2.0
"""Writes weight-free descriptors for ResNet-18, MobileNetV2 and VGG-16.

Inputs are 3x224x224. Batch-norm is folded into the preceding convolution's
bias, so it does not appear as a layer. Every ReLU/ReLU6 becomes aa_relu.
"""

import json
import pathlib


class Builder:
    def __init__(self, name):
        self.name = name
        self.layers = []
        self.count = {}

    def _id(self, prefix):
        self.count[prefix] = self.count.get(prefix, 0) + 1
        return f"{prefix}{self.count[prefix]}"

    def add(self, kind, prefix, geometry=None, input=None, lid=None):
        layer = {"id": lid or self._id(prefix), "kind": kind}
        if input is not None:
            layer["input"] = input
        if geometry:
            layer["geometry"] = geometry
        self.layers.append(layer)
        return layer["id"]

    def conv(self, out, k, stride=1, pad=0, input=None, add=None, lid=None):
        g = {"out_channels": out, "kernel": k, "stride": stride, "padding": pad}
        if add:
            g["add"] = add
        return self.add("conv2d", "conv", g, input, lid)

    def dw(self, k, stride, pad):
        return self.add("depthwise_conv2d", "dw", {"kernel": k, "stride": stride, "padding": pad})

    def relu(self):
        return self.add("aa_relu", "relu")

    def head(self, pool_kernel, classes=1000):
        self.add("avgpool", "pool", {"kernel": pool_kernel})
        self.add("flatten", "flatten")
        self.add("dense", "fc", {"out_features": classes})
        self.add("softmax", "softmax")

    def doc(self):
        return {"name": self.name, "input_shape": [3, 224, 224], "class_count": 1000, "layers": self.layers}


def resnet18():
    b = Builder("resnet18")
    b.conv(64, 7, 2, 3)
    b.relu()
    x = b.add("maxpool", "maxpool", {"kernel": 3, "stride": 2, "padding": 1})
    cin = 64
    for stage, width in enumerate((64, 128, 256, 512)):
        for block in range(2):
            stride = 2 if stage > 0 and block == 0 else 1
            shortcut = x
            if stride != 1 or cin != width:
                shortcut = b.conv(width, 1, stride, 0, input=x, lid=f"down{stage + 1}")
            b.conv(width, 3, stride, 1, input=x)
            b.relu()
            b.conv(width, 3, 1, 1, add=shortcut)
            x = b.relu()
            cin = width
    b.head(7)
    return b.doc()


def mobilenet_v2():
    b = Builder("mobilenet_v2")
    b.conv(32, 3, 2, 1)
    x = b.relu()
    cin = 32
    for t, c, n, s in ((1, 16, 1, 1), (6, 24, 2, 2), (6, 32, 3, 2), (6, 64, 4, 2), (6, 96, 3, 1), (6, 160, 3, 2),
                       (6, 320, 1, 1)):
        for i in range(n):
            stride = s if i == 0 else 1
            if t != 1:
                b.conv(cin * t, 1)
                b.relu()
            b.dw(3, stride, 1)
            b.relu()
            residual = x if stride == 1 and cin == c else None
            x = b.conv(c, 1, add=residual)
            cin = c
    b.conv(1280, 1)
    b.relu()
    b.head(7)
    return b.doc()


def vgg16():
    b = Builder("vgg16")
    for item in (64, 64, "M", 128, 128, "M", 256, 256, 256, "M", 512, 512, 512, "M", 512, 512, 512, "M"):
        if item == "M":
            b.add("maxpool", "maxpool", {"kernel": 2, "stride": 2})
        else:
            b.conv(item, 3, 1, 1)
            b.relu()
    b.add("flatten", "flatten")
    b.add("dense", "fc", {"out_features": 4096})
    b.relu()
    b.add("dense", "fc", {"out_features": 4096})
    b.relu()
    b.add("dense", "fc", {"out_features": 1000})
    b.add("softmax", "softmax")
    return b.doc()


def main():
    here = pathlib.Path(__file__).parent
    for fn in (resnet18, mobilenet_v2, vgg16):
        doc = fn()
        (here / f"{doc['name']}.json").write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()
