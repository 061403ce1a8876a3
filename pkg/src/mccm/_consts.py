"""Tables shared by both kernel backends.

Ziggurat layers for the standard normal density (256 layers), built with
the Marsaglia-Tsang recursion from the tail start ``ZIG_R`` and the common
layer area ``ZIG_V``.
"""

import math

import numpy as np

ZIG_LAYERS = 256
ZIG_R = 3.6541528853610088
ZIG_V = 4.92867323399e-3


def _tables():
    f = lambda x: math.exp(-0.5 * x * x)
    x = [0.0] * (ZIG_LAYERS + 1)
    x[0] = ZIG_V / f(ZIG_R)
    x[1] = ZIG_R
    for i in range(1, ZIG_LAYERS - 1):
        y = min(ZIG_V / x[i] + f(x[i]), 1.0)
        x[i + 1] = math.sqrt(-2.0 * math.log(y))
    x[ZIG_LAYERS] = 0.0
    xs = np.array(x)
    return xs, np.exp(-0.5 * xs * xs)


ZIG_X, ZIG_F = _tables()
