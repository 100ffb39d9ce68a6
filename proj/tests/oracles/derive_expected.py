"""Independent brute-force oracles used to freeze expected values in the
C++ tests. Pure Python/numpy, written without reference to the C++ code.

The deterministic generator matches tests/lcg.hpp:
    state = (1664525 * state + 1013904223) mod 2^32, value = state >> 16
"""
import numpy as np


class Lcg:
    def __init__(self, seed):
        self.state = seed & 0xFFFFFFFF

    def next(self, modulus):
        self.state = (1664525 * self.state + 1013904223) & 0xFFFFFFFF
        return (self.state >> 16) % modulus


def conv2d(act, k, stride, pad):
    c_in, h, w = act.shape
    c_out, _, kr, kc = k.shape
    ho = (h + 2 * pad - kr) // stride + 1
    wo = (w + 2 * pad - kc) // stride + 1
    out = np.zeros((c_out, ho, wo), dtype=np.int64)
    for o in range(c_out):
        for i in range(ho):
            for j in range(wo):
                s = 0
                for c in range(c_in):
                    for y in range(kr):
                        for x in range(kc):
                            r, q = i * stride + y - pad, j * stride + x - pad
                            if 0 <= r < h and 0 <= q < w:
                                s += int(act[c, r, q]) * int(k[o, c, y, x])
                out[o, i, j] = s
    return out


def avgpool(act, window, stride, shift):
    c, h, w = act.shape
    ho, wo = (h - window) // stride + 1, (w - window) // stride + 1
    out = np.zeros((c, ho, wo), dtype=np.int64)
    for ch in range(c):
        for i in range(ho):
            for j in range(wo):
                out[ch, i, j] = int(act[ch, i*stride:i*stride+window, j*stride:j*stride+window].sum()) >> shift
    return out


def epi(v, relu, shift, T):
    if relu:
        v = np.maximum(v, 0)
    return np.clip(v >> shift, 0, 2**T - 1)


def main():
    # ref_conv2d: 1x4x4 input levels 0..7, one 3-bit 2x2 kernel.
    g = Lcg(7)
    act = np.array([g.next(8) for _ in range(16)]).reshape(1, 4, 4)
    k = np.array([g.next(8) - 4 for _ in range(4)]).reshape(1, 1, 2, 2)
    print("conv act", act.flatten().tolist())
    print("conv kernel", k.flatten().tolist())
    print("conv out", conv2d(act, k, 1, 0).flatten().tolist())

    # ref_avgpool: 4x4 ramp, window 2 stride 2.
    ramp = np.arange(16).reshape(1, 4, 4)
    print("pool out", avgpool(ramp, 2, 2, 2).flatten().tolist())

    # ref_linear: 8 -> 4.
    g = Lcg(11)
    x = np.array([g.next(8) for _ in range(8)])
    W = np.array([g.next(8) - 4 for _ in range(32)]).reshape(4, 8)
    print("linear x", x.tolist())
    print("linear W", W.flatten().tolist())
    print("linear out", [int(sum(int(W[o, i]) * int(x[i]) for i in range(8))) for o in range(4)])

    # LeNet-5 snapshot, T=3. Shifts are the smallest keeping every post-ReLU
    # accumulator of this one input within 2^T - 1 (conv 4/1/2, linear 3/3).
    T = 3
    g = Lcg(2024)
    inp = np.array([g.next(8) for _ in range(32 * 32)]).reshape(1, 32, 32)
    def w(*dims):
        n = int(np.prod(dims))
        return np.array([g.next(8) - 4 for _ in range(n)]).reshape(dims)
    k1, k2, k3 = w(6, 1, 5, 5), w(16, 6, 5, 5), w(120, 16, 5, 5)
    l1, l2, l3 = w(120, 120), w(84, 120), w(10, 84)
    def smallest_shift(v):
        m, s = max(int(np.maximum(v, 0).max()), 0), 0
        while (m >> s) > 2**T - 1:
            s += 1
        return s
    shifts = []
    def layer(v):
        shifts.append(smallest_shift(v))
        return epi(v, True, shifts[-1], T)
    a = layer(conv2d(inp, k1, 1, 0))
    a = avgpool(a, 2, 2, 2)
    a = layer(conv2d(a, k2, 1, 0))
    a = avgpool(a, 2, 2, 2)
    a = layer(conv2d(a, k3, 1, 0))
    v = a.reshape(-1)
    v = layer(l1 @ v)
    v = layer(l2 @ v)
    print("lenet shifts", shifts)
    logits = l3 @ v
    print("lenet logits", logits.tolist())

    # Buffer footprint scan for LeNet-5 at T=4 (bits).
    shapes2d = [(32, 32, 1), (28, 28, 6), (14, 14, 6), (10, 10, 16), (5, 5, 16), (1, 1, 120)]
    print("lenet buf2d bits", max(h * w_ * c for h, w_, c in shapes2d) * 4)
    print("lenet buf1d bits", max([120, 120, 84, 10]) * 4)


if __name__ == "__main__":
    main()
