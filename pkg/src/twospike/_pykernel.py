"""Pure-Python fallback for the compiled kernels in ``_ckernel.pyx``.

Operation-for-operation transliteration: same xoshiro256** stream, same
polar normal method, same pair selection. Slow (about a microsecond per
proposal) and only meant for small problems or machines without a compiler.
"""

import math

import numpy as np

RENORM_EVERY = 10000
_MASK = (1 << 64) - 1
_INV53 = 1.0 / 9007199254740992.0


class _Xoshiro:
    __slots__ = ("s0", "s1", "s2", "s3")

    def __init__(self, words):
        self.s0, self.s1, self.s2, self.s3 = (int(w) for w in words)

    def u64(self):
        s0, s1, s2, s3 = self.s0, self.s1, self.s2, self.s3
        x = (s1 * 5) & _MASK
        result = ((((x << 7) | (x >> 57)) & _MASK) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & _MASK
        self.s0, self.s1, self.s2, self.s3 = s0, s1, s2, s3
        return result

    def double(self):
        return (self.u64() >> 11) * _INV53

    def words(self):
        return [self.s0, self.s1, self.s2, self.s3]


def _normal(gen, spare):
    if spare[0] != 0.0:
        spare[0] = 0.0
        return spare[1]
    while True:
        u = 2.0 * gen.double() - 1.0
        v = 2.0 * gen.double() - 1.0
        q = u * u + v * v
        if 0.0 < q < 1.0:
            break
    m = math.sqrt(-2.0 * math.log(q) / q)
    spare[0] = 1.0
    spare[1] = v * m
    return u * m


def run_sweeps(eta, lam, beta, sigma, class_cdf, n_top, props_per_sweep, sweeps,
               rng_state, spare, energy_out, accepts, proposals, counter, esum):
    n = eta.shape[0]
    m = n - n_top
    half_nb = 0.5 * n * beta
    e = float(esum[0])
    gen = _Xoshiro(rng_state)
    sp = [float(spare[0]), float(spare[1])]
    x_eta = [float(v) for v in eta]
    x_lam = [float(v) for v in lam]
    sig = [float(v) for v in sigma]
    cdf0, cdf1 = float(class_cdf[0]), float(class_cdf[1])
    acc = [0, 0, 0]
    prop = [0, 0, 0]
    cnt = int(counter[0])
    for sw in range(sweeps):
        for _ in range(props_per_sweep):
            u = gen.double()
            if u < cdf0:
                cls = 0
                i = int(gen.double() * n_top)
                j = int(gen.double() * (n_top - 1))
                if j >= i:
                    j += 1
            elif u < cdf1:
                cls = 1
                i = int(gen.double() * n_top)
                j = n_top + int(gen.double() * m)
            else:
                cls = 2
                i = n_top + int(gen.double() * m)
                j = n_top + int(gen.double() * (m - 1))
                if j >= i:
                    j += 1
            phi = sig[cls] * _normal(gen, sp)
            c = math.cos(phi)
            sn = math.sin(phi)
            ei = x_eta[i]
            ej = x_eta[j]
            ni = c * ei - sn * ej
            nj = sn * ei + c * ej
            de = x_lam[i] * (ni * ni - ei * ei) + x_lam[j] * (nj * nj - ej * ej)
            x = half_nb * de
            prop[cls] += 1
            if x >= 0.0 or gen.double() < math.exp(x):
                x_eta[i] = ni
                x_eta[j] = nj
                e += de
                acc[cls] += 1
            cnt += 1
            if cnt >= RENORM_EVERY:
                cnt = 0
                nrm = math.sqrt(sum(v * v for v in x_eta))
                x_eta = [v / nrm for v in x_eta]
                e = 0.0
                for lk, vk in zip(x_lam, x_eta):
                    e += lk * vk * vk
        energy_out[sw] = 0.5 * e
    eta[:] = x_eta
    rng_state[:] = np.array(gen.words(), dtype=np.uint64)
    spare[0], spare[1] = sp
    for k in range(3):
        accepts[k] += acc[k]
        proposals[k] += prop[k]
    counter[0] = cnt
    esum[0] = e


def sturm_counts(diag, offsq, xs, out):
    n = diag.shape[0]
    q = np.full(xs.shape[0], diag[0]) - xs
    q[q == 0.0] = -1e-300
    cnt = (q < 0.0).astype(np.int64)
    for r in range(1, n):
        q = diag[r] - xs - offsq[r - 1] / q
        q[q == 0.0] = -1e-300
        cnt += q < 0.0
    out[:] = cnt
