# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: Givens-rotation Metropolis sweeps and Sturm counts.

The algorithms mirror ``_pykernel`` operation for operation (same xoshiro256**
stream, same polar normal method, same pair selection) so both backends
produce the same chain for the same seed.
"""

from libc.math cimport sqrt, log, exp
from libc.stdint cimport uint64_t


cdef extern from "math.h" nogil:
    void sincos(double x, double* s, double* c)


cdef int RENORM_EVERY = 10000


cdef inline uint64_t rotl(uint64_t x, int k) nogil:
    return (x << k) | (x >> (64 - k))


cdef inline uint64_t next_u64(uint64_t* s) nogil:
    cdef uint64_t result = rotl(s[1] * 5, 7) * 9
    cdef uint64_t t = s[1] << 17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = rotl(s[3], 45)
    return result


cdef inline double next_double(uint64_t* s) nogil:
    return <double>(next_u64(s) >> 11) * (1.0 / 9007199254740992.0)


cdef inline double next_normal(uint64_t* s, double* spare) nogil:
    # spare[0] flags a cached second deviate held in spare[1]
    cdef double u, v, q, m
    if spare[0] != 0.0:
        spare[0] = 0.0
        return spare[1]
    while True:
        u = 2.0 * next_double(s) - 1.0
        v = 2.0 * next_double(s) - 1.0
        q = u * u + v * v
        if q > 0.0 and q < 1.0:
            break
    m = sqrt(-2.0 * log(q) / q)
    spare[0] = 1.0
    spare[1] = v * m
    return u * m


cdef inline long next_index(uint64_t* s, long bound) nogil:
    return <long>(next_double(s) * bound)


cdef double weighted_sum(double[::1] eta, const double[::1] lam) nogil:
    cdef Py_ssize_t k
    cdef double acc = 0.0
    for k in range(eta.shape[0]):
        acc += lam[k] * eta[k] * eta[k]
    return acc


cdef void renormalize(double[::1] eta) nogil:
    cdef Py_ssize_t k
    cdef double nrm = 0.0
    for k in range(eta.shape[0]):
        nrm += eta[k] * eta[k]
    nrm = sqrt(nrm)
    for k in range(eta.shape[0]):
        eta[k] /= nrm


def run_sweeps(double[::1] eta, const double[::1] lam, double beta,
               const double[::1] sigma, const double[::1] class_cdf, long n_top,
               long props_per_sweep, long sweeps,
               uint64_t[::1] rng_state, double[::1] spare,
               double[::1] energy_out, long[::1] accepts, long[::1] proposals,
               long[::1] counter, double[::1] esum):
    """Advance the chain in place by ``sweeps * props_per_sweep`` proposals.

    ``esum[0]`` carries sum(lam * eta**2) across calls; ``energy_out[s]`` gets
    H/n = esum/2 after sweep ``s``.
    """
    cdef long n = eta.shape[0]
    cdef long m = n - n_top
    cdef double half_nb = 0.5 * n * beta
    cdef double e = esum[0]
    cdef uint64_t st[4]
    cdef double sp[2]
    cdef long sw, p, i, j, cls
    cdef double u, phi, c, sn, ei, ej, ni, nj, de, x
    cdef int k
    cdef double cdf0 = class_cdf[0], cdf1 = class_cdf[1]
    cdef double sig[3]
    cdef long acc[3]
    cdef long prop[3]
    cdef long cnt = counter[0]
    for k in range(3):
        sig[k] = sigma[k]
        acc[k] = 0
        prop[k] = 0
    for k in range(4):
        st[k] = rng_state[k]
    sp[0] = spare[0]
    sp[1] = spare[1]
    with nogil:
        for sw in range(sweeps):
            for p in range(props_per_sweep):
                u = next_double(st)
                if u < cdf0:
                    cls = 0
                    i = next_index(st, n_top)
                    j = next_index(st, n_top - 1)
                    if j >= i:
                        j += 1
                elif u < cdf1:
                    cls = 1
                    i = next_index(st, n_top)
                    j = n_top + next_index(st, m)
                else:
                    cls = 2
                    i = n_top + next_index(st, m)
                    j = n_top + next_index(st, m - 1)
                    if j >= i:
                        j += 1
                phi = sig[cls] * next_normal(st, sp)
                sincos(phi, &sn, &c)
                ei = eta[i]
                ej = eta[j]
                ni = c * ei - sn * ej
                nj = sn * ei + c * ej
                de = lam[i] * (ni * ni - ei * ei) + lam[j] * (nj * nj - ej * ej)
                x = half_nb * de
                prop[cls] += 1
                if x >= 0.0 or next_double(st) < exp(x):
                    eta[i] = ni
                    eta[j] = nj
                    e += de
                    acc[cls] += 1
                cnt += 1
                if cnt >= RENORM_EVERY:
                    cnt = 0
                    renormalize(eta)
                    e = weighted_sum(eta, lam)
            energy_out[sw] = 0.5 * e
    for k in range(4):
        rng_state[k] = st[k]
    spare[0] = sp[0]
    spare[1] = sp[1]
    esum[0] = e
    counter[0] = cnt
    for k in range(3):
        accepts[k] += acc[k]
        proposals[k] += prop[k]


def sturm_counts(const double[::1] diag, const double[::1] offsq, const double[::1] xs,
                 long[::1] out):
    """Number of eigenvalues strictly below each ``xs[k]`` (LDL^T pivot signs)."""
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t k, r
    cdef double q, x
    cdef long cnt
    with nogil:
        for k in range(xs.shape[0]):
            x = xs[k]
            cnt = 0
            q = diag[0] - x
            if q == 0.0:
                q = -1e-300
            if q < 0.0:
                cnt += 1
            for r in range(1, n):
                q = diag[r] - x - offsq[r - 1] / q
                if q == 0.0:
                    q = -1e-300
                if q < 0.0:
                    cnt += 1
            out[k] = cnt
