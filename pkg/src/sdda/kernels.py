"""Hot inner loops, each in two flavours.

Every kernel exists as ``<name>_nb`` (numba ``@njit``) and ``<name>_np``
(pure numpy or pure Python). The unsuffixed name is bound at import time to
whichever flavour ``SDDA_DISABLE_NUMBA`` selects. The two flavours agree to
rounding; within one flavour results are bit-reproducible.
"""

import numpy as np

from ._accel import USE_NUMBA, njit

MASK64 = 0xFFFFFFFFFFFFFFFF


# --------------------------------------------------------------------------
# xoshiro256** block generator
# --------------------------------------------------------------------------


@njit(cache=True)
def xoshiro_fill_nb(state, out):
    s0 = state[0]
    s1 = state[1]
    s2 = state[2]
    s3 = state[3]
    for n in range(out.shape[0]):
        x = s1 * np.uint64(5)
        out[n] = ((x << np.uint64(7)) | (x >> np.uint64(57))) * np.uint64(9)
        t = s1 << np.uint64(17)
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = (s3 << np.uint64(45)) | (s3 >> np.uint64(19))
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3


def xoshiro_fill_np(state, out):
    s0, s1, s2, s3 = (int(v) for v in state)
    vals = [0] * out.shape[0]
    for n in range(len(vals)):
        x = (s1 * 5) & MASK64
        vals[n] = ((((x << 7) | (x >> 57)) & MASK64) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & MASK64
    out[:] = np.array(vals, dtype=np.uint64)
    state[:] = np.array([s0, s1, s2, s3], dtype=np.uint64)


# --------------------------------------------------------------------------
# pairwise squared distances between the COLUMNS of X (b x L) and Z (b x M)
# --------------------------------------------------------------------------


@njit(cache=True)
def col_sqdist_nb(X, Z):
    b, L = X.shape
    M = Z.shape[1]
    out = np.zeros((L, M))
    for i in range(L):
        for j in range(M):
            acc = 0.0
            for r in range(b):
                d = X[r, i] - Z[r, j]
                acc += d * d
            out[i, j] = acc
    return out


def col_sqdist_np(X, Z):
    diff = X[:, :, None] - Z[:, None, :]
    return np.einsum("rij,rij->ij", diff, diff)


# --------------------------------------------------------------------------
# gradient of sum_ij f(||x_i - z_j||) given W_ij = f'(r_ij) / r_ij
#   gX[:, i] = sum_j W_ij (x_i - z_j);   gZ[:, j] = -sum_i W_ij (x_i - z_j)
# --------------------------------------------------------------------------


@njit(cache=True)
def radial_grad_nb(X, Z, W):
    b, L = X.shape
    M = Z.shape[1]
    gX = np.zeros((b, L))
    gZ = np.zeros((b, M))
    for i in range(L):
        for j in range(M):
            w = W[i, j]
            if w == 0.0:
                continue
            for r in range(b):
                d = w * (X[r, i] - Z[r, j])
                gX[r, i] += d
                gZ[r, j] -= d
    return gX, gZ


def radial_grad_np(X, Z, W):
    # explicit differences: the expanded form x*sum(W) - Z W^T cancels
    # catastrophically when W carries huge weights on coincident pairs
    diff = X[:, :, None] - Z[:, None, :]
    gX = np.einsum("rij,ij->ri", diff, W)
    gZ = -np.einsum("rij,ij->rj", diff, W)
    return gX, gZ


# --------------------------------------------------------------------------
# RBF mixture over a bandwidth grid, given squared distances
#   K = sum_s exp(-d / (2 s^2));   A = sum_s exp(-d / (2 s^2)) / s^2
# --------------------------------------------------------------------------


@njit(cache=True)
def rbf_mix_nb(sqdist, sigmas):
    n, m = sqdist.shape
    K = np.zeros((n, m))
    A = np.zeros((n, m))
    for s in range(sigmas.shape[0]):
        inv = 1.0 / (2.0 * sigmas[s] * sigmas[s])
        inv_var = 1.0 / (sigmas[s] * sigmas[s])
        for i in range(n):
            for j in range(m):
                k = np.exp(-sqdist[i, j] * inv)
                K[i, j] += k
                A[i, j] += k * inv_var
    return K, A


def rbf_mix_np(sqdist, sigmas):
    K = np.zeros_like(sqdist)
    A = np.zeros_like(sqdist)
    for s in sigmas:
        k = np.exp(-sqdist * (1.0 / (2.0 * s * s)))
        K += k
        A += k * (1.0 / (s * s))
    return K, A


if USE_NUMBA:
    xoshiro_fill = xoshiro_fill_nb
    col_sqdist = col_sqdist_nb
    radial_grad = radial_grad_nb
    rbf_mix = rbf_mix_nb
    BACKEND = "numba"
else:
    xoshiro_fill = xoshiro_fill_np
    col_sqdist = col_sqdist_np
    radial_grad = radial_grad_np
    rbf_mix = rbf_mix_np
    BACKEND = "numpy"
