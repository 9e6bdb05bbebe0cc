"""Pure-numpy implementations of the hot kernels.

Mirrors the compiled extension in ``_kernels.pyx`` operation for operation;
results agree to roundoff so either backend can be selected at import.  The
ring-interaction kernel is evaluated through its complete-elliptic-integral
reduction; the defining angular integral lives in :mod:`vrlab.green` and is
the reference the tests check this reduction against.
"""

import numpy as np
from scipy.special import ellipe, ellipkm1

COMPILED = False

# Below this elliptic parameter the (2/k)(K-E) - kK combination loses digits
# to cancellation and a two-term series is used instead.
_SERIES_M = 1e-5


def set_num_threads(n):
    """No-op; the numpy backend is single threaded."""


def ring_kernel(xr, xz, yr, yz):
    """Interaction kernel of the weighted half-plane operator for point pairs.

    Arrays broadcast elementwise.  Coincident pairs produce +inf (the kernel
    is logarithmically singular on the diagonal).
    """
    xr = np.asarray(xr, dtype=float)
    xz = np.asarray(xz, dtype=float)
    yr = np.asarray(yr, dtype=float)
    yz = np.asarray(yz, dtype=float)
    dz2 = (xz - yz) ** 2
    den = (xr + yr) ** 2 + dz2
    num = (xr - yr) ** 2 + dz2
    with np.errstate(divide="ignore", invalid="ignore"):
        m = 4.0 * xr * yr / den
        one_m = num / den  # exact complement, no cancellation near diagonal
        rt = np.sqrt(xr * yr)
        k = np.sqrt(m)
        out = np.where(
            m < _SERIES_M,
            rt * k * m * (1.0 / 32.0 + 3.0 * m / 128.0),
            rt / (2.0 * np.pi) * ((2.0 / k - k) * ellipkm1(one_m) - (2.0 / k) * ellipe(m)),
        )
    return np.where(num == 0.0, np.inf, out)


def ring_stream_sum(tr, tz, sr, sz, w, chunk=4096):
    """psi(t_i) = sum_j K(t_i, s_j) w_j, skipping exactly coincident pairs."""
    tr = np.asarray(tr, dtype=float).ravel()
    tz = np.asarray(tz, dtype=float).ravel()
    sr = np.asarray(sr, dtype=float).ravel()
    sz = np.asarray(sz, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    out = np.zeros(tr.size)
    for a in range(0, tr.size, chunk):
        b = min(a + chunk, tr.size)
        g = ring_kernel(tr[a:b, None], tz[a:b, None], sr[None, :], sz[None, :])
        g[~np.isfinite(g)] = 0.0
        out[a:b] = g @ w
    return out


def ring_pair_energy(r, z, w, chunk=2048):
    """sum_{i<j} K(p_i, p_j) w_i w_j (strictly off-diagonal)."""
    r = np.asarray(r, dtype=float).ravel()
    z = np.asarray(z, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    total = 0.0
    n = r.size
    for a in range(0, n, chunk):
        b = min(a + chunk, n)
        g = ring_kernel(r[a:b, None], z[a:b, None], r[None, :], z[None, :])
        g[~np.isfinite(g)] = 0.0
        # keep strictly-upper pairs only
        cols = np.arange(n)[None, :]
        rows = np.arange(a, b)[:, None]
        g[cols <= rows] = 0.0
        total += w[a:b] @ (g @ w)
    return total


def halfplane_log_sum(tr, tz, sr, sz, w, chunk=4096):
    """Half-plane Dirichlet log-kernel sums: sum_j G(t_i, s_j) w_j.

    G(x, y) = (1/4pi) ln[((x1+y1)^2 + dz^2) / ((x1-y1)^2 + dz^2)];
    coincident pairs are skipped.
    """
    tr = np.asarray(tr, dtype=float).ravel()
    tz = np.asarray(tz, dtype=float).ravel()
    sr = np.asarray(sr, dtype=float).ravel()
    sz = np.asarray(sz, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    out = np.zeros(tr.size)
    for a in range(0, tr.size, chunk):
        b = min(a + chunk, tr.size)
        dz2 = (tz[a:b, None] - sz[None, :]) ** 2
        num = (tr[a:b, None] + sr[None, :]) ** 2 + dz2
        den = (tr[a:b, None] - sr[None, :]) ** 2 + dz2
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.log(num / den) / (4.0 * np.pi)
        g[den == 0.0] = 0.0
        out[a:b] = g @ w
    return out


def halfplane_log_grad_sum(tr, tz, sr, sz, w, chunk=4096):
    """Gradient of the half-plane log-kernel sums; returns (d/dr, d/dz) arrays."""
    tr = np.asarray(tr, dtype=float).ravel()
    tz = np.asarray(tz, dtype=float).ravel()
    sr = np.asarray(sr, dtype=float).ravel()
    sz = np.asarray(sz, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    gr = np.zeros(tr.size)
    gz = np.zeros(tr.size)
    for a in range(0, tr.size, chunk):
        b = min(a + chunk, tr.size)
        dz = tz[a:b, None] - sz[None, :]
        plus = tr[a:b, None] + sr[None, :]
        minus = tr[a:b, None] - sr[None, :]
        num = plus**2 + dz**2
        den = minus**2 + dz**2
        with np.errstate(divide="ignore", invalid="ignore"):
            dgr = (plus / num - minus / den) / (2.0 * np.pi)
            dgz = (dz / num - dz / den) / (2.0 * np.pi)
        bad = den == 0.0
        dgr[bad] = 0.0
        dgz[bad] = 0.0
        gr[a:b] = dgr @ w
        gz[a:b] = dgz @ w
    return gr, gz


def _cr_weights(t):
    t2 = t * t
    t3 = t2 * t
    w0 = 0.5 * (-t3 + 2.0 * t2 - t)
    w1 = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0)
    w2 = 0.5 * (-3.0 * t3 + 4.0 * t2 + t)
    w3 = 0.5 * (t3 - t2)
    return w0, w1, w2, w3


def catmull_rom_2d(field, pi, pj):
    """Catmull-Rom bicubic interpolation at fractional indices (pi, pj).

    Indices are clamped to the grid (edge replication), so querying outside
    the array extrapolates with the boundary value.
    """
    field = np.asarray(field, dtype=float)
    ni, nj = field.shape
    pi = np.clip(np.asarray(pi, dtype=float), 0.0, ni - 1.0)
    pj = np.clip(np.asarray(pj, dtype=float), 0.0, nj - 1.0)
    i0 = np.floor(pi).astype(np.intp)
    j0 = np.floor(pj).astype(np.intp)
    ti = pi - i0
    tj = pj - j0
    wi = _cr_weights(ti)
    wj = _cr_weights(tj)
    out = np.zeros(pi.shape)
    for a in range(4):
        ia = np.clip(i0 + a - 1, 0, ni - 1)
        row = np.zeros(pi.shape)
        for b in range(4):
            jb = np.clip(j0 + b - 1, 0, nj - 1)
            row += wj[b] * field[ia, jb]
        out += wi[a] * row
    return out
