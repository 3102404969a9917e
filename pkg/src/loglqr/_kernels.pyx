# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled segment runner.  Mirrors loglqr._kernels_py.run_segment exactly."""

from libc.math cimport isfinite

cdef double OVERFLOW_SQ = 1e300


def run_segment(const double[:, ::1] A, const double[:, ::1] B, const double[:, ::1] Q,
                const double[:, ::1] R, const double[:, ::1] K, double[::1] x,
                const double[:, ::1] W, const double[:, ::1] E,
                const double[::1] escale, double xlimit, double[::1] costs,
                double[:, ::1] states, double[:, ::1] actions,
                double[:, ::1] G, double[:, ::1] C, bint accumulate):
    cdef Py_ssize_t d = A.shape[0]
    cdef Py_ssize_t k = B.shape[1]
    cdef Py_ssize_t m = d + k
    cdef Py_ssize_t n = W.shape[0]
    cdef bint noisy_action = E.shape[0] > 0
    cdef bint rec_states = states.shape[0] > 0
    cdef bint rec_actions = actions.shape[0] > 0
    cdef Py_ssize_t t, i, j
    cdef double s, c, sq, sc
    cdef double[64] z
    cdef double[64] xn

    if m > 64:
        raise ValueError("run_segment supports d + k <= 64")

    for t in range(n):
        sq = 0.0
        for i in range(d):
            sq += x[i] * x[i]
        if sq > xlimit:
            if accumulate:
                _mirror(G, m)
            return t, 1

        for i in range(d):
            z[i] = x[i]
        sc = escale[t] if noisy_action else 0.0
        for i in range(k):
            s = 0.0
            for j in range(d):
                s += K[i, j] * x[j]
            if noisy_action:
                s += sc * E[t, i]
            z[d + i] = s

        c = 0.0
        for i in range(d):
            s = 0.0
            for j in range(d):
                s += Q[i, j] * z[j]
            c += z[i] * s
        for i in range(k):
            s = 0.0
            for j in range(k):
                s += R[i, j] * z[d + j]
            c += z[d + i] * s
        costs[t] = c

        if rec_states:
            for i in range(d):
                states[t, i] = z[i]
        if rec_actions:
            for i in range(k):
                actions[t, i] = z[d + i]

        sq = 0.0
        for i in range(d):
            s = W[t, i]
            for j in range(d):
                s += A[i, j] * z[j]
            for j in range(k):
                s += B[i, j] * z[d + j]
            xn[i] = s
            sq += s * s

        if accumulate:
            for i in range(m):
                for j in range(i, m):
                    G[i, j] += z[i] * z[j]
            for i in range(d):
                for j in range(m):
                    C[i, j] += xn[i] * z[j]

        for i in range(d):
            x[i] = xn[i]
        if not isfinite(sq) or sq > OVERFLOW_SQ:
            if accumulate:
                _mirror(G, m)
            return t + 1, 2

    if accumulate:
        _mirror(G, m)
    return n, 0


cdef void _mirror(double[:, ::1] G, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(i):
            G[i, j] = G[j, i]
