# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled mirror of lanerl._purepy: MLP forward/backward and SGD kernels.

Hot loops run over raw pointers with local stack accumulators so the C
compiler can vectorize them. Large activation maps are delegated to the
NumPy ufuncs (SIMD); small ones use scalar libm to skip dispatch overhead.
Results match the NumPy reference to floating-point rounding, and repeated
calls with identical inputs are bitwise deterministic.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, isfinite, sqrt, tanh

from lanerl import _purepy

cnp.import_array()

ACT_LINEAR = 0
ACT_RELU = 1
ACT_TANH = 2
ACT_SIGMOID = 3

cdef enum:
    UFUNC_CUTOVER = 256  # below this, scalar activation beats a ufunc dispatch
    GEMM_CUTOVER = 8  # batches at least this big go through BLAS instead
    KBLOCK = 512  # stack accumulator width for the axpy loops


cdef inline double _act(int code, double z) noexcept nogil:
    if code == 1:
        return z if z > 0.0 else 0.0
    elif code == 2:
        return tanh(z)
    elif code == 3:
        if z >= 0.0:
            return 1.0 / (1.0 + exp(-z))
        else:
            return exp(z) / (1.0 + exp(z))
    return z


cdef inline double _act_grad(int code, double pre, double post, double g) noexcept nogil:
    if code == 1:
        return g if pre > 0.0 else 0.0
    elif code == 2:
        return g * (1.0 - post * post)
    elif code == 3:
        return g * (post * (1.0 - post))
    return g


cdef void _affine(const double* x, const double* w, const double* b, double* out,
                  Py_ssize_t batch, Py_ssize_t nin, Py_ssize_t nout) noexcept nogil:
    # out[i,o] = b[o] + dot(x[i,:], w[o,:]); both streams contiguous
    cdef Py_ssize_t i, o, k
    cdef const double* xi
    cdef const double* wo
    cdef double s
    for i in range(batch):
        xi = x + i * nin
        for o in range(nout):
            wo = w + o * nin
            s = b[o]
            for k in range(nin):
                s += xi[k] * wo[k]
            out[i * nout + o] = s


cdef void _act_small(int code, const double* pre, double* post, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t m
    for m in range(n):
        post[m] = _act(code, pre[m])


cdef void _act_grad_small(int code, const double* pre, const double* post,
                          const double* g, double* out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t m
    for m in range(n):
        out[m] = _act_grad(code, pre[m], post[m], g[m])


cdef void _accum_dw(const double* gact, const double* inp, double* dw, double* db,
                    Py_ssize_t batch, Py_ssize_t nout, Py_ssize_t nin) noexcept nogil:
    # dw[o,:] = sum_i gact[i,o] * inp[i,:], accumulated in a stack block so
    # the k-loop has no aliasing and vectorizes; db[o] = sum_i gact[i,o]
    cdef Py_ssize_t o, i, k, k0, kn
    cdef double acc[KBLOCK]
    cdef double gv, s
    for o in range(nout):
        s = 0.0
        for i in range(batch):
            s += gact[i * nout + o]
        db[o] = s
        k0 = 0
        while k0 < nin:
            kn = nin - k0
            if kn > KBLOCK:
                kn = KBLOCK
            for k in range(kn):
                acc[k] = 0.0
            for i in range(batch):
                gv = gact[i * nout + o]
                for k in range(kn):
                    acc[k] += gv * inp[i * nin + k0 + k]
            for k in range(kn):
                dw[o * nin + k0 + k] = acc[k]
            k0 += KBLOCK


cdef void _accum_gnext(const double* gact, const double* w, double* gnext,
                       Py_ssize_t batch, Py_ssize_t nout, Py_ssize_t nin) noexcept nogil:
    # gnext[i,:] = sum_o gact[i,o] * w[o,:]
    cdef Py_ssize_t i, o, k, k0, kn
    cdef double acc[KBLOCK]
    cdef double gv
    for i in range(batch):
        k0 = 0
        while k0 < nin:
            kn = nin - k0
            if kn > KBLOCK:
                kn = KBLOCK
            for k in range(kn):
                acc[k] = 0.0
            for o in range(nout):
                gv = gact[i * nout + o]
                for k in range(kn):
                    acc[k] += gv * w[o * nin + k0 + k]
            for k in range(kn):
                gnext[i * nin + k0 + k] = acc[k]
            k0 += KBLOCK


def forward_pass(list weights, list biases, act_codes, cnp.ndarray[double, ndim=2] x):
    """See lanerl._purepy.forward_pass."""
    cdef Py_ssize_t n_layers = len(weights)
    cdef Py_ssize_t batch = x.shape[0]
    cdef Py_ssize_t l, nin, nout
    cdef int code
    cdef double[:, ::1] cur, w, pre, post
    cdef double[::1] b
    pres = []
    posts = []
    cur_arr = x
    for l in range(n_layers):
        w_arr = weights[l]
        code = act_codes[l]
        w = w_arr
        nout = w.shape[0]
        nin = w.shape[1]
        if batch >= GEMM_CUTOVER:
            # big batches: BLAS wins, and this matches the reference bitwise
            pre_arr = cur_arr @ w_arr.T
            pre_arr += biases[l]
            pre = pre_arr
        else:
            cur = cur_arr
            b = biases[l]
            pre_arr = np.empty((batch, nout))
            pre = pre_arr
            _affine(&cur[0, 0], &w[0, 0], &b[0], &pre[0, 0], batch, nin, nout)
        if code == 0:
            post_arr = pre_arr.copy()
        elif batch * nout >= UFUNC_CUTOVER:
            post_arr = _purepy._activate(code, pre_arr)
        else:
            post_arr = np.empty((batch, nout))
            post = post_arr
            _act_small(code, &pre[0, 0], &post[0, 0], batch * nout)
        pres.append(pre_arr)
        posts.append(post_arr)
        cur_arr = post_arr
    return pres, posts


def backward_pass(list weights, act_codes, cnp.ndarray[double, ndim=2] x,
                  list pres, list posts, cnp.ndarray[double, ndim=2] gout):
    """See lanerl._purepy.backward_pass."""
    cdef Py_ssize_t n_layers = len(weights)
    cdef Py_ssize_t batch = x.shape[0]
    cdef Py_ssize_t l, nin, nout
    cdef int code
    cdef double[:, ::1] w, pre, post, inp, g, gact, dw, gnext
    cdef double[::1] db
    dws = [None] * n_layers
    dbs = [None] * n_layers
    gcur_arr = gout
    for l in range(n_layers - 1, -1, -1):
        w = weights[l]
        pre = pres[l]
        post = posts[l]
        code = act_codes[l]
        nout = w.shape[0]
        nin = w.shape[1]
        inp_arr = posts[l - 1] if l > 0 else x
        inp = inp_arr
        if code == 0:
            gact_arr = gcur_arr
        elif batch * nout >= UFUNC_CUTOVER:
            gact_arr = np.ascontiguousarray(
                _purepy._activation_backward(code, pres[l], posts[l], gcur_arr)
            )
        else:
            g = gcur_arr
            gact_arr = np.empty((batch, nout))
            gact = gact_arr
            _act_grad_small(code, &pre[0, 0], &post[0, 0], &g[0, 0], &gact[0, 0],
                            batch * nout)
        if batch >= GEMM_CUTOVER:
            dw_arr = gact_arr.T @ inp_arr
            db_arr = gact_arr.sum(axis=0)
            gnext_arr = gact_arr @ weights[l]
        else:
            gact = gact_arr
            dw_arr = np.empty((nout, nin))
            db_arr = np.empty(nout)
            gnext_arr = np.empty((batch, nin))
            dw = dw_arr
            db = db_arr
            gnext = gnext_arr
            _accum_dw(&gact[0, 0], &inp[0, 0], &dw[0, 0], &db[0], batch, nout, nin)
            _accum_gnext(&gact[0, 0], &w[0, 0], &gnext[0, 0], batch, nout, nin)
        dws[l] = dw_arr
        dbs[l] = db_arr
        gcur_arr = gnext_arr
    return dws, dbs, gcur_arr


def sgd_update(list params, list grads, list velocities, double lr,
               double momentum, double clip_norm):
    """See lanerl._purepy.sgd_update. Arrays must be C-contiguous."""
    cdef Py_ssize_t n = len(grads)
    cdef Py_ssize_t j, m, size
    cdef double total = 0.0
    cdef double norm, scale, gv
    cdef double[::1] g1, p1, v1
    flat_g = [g.ravel() for g in grads]
    flat_p = [p.ravel() for p in params]
    flat_v = [v.ravel() for v in velocities]
    for j in range(n):
        g1 = flat_g[j]
        size = g1.shape[0]
        for m in range(size):
            total += g1[m] * g1[m]
    norm = sqrt(total)
    if not isfinite(norm):
        return norm
    scale = 1.0
    if clip_norm > 0.0 and norm > clip_norm:
        scale = clip_norm / norm
    for j in range(n):
        g1 = flat_g[j]
        p1 = flat_p[j]
        v1 = flat_v[j]
        size = g1.shape[0]
        for m in range(size):
            gv = v1[m] * momentum + g1[m] * scale
            v1[m] = gv
            p1[m] = p1[m] - lr * gv
    return norm
