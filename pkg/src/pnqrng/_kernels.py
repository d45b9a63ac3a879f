"""Compiled GF(2) Toeplitz kernels.

Both kernels compute the middle ``m`` coefficients of the carry-less product
``S(z) * X(z)`` where ``S`` holds the seed bits and ``X`` one input block.
Polynomials are packed LSB-first into little-endian 64-bit words (bit ``i`` of
word ``w`` is the coefficient of ``z**(64 w + i)``).

``clmul_blocks`` uses the x86 PCLMULQDQ instruction, roughly 2 k carry-less
multiplies per 4096-bit block.  ``table_blocks`` is the portable fallback, a
byte-indexed table of the eight shifted seed combinations (method of four
Russians), 16 k word XORs per 4096-bit block.
"""

from __future__ import annotations

import platform

import numpy as np
from numba import njit, types
from numba.core import cgutils
from numba.extending import intrinsic


def _host_has_pclmul() -> bool:
    if platform.machine().lower() not in ("x86_64", "amd64"):
        return False
    try:
        from llvmlite import binding as llvm

        return "+pclmul" in llvm.get_host_cpu_features().flatten().split(",")
    except Exception:
        return False


HAVE_PCLMUL = _host_has_pclmul()


@intrinsic
def _clmul64(typingctx, a, b):
    from llvmlite import ir

    sig = types.UniTuple(types.uint64, 2)(types.uint64, types.uint64)

    def codegen(context, builder, signature, args):
        i64 = ir.IntType(64)
        i32 = ir.IntType(32)
        vec = ir.VectorType(i64, 2)
        fnty = ir.FunctionType(vec, [vec, vec, ir.IntType(8)])
        fn = cgutils.get_or_insert_function(builder.module, fnty, "llvm.x86.pclmulqdq")
        zero = ir.Constant(vec, None)
        va = builder.insert_element(zero, args[0], ir.Constant(i32, 0))
        vb = builder.insert_element(zero, args[1], ir.Constant(i32, 0))
        r = builder.call(fn, [va, vb, ir.Constant(ir.IntType(8), 0)])
        lo = builder.extract_element(r, ir.Constant(i32, 0))
        hi = builder.extract_element(r, ir.Constant(i32, 1))
        return context.make_tuple(builder, signature.return_type, [lo, hi])

    return sig, codegen


@njit(nogil=True, cache=True)
def _extract_window(acc, bitoff, out, ob, mw, last_mask):
    ws = bitoff >> 6
    sh = np.uint64(bitoff & 63)
    for q in range(mw):
        v = acc[ws + q] >> sh
        if sh:
            v |= acc[ws + q + 1] << (np.uint64(64) - sh)
        out[ob + q] = v
    out[ob + mw - 1] &= last_mask


@njit(nogil=True, cache=True)
def clmul_blocks(seed_words, x_words, n_words, n_in, m_out, out):
    """Toeplitz product of every ``n_words``-word block of ``x_words``; writes ``out``."""
    nblocks = x_words.shape[0] // n_words
    mw = (m_out + 63) // 64
    wlo = (n_in - 1) // 64
    whi = (n_in + m_out - 2) // 64
    kbase = wlo - 1
    acc = np.zeros(whi - wlo + 3, np.uint64)
    ns = seed_words.shape[0]
    bitoff = n_in - 1 - 64 * kbase
    last_mask = np.uint64(0xFFFFFFFFFFFFFFFF) >> np.uint64((64 - m_out % 64) % 64)
    for blk in range(nblocks):
        acc[:] = 0
        xb = blk * n_words
        for j in range(n_words):
            xj = x_words[xb + j]
            if xj == 0:
                continue
            i0 = max(0, kbase - j)
            i1 = min(ns - 1, whi - j)
            if i1 < i0:
                continue
            carry = np.uint64(0)
            k = i0 + j - kbase
            for i in range(i0, i1 + 1):
                lo, hi = _clmul64(seed_words[i], xj)
                acc[k] ^= lo ^ carry
                carry = hi
                k += 1
            acc[k] ^= carry
        _extract_window(acc, bitoff, out, blk * mw, mw, last_mask)


@njit(nogil=True, cache=True)
def table_blocks(table, row_words, x_bytes, n_in, m_out, out):
    """Four-Russians fallback; ``x_bytes`` holds LSB-first bytes of the input blocks.

    ``table[(sh * 256 + v) * row_words + w]`` is word ``w`` of the product of
    the seed with the byte polynomial ``v``, shifted up by ``sh`` bytes.
    """
    nb = n_in // 8
    nblocks = x_bytes.shape[0] // nb
    mw = (m_out + 63) // 64
    wlo = (n_in - 1) // 64
    whi = (n_in + m_out - 2) // 64
    acc = np.zeros(whi - wlo + 3, np.uint64)
    kbase = wlo - 1
    bitoff = n_in - 1 - 64 * kbase
    last_mask = np.uint64(0xFFFFFFFFFFFFFFFF) >> np.uint64((64 - m_out % 64) % 64)
    na = acc.shape[0]
    for blk in range(nblocks):
        acc[:] = 0
        base = blk * nb
        for b in range(nb):
            v = np.int64(x_bytes[base + b])
            if v == 0:
                continue
            # byte b multiplies the seed by z**(8 b): shift class b % 8, whole words b // 8
            w0 = b // 8 - kbase
            start = ((b % 8) * 256 + v) * row_words - w0
            for q in range(max(0, w0), min(na, w0 + row_words)):
                acc[q] ^= table[start + q]
        _extract_window(acc, bitoff, out, blk * mw, mw, last_mask)


@njit(nogil=True, cache=True)
def map_rows(src, row_in, row_out, table, dst):
    """dst row r = table[src row r][:row_out]; byte rows of ``row_in`` in, ``row_out`` out."""
    for r in range(src.size // row_in):
        a = r * row_in
        b = r * row_out
        for j in range(row_out):
            dst[b + j] = table[src[a + j]]
