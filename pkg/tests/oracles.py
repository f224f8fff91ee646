"""Slow, literal reference implementations used only as test oracles."""

import numpy as np


def dft_direct(x):
    x = np.asarray(x, dtype=complex)
    M = x.size
    n = np.arange(M)
    return np.array([np.sum(x * np.exp(-2j * np.pi * k * n / M)) for k in range(M)])


def idft_direct(X):
    X = np.asarray(X, dtype=complex)
    M = X.size
    k = np.arange(M)
    return np.array([np.sum(X * np.exp(2j * np.pi * k * n / M)) for n in range(M)]) / M


def circconv_direct(x, w):
    x = np.asarray(x, dtype=complex)
    M = x.size
    wp = np.zeros(M, dtype=complex)
    wp[: len(w)] = w
    return np.array([sum(x[m] * wp[(n - m) % M] for m in range(M)) for n in range(M)])


def pi2_direct(bits):
    b = np.asarray(bits)
    m = np.arange(b.size)
    return np.exp(1j * np.pi / 4) * np.exp(1j * (m % 2) * np.pi / 2) * (1 - 2 * b)


def papr_direct(x):
    p = np.abs(np.asarray(x)) ** 2
    return 10 * np.log10(p.max() / p.mean())
