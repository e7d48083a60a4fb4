"""Pure numpy implementations of the batched loss and silhouette kernels.

Every function takes C-contiguous ``float64`` arrays and ``int64`` labels
that were already validated by the caller, and mirrors the compiled
kernels in ``_kernels_cy.pyx`` one-for-one.  Loss kernels return
``(values, grad)`` with per-sample values and per-sample gradients
with respect to the kernel's input (not yet averaged over the batch).
"""

import numpy as np

BACKEND = "python"


def distance_weights(y, n_classes, alpha):
    idx = np.arange(n_classes)
    d = np.abs(idx[None, :] - y[:, None]).astype(np.float64)
    w = np.where(d > 0, d ** alpha, 0.0)
    return w


def ce(P, y, eps):
    n = P.shape[0]
    rows = np.arange(n)
    pc = np.maximum(P[rows, y], eps)
    G = np.zeros_like(P)
    G[rows, y] = -1.0 / pc
    return -np.log(pc), G


def cdw_ce(P, y, alpha, margin, eps):
    w = distance_weights(y, P.shape[1], alpha)
    q = np.minimum(P + margin, 1.0 - eps)
    one_minus = 1.0 - q
    vals = -(w * np.log(one_minus)).sum(axis=1)
    return vals, w / one_minus


def unimodal(P, y, lam, delta, use_entropy, eps):
    n, K = P.shape
    rows = np.arange(n)
    G = np.zeros_like(P)
    if use_entropy:
        logp = np.log(np.maximum(P, eps))
        vals = -(P * logp).sum(axis=1)
        G -= np.where(P >= eps, logp + 1.0, logp)
    else:
        pc = np.maximum(P[rows, y], eps)
        vals = -np.log(pc)
        G[rows, y] = -1.0 / pc
    if lam == 0.0 or K < 2:
        return vals, G
    k = np.arange(K - 1)
    after = k[None, :] >= y[:, None]
    # after the true class: penalize rises p[k+1] > p[k]; before it: drops
    diff = P[:, 1:] - P[:, :-1]
    arg = delta + np.where(after, diff, -diff)
    active = arg > 0
    vals = vals + lam * np.where(active, arg, 0.0).sum(axis=1)
    sgn = np.where(active, np.where(after, lam, -lam), 0.0)
    G[:, 1:] += sgn
    G[:, :-1] -= sgn
    return vals, G


def corn(L, y):
    n, T = L.shape
    k = np.arange(T)
    mask = k[None, :] <= y[:, None]
    target = (y[:, None] > k[None, :]).astype(np.float64)
    n_tasks = mask.sum(axis=1).astype(np.float64)
    # BCE with logits: softplus(l) - t * l
    e = np.exp(-np.abs(L))
    bce = np.log1p(e) + np.maximum(L, 0.0) - target * L
    vals = np.where(mask, bce, 0.0).sum(axis=1) / n_tasks
    s = np.where(L >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    G = np.where(mask, (s - target) / n_tasks[:, None], 0.0)
    return vals, G


def mse_reg(r, y, n_classes):
    e = np.exp(-np.abs(r))
    s = np.where(r >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    scale = n_classes - 1.0
    resid = s * scale - y
    return resid * resid, 2.0 * resid * scale * s * (1.0 - s)


def softmax_backward(P, G):
    return P * (G - (P * G).sum(axis=1, keepdims=True))


def silhouette_samples(X, labels, n_clusters):
    n = X.shape[0]
    counts = np.bincount(labels, minlength=n_clusters).astype(np.float64)
    out = np.zeros(n)
    chunk = 256
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        diff = X[start:stop, None, :] - X[None, :, :]
        D = np.sqrt((diff * diff).sum(axis=2))
        sums = np.zeros((stop - start, n_clusters))
        for c in range(n_clusters):
            sums[:, c] = D[:, labels == c].sum(axis=1)
        for r in range(stop - start):
            i = start + r
            own = labels[i]
            if counts[own] <= 1:
                continue
            a = sums[r, own] / (counts[own] - 1.0)
            b = np.inf
            for c in range(n_clusters):
                if c != own and counts[c] > 0:
                    b = min(b, sums[r, c] / counts[c])
            m = max(a, b)
            out[i] = 0.0 if m == 0.0 else (b - a) / m
    return out
