"""Pure-python chain-DP kernels.

Reference implementation of the API that the compiled extension (_kernel.pyx)
also provides; cyclotrace.backend picks whichever is available. Traces arrive
packed MSB-first: bit i of a length-l trace (1-based, reading order) is
(val >> (l - i)) & 1.

f here is the nested-chain sum
    f(x, w) = sum over 1 <= i_1 < ... < i_k <= l of
              x_{i_1}...x_{i_k} w_1^{i_1} w_2^{i_2-i_1} ... w_k^{i_k-i_{k-1}}
computed by the forward recursion A_r(i) = x_i * sum_{j<i} A_{r-1}(j) w_r^{i-j},
which is O(l*k) instead of the binomial blowup of the defining sum.
"""

import numpy as np

BACKEND_NAME = "python"


def f_chain_packed(val: int, ln: int, w) -> complex:
    k = len(w)
    if k == 0:
        raise ValueError("empty weight vector")
    if ln < k:
        return 0j
    val = int(val)
    prev = [0j] * (ln + 1)
    w0 = complex(w[0])
    pw = 1 + 0j
    for i in range(1, ln + 1):
        pw *= w0
        if (val >> (ln - i)) & 1:
            prev[i] = pw
    for r in range(1, k):
        wr = complex(w[r])
        run = 0j
        cur = [0j] * (ln + 1)
        for i in range(1, ln + 1):
            run = run * wr + prev[i - 1] * wr
            if (val >> (ln - i)) & 1:
                cur[i] = run
        prev = cur
    out = 0j
    for i in range(1, ln + 1):
        out += prev[i]
    return out


def plan_rows_single(val: int, ln: int, W: np.ndarray, klist: np.ndarray) -> np.ndarray:
    """f of one trace against every plan row; returns complex128 (R,)."""
    R = W.shape[0]
    out = np.zeros(R, dtype=np.complex128)
    for r in range(R):
        out[r] = f_chain_packed(val, ln, W[r, : int(klist[r])])
    return out


def plan_batch_rows(
    values: np.ndarray,
    lengths: np.ndarray,
    weights: np.ndarray,
    W: np.ndarray,
    klist: np.ndarray,
) -> np.ndarray:
    """Weighted sum of f over a trace batch, separately per plan row."""
    R = W.shape[0]
    out = np.zeros(R, dtype=np.complex128)
    rows = [W[r, : int(klist[r])] for r in range(R)]
    for i in range(len(values)):
        v = int(values[i])
        l = int(lengths[i])
        wt = float(weights[i])
        for r in range(R):
            out[r] += wt * f_chain_packed(v, l, rows[r])
    return out
