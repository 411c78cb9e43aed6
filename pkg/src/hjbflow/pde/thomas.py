from __future__ import annotations

import numpy as np

from hjbflow.core.errors import ZeroPivotError
from hjbflow.core.market import FloatArray

PIVOT_TOL = 1e-14


def thomas_solve(
    lower: FloatArray, diag: FloatArray, upper: FloatArray, rhs: FloatArray
) -> FloatArray:
    """Solve a tridiagonal system without pivoting.

    Row i reads lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i];
    lower[0] and upper[-1] are ignored.
    """
    n = len(diag)
    if not (len(lower) == len(upper) == len(rhs) == n):
        raise ValueError("tridiagonal bands and rhs must have equal length")
    if n == 0:
        return np.zeros(0)
    a = np.asarray(lower, dtype=np.float64).tolist()
    b = np.asarray(diag, dtype=np.float64).tolist()
    c = np.asarray(upper, dtype=np.float64).tolist()
    d = np.asarray(rhs, dtype=np.float64).tolist()
    cp = [0.0] * n
    dp = [0.0] * n
    pivot = b[0]
    if abs(pivot) < PIVOT_TOL:
        raise ZeroPivotError("zero pivot in row 0")
    cp[0] = c[0] / pivot
    dp[0] = d[0] / pivot
    for i in range(1, n):
        pivot = b[i] - a[i] * cp[i - 1]
        if abs(pivot) < PIVOT_TOL:
            raise ZeroPivotError(f"zero pivot in row {i}")
        cp[i] = c[i] / pivot
        dp[i] = (d[i] - a[i] * dp[i - 1]) / pivot
    x = [0.0] * n
    x[-1] = dp[-1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return np.array(x)
