"""Pure-Python/numpy versions of the compiled kernels (same signatures)."""

from __future__ import annotations

import numpy as np


def _event_table(time: np.ndarray, event: np.ndarray):
    uniq, first = np.unique(time, return_index=True)
    d = np.add.reduceat(event.astype(float), first) if len(time) else np.empty(0)
    y = len(time) - first
    keep = d > 0
    return uniq[keep], d[keep], y[keep].astype(float)


def _log_prod(factors: np.ndarray):
    """Prefix products as (sum of logs of non-zero factors, count of zeros)."""
    zero = factors <= 0
    logs = np.where(zero, 0.0, np.log(np.where(zero, 1.0, factors)))
    return (np.concatenate([[0.0], np.cumsum(logs)]),
            np.concatenate([[0], np.cumsum(zero)]))


def loo_km(time: np.ndarray, event: np.ndarray, eval_times: np.ndarray) -> np.ndarray:
    time = np.asarray(time, dtype=float)
    event = np.asarray(event, dtype=np.int64)
    eval_times = np.asarray(eval_times, dtype=float)
    et, ed, ey = _event_table(time, event)

    with np.errstate(divide="ignore", invalid="ignore"):
        full = 1.0 - ed / ey
        # subject still at risk but removed (not the one with an event at t_j)
        reduced = np.where(ey > 1, 1.0 - ed / (ey - 1.0), 1.0)
        # removed subject had an event at t_j
        reduced_ev = np.where(ey > 1, 1.0 - (ed - 1.0) / (ey - 1.0), 1.0)
    lf, zf = _log_prod(full)
    lr, zr = _log_prod(reduced)

    a = np.searchsorted(et, time, side="left")          # event times strictly before T_i
    tie = (a < len(et)) & (et[np.minimum(a, len(et) - 1)] == time) if len(et) else np.zeros(len(time), bool)
    K = np.searchsorted(et, eval_times, side="right")    # event times <= t_k

    A = a[:, None]
    Kc = K[None, :]
    before = Kc <= A
    # part 1: factors j < min(K, a) use the reduced risk set
    upto = np.minimum(Kc, A)
    log1 = lr[upto]
    z1 = zr[upto]
    # part 2: the tied event time, if K covers it
    tie_f = np.where(event == 1, reduced_ev[np.minimum(a, len(et) - 1)] if len(et) else 1.0,
                     reduced[np.minimum(a, len(et) - 1)] if len(et) else 1.0)
    tie_f = np.where(tie, tie_f, 1.0)
    covers_tie = (~before) & tie[:, None]
    f2 = np.where(covers_tie, tie_f[:, None], 1.0)
    # part 3: full-sample factors after the tied time
    start = A + tie[:, None]
    after = np.maximum(Kc, start)
    log3 = np.where(before, 0.0, lf[after] - lf[start])
    z3 = np.where(before, 0, zf[after] - zf[start])

    zeros = z1 + z3 + (f2 <= 0)
    with np.errstate(divide="ignore"):
        val = np.exp(log1 + log3) * np.where(f2 <= 0, 1.0, f2)
    return np.where(zeros > 0, 0.0, val)


def pava_nonincreasing(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    means: list[float] = []
    wsums: list[float] = []
    sizes: list[int] = []
    for v, w in zip(np.asarray(values, dtype=float).tolist(),
                    np.asarray(weights, dtype=float).tolist()):
        means.append(v)
        wsums.append(w)
        sizes.append(1)
        while len(means) > 1 and means[-2] < means[-1]:
            w2 = wsums[-2] + wsums[-1]
            means[-2] = (wsums[-2] * means[-2] + wsums[-1] * means[-1]) / w2
            wsums[-2] = w2
            sizes[-2] += sizes[-1]
            means.pop()
            wsums.pop()
            sizes.pop()
    return np.repeat(np.asarray(means, dtype=float), sizes)
