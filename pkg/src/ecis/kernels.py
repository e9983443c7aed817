"""Hot inner loops, in two interchangeable flavours.

Every kernel exists as ``np_<name>`` (vectorised numpy plus short Python
loops) and ``nb_<name>`` (numba ``@njit``). The unprefixed name points at
whichever backend ``ecis._backend`` selected. Integer-valued outputs
(random streams, selections, permutations) are bit-identical across the two;
floating outputs agree to rounding.

Stream kernels take and return the raw 64-bit SplitMix64 state so callers
can thread one stream through several kernels.
"""
import numpy as np
from scipy.linalg import solve_triangular

from ._backend import USE_NUMBA, njit

GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1
INV_2_53 = 1.0 / 9007199254740992.0
TWO_PI = 2.0 * np.pi
# relative floor on the orthogonal part of a new atom before it is rejected
RANK_TOL = 1e-10


# ---------------------------------------------------------------------------
# scalar helpers (pure Python ints, shared by both backends' callers)


def mix64(z):
    """SplitMix64 output finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


# ---------------------------------------------------------------------------
# numpy implementations


def _np_mix(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


def np_splitmix_fill(state, count):
    """Next ``count`` SplitMix64 outputs and the advanced state."""
    steps = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(state) + steps * np.uint64(GOLDEN)
        out = _np_mix(z)
    return out, (state + GOLDEN * count) & MASK64


def np_gaussian_fill(state, count):
    """``count`` standard normals by Box-Muller, consuming two draws per pair."""
    pairs = (count + 1) // 2
    bits, state = np_splitmix_fill(state, 2 * pairs)
    u = (bits >> np.uint64(11)).astype(np.float64) * INV_2_53
    u1 = u[0::2]
    u2 = u[1::2]
    radius = np.sqrt(-2.0 * np.log(1.0 - u1))
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(TWO_PI * u2)
    out[1::2] = radius * np.sin(TWO_PI * u2)
    return out[:count], state


def _np_bounded(bits, bound):
    # Lemire multiply-shift on the top 32 bits; exact for bound < 2**32
    return ((bits >> np.uint64(32)) * np.asarray(bound, dtype=np.uint64)) >> np.uint64(32)


def np_select_uniform(state, n, k):
    """First ``k`` slots of a partial Fisher-Yates shuffle of ``range(n)``."""
    arr = np.arange(n, dtype=np.int64)
    if k == 0:
        return arr[:0].copy(), state
    bits, state = np_splitmix_fill(state, k)
    offs = _np_bounded(bits, np.arange(n, n - k, -1)).astype(np.int64)
    for i in range(k):
        j = i + int(offs[i])
        arr[i], arr[j] = arr[j], arr[i]
    return arr[:k].copy(), state


def np_select_weighted(state, weights, k):
    """Sequential weighted sampling of ``k`` distinct indices.

    Each draw picks index ``i`` with probability proportional to the weight
    left on it; picked indices drop to zero weight. Once all remaining
    weight is zero the draw falls back to a uniform pick among the
    unpicked indices.
    """
    n = weights.shape[0]
    w = np.array(weights, dtype=np.float64)
    taken = np.zeros(n, dtype=np.bool_)
    out = np.empty(k, dtype=np.int64)
    if k == 0:
        return out, state
    bits, state = np_splitmix_fill(state, k)
    for d in range(k):
        x = bits[d]
        cum = np.cumsum(w)
        total = cum[-1]
        if total > 0.0:
            target = float(x >> np.uint64(11)) * INV_2_53 * total
            idx = int(np.searchsorted(cum, target, side="right"))
            if idx >= n:
                idx = n - 1
            while w[idx] <= 0.0:
                idx -= 1
        else:
            free = np.flatnonzero(~taken)
            r = int(_np_bounded(np.uint64(x), free.shape[0]))
            idx = int(free[r])
        out[d] = idx
        taken[idx] = True
        w[idx] = 0.0
    return out, state


def np_derange(state, k):
    """Uniform derangement of ``range(k)`` by rejection-sampled Fisher-Yates.

    Returns ``(perm, state, attempts)``.
    """
    perm = np.arange(k, dtype=np.int64)
    if k < 2:
        return perm, state, 0
    idx = np.arange(k, dtype=np.int64)
    bounds = np.arange(k, 1, -1)
    attempts = 0
    while True:
        attempts += 1
        bits, state = np_splitmix_fill(state, k - 1)
        js = _np_bounded(bits, bounds).astype(np.int64)
        perm = idx.copy()
        for step in range(k - 1):
            i = k - 1 - step
            j = int(js[step])
            perm[i], perm[j] = perm[j], perm[i]
        if not np.any(perm == idx):
            return perm, state, attempts


def np_block_mapping(state, n, k, weights):
    """Selection, derangement and mapping for one block in a single call.

    An empty ``weights`` array means uniform selection. Returns
    ``(mapping, moved_sorted, state)``.
    """
    if weights.shape[0] == 0:
        chosen, state = np_select_uniform(state, n, k)
    else:
        chosen, state = np_select_weighted(state, weights, k)
    order, state, _ = np_derange(state, k)
    mapping = np.arange(n, dtype=np.int64)
    mapping[chosen] = chosen[order]
    return mapping, np.sort(chosen), state


def np_next_uniform(state):
    bits, state = np_splitmix_fill(state, 1)
    return float(bits[0] >> np.uint64(11)) * INV_2_53, state


def np_omp(D, y, colnorms, t_max, tol):
    """Orthogonal matching pursuit with an incrementally grown QR factor.

    Returns ``(support, coef, residual_norms, rank_deficient)``; ``coef`` holds
    the least-squares weights on ``support`` in selection order.
    """
    m, n = D.shape
    ynorm = float(np.sqrt(y @ y))
    norms = [ynorm]
    empty = np.zeros(0, dtype=np.int64)
    if ynorm == 0.0 or t_max == 0:
        return empty, np.zeros(0), np.array(norms), False
    Q = np.zeros((t_max, m))
    R = np.zeros((t_max, t_max))
    z = np.zeros(t_max)
    support = np.zeros(t_max, dtype=np.int64)
    active = np.zeros(n, dtype=np.bool_)
    safe = np.where(colnorms > 0.0, colnorms, np.inf)
    r = y.astype(np.float64, copy=True)
    stop = tol * ynorm
    t = 0
    deficient = False
    while t < t_max and norms[-1] > stop:
        score = np.abs(D.T @ r) / safe
        score[active] = -1.0
        j = int(np.argmax(score))
        d = D[:, j]
        Qt = Q[:t]
        w = Qt @ d
        v = d - w @ Qt
        w2 = Qt @ v
        v -= w2 @ Qt
        w += w2
        rho = float(np.sqrt(v @ v))
        if not rho > RANK_TOL * colnorms[j]:
            deficient = True
            break
        q = v / rho
        Q[t] = q
        R[:t, t] = w
        R[t, t] = rho
        z[t] = q @ r
        r -= z[t] * q
        support[t] = j
        active[j] = True
        t += 1
        norms.append(float(np.sqrt(r @ r)))
    coef = solve_triangular(R[:t, :t], z[:t]) if t else np.zeros(0)
    return support[:t].copy(), coef, np.array(norms), deficient


# ---------------------------------------------------------------------------
# numba implementations


@njit(cache=True)
def _nb_mix(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _nb_fill(state, count):
    out = np.empty(count, dtype=np.uint64)
    s = state
    for i in range(count):
        s = s + np.uint64(GOLDEN)
        out[i] = _nb_mix(s)
    return out, s


@njit(cache=True)
def _nb_bounded(x, bound):
    return np.int64(((x >> np.uint64(32)) * np.uint64(bound)) >> np.uint64(32))


@njit(cache=True)
def _nb_uniform(x):
    return np.float64(x >> np.uint64(11)) * INV_2_53


@njit(cache=True)
def _nb_gaussian(state, count):
    pairs = (count + 1) // 2
    out = np.empty(2 * pairs)
    s = state
    for p in range(pairs):
        s = s + np.uint64(GOLDEN)
        u1 = _nb_uniform(_nb_mix(s))
        s = s + np.uint64(GOLDEN)
        u2 = _nb_uniform(_nb_mix(s))
        radius = np.sqrt(-2.0 * np.log(1.0 - u1))
        out[2 * p] = radius * np.cos(TWO_PI * u2)
        out[2 * p + 1] = radius * np.sin(TWO_PI * u2)
    return out[:count], s


@njit(cache=True)
def _nb_select_uniform(state, n, k):
    arr = np.arange(n)
    s = state
    for i in range(k):
        s = s + np.uint64(GOLDEN)
        j = i + _nb_bounded(_nb_mix(s), n - i)
        tmp = arr[i]
        arr[i] = arr[j]
        arr[j] = tmp
    return arr[:k].copy(), s


@njit(cache=True)
def _nb_select_weighted(state, weights, k):
    n = weights.shape[0]
    w = weights.copy()
    taken = np.zeros(n, dtype=np.bool_)
    out = np.empty(k, dtype=np.int64)
    cum = np.empty(n)
    s = state
    for d in range(k):
        s = s + np.uint64(GOLDEN)
        x = _nb_mix(s)
        acc = 0.0
        for i in range(n):
            acc += w[i]
            cum[i] = acc
        total = cum[n - 1]
        if total > 0.0:
            target = _nb_uniform(x) * total
            idx = n
            for i in range(n):
                if cum[i] > target:
                    idx = i
                    break
            if idx >= n:
                idx = n - 1
            while w[idx] <= 0.0:
                idx -= 1
        else:
            free = 0
            for i in range(n):
                if not taken[i]:
                    free += 1
            r = _nb_bounded(x, free)
            idx = -1
            for i in range(n):
                if not taken[i]:
                    if r == 0:
                        idx = i
                        break
                    r -= 1
        out[d] = idx
        taken[idx] = True
        w[idx] = 0.0
    return out, s


@njit(cache=True)
def _nb_derange(state, k):
    perm = np.arange(k)
    s = state
    if k < 2:
        return perm, s, 0
    attempts = 0
    while True:
        attempts += 1
        for i in range(k):
            perm[i] = i
        for i in range(k - 1, 0, -1):
            s = s + np.uint64(GOLDEN)
            j = _nb_bounded(_nb_mix(s), i + 1)
            tmp = perm[i]
            perm[i] = perm[j]
            perm[j] = tmp
        ok = True
        for i in range(k):
            if perm[i] == i:
                ok = False
                break
        if ok:
            return perm, s, attempts


@njit(cache=True)
def _nb_block_mapping(state, n, k, weights):
    if weights.shape[0] == 0:
        chosen, s = _nb_select_uniform(state, n, k)
    else:
        chosen, s = _nb_select_weighted(state, weights, k)
    order, s, _ = _nb_derange(s, k)
    mapping = np.arange(n)
    for i in range(k):
        mapping[chosen[i]] = chosen[order[i]]
    return mapping, np.sort(chosen), s


@njit(cache=True)
def _nb_omp(D, y, colnorms, t_max, tol):
    m, n = D.shape
    ynorm = np.sqrt(np.dot(y, y))
    norms = np.empty(t_max + 1)
    norms[0] = ynorm
    support = np.zeros(t_max, dtype=np.int64)
    if ynorm == 0.0 or t_max == 0:
        return support[:0].copy(), np.zeros(0), norms[:1].copy(), False
    Q = np.zeros((t_max, m))
    R = np.zeros((t_max, t_max))
    z = np.zeros(t_max)
    w = np.zeros(t_max)
    w2 = np.zeros(t_max)
    active = np.zeros(n, dtype=np.bool_)
    r = y.copy()
    stop = tol * ynorm
    t = 0
    deficient = False
    while t < t_max and norms[t] > stop:
        c = np.dot(D.T, r)
        best = -1.0
        j = 0
        for i in range(n):
            if active[i] or colnorms[i] <= 0.0:
                continue
            sc = abs(c[i]) / colnorms[i]
            if sc > best:
                best = sc
                j = i
        d = D[:, j].copy()
        # classical Gram-Schmidt, applied twice
        for a in range(t):
            w[a] = np.dot(Q[a], d)
        v = d.copy()
        for a in range(t):
            v -= w[a] * Q[a]
        for a in range(t):
            w2[a] = np.dot(Q[a], v)
        for a in range(t):
            v -= w2[a] * Q[a]
            w[a] += w2[a]
        rho = np.sqrt(np.dot(v, v))
        if not rho > RANK_TOL * colnorms[j]:
            deficient = True
            break
        q = v / rho
        Q[t] = q
        for a in range(t):
            R[a, t] = w[a]
        R[t, t] = rho
        z[t] = np.dot(q, r)
        r -= z[t] * q
        support[t] = j
        active[j] = True
        t += 1
        norms[t] = np.sqrt(np.dot(r, r))
    coef = np.zeros(t)
    for a in range(t - 1, -1, -1):
        acc = z[a]
        for b in range(a + 1, t):
            acc -= R[a, b] * coef[b]
        coef[a] = acc / R[a, a]
    return support[:t].copy(), coef, norms[: t + 1].copy(), deficient


# numba wrappers: same call shape as the numpy versions


def nb_splitmix_fill(state, count):
    out, s = _nb_fill(np.uint64(state), count)
    return out, int(s)


def nb_gaussian_fill(state, count):
    out, s = _nb_gaussian(np.uint64(state), count)
    return out, int(s)


def nb_select_uniform(state, n, k):
    out, s = _nb_select_uniform(np.uint64(state), n, k)
    return out.astype(np.int64), int(s)


def nb_select_weighted(state, weights, k):
    out, s = _nb_select_weighted(np.uint64(state), np.ascontiguousarray(weights, dtype=np.float64), k)
    return out, int(s)


def nb_derange(state, k):
    perm, s, attempts = _nb_derange(np.uint64(state), k)
    return perm.astype(np.int64), int(s), int(attempts)


def nb_block_mapping(state, n, k, weights):
    mapping, moved, s = _nb_block_mapping(np.uint64(state), n, k, np.ascontiguousarray(weights, dtype=np.float64))
    return mapping, moved, int(s)


def nb_next_uniform(state):
    out, s = _nb_fill(np.uint64(state), 1)
    return float(out[0] >> np.uint64(11)) * INV_2_53, int(s)


def nb_omp(D, y, colnorms, t_max, tol):
    support, coef, norms, deficient = _nb_omp(
        np.ascontiguousarray(D, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.float64),
        np.ascontiguousarray(colnorms, dtype=np.float64),
        int(t_max),
        float(tol),
    )
    return support, coef, norms, bool(deficient)


NAMES = (
    "splitmix_fill",
    "gaussian_fill",
    "select_uniform",
    "select_weighted",
    "derange",
    "block_mapping",
    "next_uniform",
    "omp",
)

if USE_NUMBA:
    splitmix_fill = nb_splitmix_fill
    gaussian_fill = nb_gaussian_fill
    select_uniform = nb_select_uniform
    select_weighted = nb_select_weighted
    derange = nb_derange
    block_mapping = nb_block_mapping
    next_uniform = nb_next_uniform
    omp = nb_omp
else:
    splitmix_fill = np_splitmix_fill
    gaussian_fill = np_gaussian_fill
    select_uniform = np_select_uniform
    select_weighted = np_select_weighted
    derange = np_derange
    block_mapping = np_block_mapping
    next_uniform = np_next_uniform
    omp = np_omp
