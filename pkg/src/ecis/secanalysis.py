"""Counting arguments and success-probability bounds for k-secure keys.

Logarithms in the bounds are natural; mutual information is in bits.

Two permutation counts are exposed on purpose. ``arrangement_count_paper``
is the attacker-search model C(n, k) * n!/(n-k)!, which counts ordered
placements. ``exact_perm_count`` is the true number of permutations with
exactly k moved indices, C(n, k) * D_k. They differ (72 vs 6 at n=4, k=2).
"""
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

BRUTE_FORCE_MAX_N = 12


def _check_nk(n, k):
    if n < 0 or not 0 <= k <= n:
        raise InvalidInputError(f"need 0 <= k <= n, got n={n}, k={k}")


def arrangement_count_paper(n, k):
    """C(n, k) * n! / (n - k)!, as an exact integer."""
    _check_nk(n, k)
    return math.comb(n, k) * math.perm(n, k)


def blind_arrangement_count(n):
    """Search space when k itself is unknown: sum of the above over k = 1..n."""
    return sum(arrangement_count_paper(n, k) for k in range(1, n + 1))


def derangements(k):
    """Number of fixed-point-free permutations of k items (D_0 = 1, D_1 = 0)."""
    if k < 0:
        raise InvalidInputError(f"k must be >= 0, got {k}")
    a, b = 1, 0
    if k == 0:
        return a
    for i in range(2, k + 1):
        a, b = b, (i - 1) * (a + b)
    return b


def exact_perm_count(n, k):
    """Permutations of n items with exactly k non-fixed points: C(n, k) * D_k."""
    _check_nk(n, k)
    return math.comb(n, k) * derangements(k)


def brute_force_perm_count(n, k):
    """Enumerate S_n and count permutations moving exactly k points."""
    _check_nk(n, k)
    if n > BRUTE_FORCE_MAX_N:
        raise InvalidInputError(f"enumeration is limited to n <= {BRUTE_FORCE_MAX_N}")
    return sum(
        1 for p in itertools.permutations(range(n)) if sum(1 for i, v in enumerate(p) if i != v) == k
    )


# The bounds get astronomically small (1e-614 at n=576, k=192), far below
# the float64 range. Each p_suc_* has a log_p_suc_* twin giving the natural
# log, which never underflows; the float versions return 0.0 past ~1e-308.


def log_p_suc_bound(n, k):
    if n < 2 or k < 0:
        raise InvalidInputError(f"need n >= 2 and k >= 0, got n={n}, k={k}")
    return -(k * math.log(n) + k + 1)


def p_suc_bound(n, k):
    """Upper bound exp(-(k ln n + k + 1)) on guessing a k-secure permutation."""
    return math.exp(log_p_suc_bound(n, k))


def log_p_suc_from_l(n, l):
    return -(l * (math.log(n) + 1) + 1)


def p_suc_from_l(n, l):
    """Same bound with a real-valued count l of attacker-relevant moved elements."""
    return math.exp(log_p_suc_from_l(n, l))


def format_log_prob(log_p, digits=10):
    """Decimal scientific notation of exp(log_p), valid far below float range."""
    if log_p == -math.inf:
        return "0"
    log10 = log_p / math.log(10)
    exp10 = math.floor(log10)
    mant = 10 ** (log10 - exp10)
    if round(mant, digits - 1) >= 10:
        mant, exp10 = mant / 10, exp10 + 1
    return f"{mant:.{digits - 1}f}e{exp10:+d}"


def uniform_overlap(n, t):
    """Fraction t(2n - t - 1) / (n(n - 1)) of moved elements that touch a nonzero."""
    if n < 2 or not 0 <= t <= n:
        raise InvalidInputError(f"need n >= 2 and 0 <= t <= n, got n={n}, t={t}")
    return t * (2 * n - t - 1) / (n * (n - 1))


def effective_l_uniform(n, t, k):
    return k * uniform_overlap(n, t)


def log_p_suc_uniform(n, t, k):
    return log_p_suc_from_l(n, effective_l_uniform(n, t, k))


def p_suc_uniform(n, t, k):
    return math.exp(log_p_suc_uniform(n, t, k))


def _check_p(p):
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or not np.all(np.isfinite(p)):
        raise InvalidInputError("p must be a nonempty nonnegative probability vector")
    if abs(p.sum() - 1.0) > 1e-9:
        raise InvalidInputError(f"p must sum to 1, got {p.sum()!r}")
    return p


def nonuniform_overlap(p):
    """1 - (1 - sum p_i^2)^2 for selection weights equal to the nonzero distribution."""
    p = _check_p(p)
    return 1.0 - (1.0 - float(p @ p)) ** 2


def effective_l_nonuniform(k, p):
    return k * nonuniform_overlap(p)


def log_p_suc_nonuniform(n, k, p):
    if n < 2 or k < 0:
        raise InvalidInputError(f"need n >= 2 and k >= 0, got n={n}, k={k}")
    return -(nonuniform_overlap(p) * k * (math.log(n) + 1) + 1)


def p_suc_nonuniform(n, k, p):
    return math.exp(log_p_suc_nonuniform(n, k, p))


@dataclass(frozen=True)
class KThreshold:
    """Minimum security level; ``raw`` is the unclamped ceiling."""

    k: int
    raw: int
    clamped_low: bool = False
    unachievable: bool = False

    def __int__(self):
        return self.k


def _ceil(x):
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


def _clamp(raw, n):
    if raw > n:
        return KThreshold(k=n, raw=raw, unachievable=True)
    if raw < 2:
        return KThreshold(k=2, raw=raw, clamped_low=True)
    return KThreshold(k=raw, raw=raw)


def _check_beta(beta):
    if not 0.0 < beta < 1.0:
        raise InvalidInputError(f"beta must lie in (0, 1), got {beta}")


def min_k_dense(n, beta):
    """Smallest k with exp(-(k ln n + k + 1)) <= beta."""
    _check_beta(beta)
    return _clamp(_ceil((-math.log(beta) - 1) / (math.log(n) + 1)), n)


def min_k_uniform(n, t, beta):
    """ceil(n(n-1)(-ln beta - 1) / (t(2n-t-1)(ln n + 1))), clamped to [2, n]."""
    _check_beta(beta)
    if not 1 <= t <= n:
        raise InvalidInputError(f"t must be in [1, {n}], got {t}")
    raw = _ceil(n * (n - 1) * (-math.log(beta) - 1) / (t * (2 * n - t - 1) * (math.log(n) + 1)))
    return _clamp(raw, n)


def min_k_blind(n, beta):
    """ceil((-n^2 ln beta - 1) / ((2n - 1) ln n + 1)), clamped to [2, n]."""
    _check_beta(beta)
    raw = _ceil((-(n**2) * math.log(beta) - 1) / ((2 * n - 1) * math.log(n) + 1))
    return _clamp(raw, n)


def _quantize(v, bins):
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return np.zeros(v.shape[0], dtype=np.int64)
    idx = np.floor((v - lo) / (hi - lo) * bins).astype(np.int64)
    return np.minimum(idx, bins - 1)


def mutual_information_plugin(xs, ys, bins=16):
    """Plug-in I(X;Y) in bits from an equal-width joint histogram."""
    x = np.asarray(xs, dtype=np.float64).ravel()
    y = np.asarray(ys, dtype=np.float64).ravel()
    if x.size == 0 or y.size == 0:
        raise InvalidInputError("empty samples")
    if x.size != y.size:
        raise InvalidInputError(f"sample lengths differ: {x.size} vs {y.size}")
    if bins < 2:
        raise InvalidInputError(f"bins must be >= 2, got {bins}")
    ix = _quantize(x, bins)
    iy = _quantize(y, bins)
    joint = np.bincount(ix * bins + iy, minlength=bins * bins).reshape(bins, bins) / x.size
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    nz = joint > 0
    mi = float(np.sum(joint[nz] * np.log2(joint[nz] / np.outer(px, py)[nz])))
    return max(mi, 0.0)


@dataclass(frozen=True)
class SecurityReport:
    n: int
    k: int
    t: int
    beta: float
    arrangement_count_paper: int
    exact_perm_count: int
    brute_force_count: int | None
    log_p_suc_bound: float
    effective_l: float
    log_p_suc_uniform: float
    min_k_dense: KThreshold
    min_k_uniform: KThreshold
    min_k_blind: KThreshold
    log_p_suc_nonuniform: float | None = None
    log_base: str = "natural"

    @property
    def p_suc_bound(self):
        return math.exp(self.log_p_suc_bound)

    @property
    def p_suc_uniform(self):
        return math.exp(self.log_p_suc_uniform)

    def rows(self):
        """(label, value) pairs in display order."""
        out = [
            ("n", self.n),
            ("k", self.k),
            ("t", self.t),
            ("beta", self.beta),
            ("arrangement_count_paper", self.arrangement_count_paper),
            ("exact_perm_count", self.exact_perm_count),
            ("counts_agree", self.arrangement_count_paper == self.exact_perm_count),
        ]
        if self.brute_force_count is not None:
            out.append(("brute_force_count", self.brute_force_count))
        out += [
            ("p_suc_bound", format_log_prob(self.log_p_suc_bound)),
            ("ln_p_suc_bound", self.log_p_suc_bound),
            ("overlap_alpha", uniform_overlap(self.n, self.t)),
            ("effective_l", self.effective_l),
            ("p_suc_uniform", format_log_prob(self.log_p_suc_uniform)),
            ("ln_p_suc_uniform", self.log_p_suc_uniform),
        ]
        if self.log_p_suc_nonuniform is not None:
            out.append(("p_suc_nonuniform", format_log_prob(self.log_p_suc_nonuniform)))
            out.append(("ln_p_suc_nonuniform", self.log_p_suc_nonuniform))
        for name in ("min_k_dense", "min_k_uniform", "min_k_blind"):
            th = getattr(self, name)
            out.append((name, th.k))
            if th.unachievable:
                out.append((name + "_note", f"unachievable at n={self.n} (needs {th.raw})"))
            elif th.clamped_low:
                out.append((name + "_note", f"raised to 2 from {th.raw}"))
        out.append(("log_base", self.log_base))
        return out


def security_report(n, k, t, beta=math.exp(-10), p=None):
    _check_nk(n, k)
    brute = brute_force_perm_count(n, k) if n <= 7 else None
    return SecurityReport(
        n=n,
        k=k,
        t=t,
        beta=beta,
        arrangement_count_paper=arrangement_count_paper(n, k),
        exact_perm_count=exact_perm_count(n, k),
        brute_force_count=brute,
        log_p_suc_bound=log_p_suc_bound(n, k),
        effective_l=effective_l_uniform(n, t, k),
        log_p_suc_uniform=log_p_suc_uniform(n, t, k),
        min_k_dense=min_k_dense(n, beta),
        min_k_uniform=min_k_uniform(n, t, beta),
        min_k_blind=min_k_blind(n, beta),
        log_p_suc_nonuniform=None if p is None else log_p_suc_nonuniform(n, k, p),
    )
