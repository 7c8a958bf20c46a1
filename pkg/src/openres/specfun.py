"""Special-function kernel shared by all resonator models.

Provides cylindrical Bessel functions J_p (integer and half-integer order)
with derivatives, the Neumann root tables mu_pq solving J'_p(mu) = 0 that
define hard-wall waveguide cutoffs, spherical Bessel functions and their
Neumann roots, associated Legendre polynomials, spherical harmonics, and
Wigner small-d rotation matrices.

Evaluation strategy: ascending series for small argument, Miller backward
recurrence with normalization otherwise; half-integer orders go through the
spherical-Bessel closed forms.  All functions are pure and accept scalars or
numpy arrays in the argument; root tables are computed once and reused.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

_SERIES_CUTOFF = 2.0
_ROOT_GRID_STEP = 0.05
_ROOT_BISECT_TOL = 1e-13


def _validate_order(p) -> tuple[int, bool]:
    """Return (2p, is_half_integer); reject anything but p = n or n + 1/2, p >= 0."""
    twop = 2.0 * p
    if not np.isfinite(twop) or twop < 0 or abs(twop - round(twop)) > 1e-12:
        raise ValueError(f"order must be a nonnegative integer or half-integer, got {p}")
    twop = int(round(twop))
    return twop, twop % 2 == 1


def _jn_series(n: int, x: np.ndarray) -> np.ndarray:
    """Ascending series for integer-order J_n, reliable for |x| < ~9."""
    half = 0.5 * x
    term = np.ones_like(x)
    for k in range(1, n + 1):
        term = term * half / k
    total = term.copy()
    msq = -(half * half)
    for m in range(1, 60):
        term = term * msq / (m * (m + n))
        total += term
        if np.all(np.abs(term) <= 1e-18 * (np.abs(total) + 1e-300)):
            break
    return total


def _jn_miller(nmax: int, x: np.ndarray) -> np.ndarray:
    """All orders J_0..J_nmax by backward recurrence, normalized via
    J_0 + 2*sum J_2m = 1.  Requires x > 0."""
    xmax = float(np.max(x))
    start = int(xmax + nmax + 25 + 12.0 * math.sqrt(max(xmax, nmax, 1.0)))
    jp1 = np.zeros_like(x)
    j = np.full_like(x, 1e-300)
    out = np.zeros((nmax + 1, x.size))
    norm = np.zeros_like(x)
    for n in range(start, 0, -1):
        jm1 = (2.0 * n / x) * j - jp1
        jp1, j = j, jm1
        # rescale to avoid overflow on long recurrences
        big = np.abs(j) > 1e280
        if np.any(big):
            j[big] *= 1e-280
            jp1[big] *= 1e-280
            out[:, big] *= 1e-280
            norm[big] *= 1e-280
        n -= 1  # j now holds J~_n
        if n <= nmax:
            out[n] = j
        if n > 0 and n % 2 == 0:
            norm += 2.0 * j
    norm += j  # J~_0
    return out / norm


def _jn_table(nmax: int, x: np.ndarray) -> np.ndarray:
    """J_0..J_nmax at every x (array), mixing series and Miller regions."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((nmax + 1, x.size))
    small = x < _SERIES_CUTOFF
    if np.any(small):
        xs = x[small]
        for n in range(nmax + 1):
            out[n, small] = _jn_series(n, xs)
    if np.any(~small):
        out[:, ~small] = _jn_miller(nmax, x[~small])
    return out


def spherical_jl(lmax: int, x) -> np.ndarray:
    """Spherical Bessel functions j_0..j_lmax, shape (lmax+1, len(x)).

    Downward recurrence normalized by j_0 = sin(x)/x; power-series limit
    below x = 1e-4 where the recurrence loses accuracy.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros((lmax + 2, x.size))
    tiny = x < 1e-4
    xs = np.where(tiny, 1.0, x)

    start = lmax + 1 + int(20 + np.max(xs))
    jp1 = np.zeros_like(xs)
    j = np.full_like(xs, 1e-300)
    tab = np.zeros((lmax + 2, xs.size))
    for n in range(start, 0, -1):
        jm1 = ((2.0 * n + 1.0) / xs) * j - jp1
        jp1, j = j, jm1
        big = np.abs(j) > 1e280
        if np.any(big):
            j[big] *= 1e-280
            jp1[big] *= 1e-280
            tab[:, big] *= 1e-280
        if n - 1 <= lmax + 1:
            tab[n - 1] = j
    j0 = np.sin(xs) / xs
    scale = j0 / tab[0]
    out[:, :] = tab * scale

    if np.any(tiny):
        xt = x[tiny]
        for l in range(lmax + 2):
            dfact = math.prod(range(2 * l + 1, 0, -2)) or 1
            out[l, tiny] = xt**l / dfact * (1.0 - xt**2 / (2.0 * (2 * l + 3)))
    return out[: lmax + 1]


def bessel_j(p, x) -> tuple[np.ndarray, np.ndarray]:
    """J_p(x) and J'_p(x) for integer or half-integer order p >= 0.

    Returns a pair (value, derivative); scalar in, scalar out.
    Raises ValueError on non-finite or negative argument.
    """
    scalar = np.isscalar(x)
    shape = np.shape(x)
    x = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError("argument must be finite")
    if np.any(x < 0):
        raise ValueError("argument must be nonnegative")
    twop, half_order = _validate_order(p)

    if not half_order:
        n = twop // 2
        tab = _jn_table(n + 1, x)
        val = tab[n]
        if n == 0:
            der = -tab[1]
        else:
            der = 0.5 * (tab[n - 1] - tab[n + 1])
    else:
        l = (twop - 1) // 2
        pos = x > 0
        xp = np.where(pos, x, 1.0)
        jl = spherical_jl(l + 1, xp)
        # J_{l+1/2} = sqrt(2x/pi) j_l;  j_l' = j_{l-1} - (l+1)/x j_l
        jlm1 = spherical_jl(max(l - 1, 0), xp)[max(l - 1, 0)] if l >= 1 else np.cos(xp) / xp
        jlp = jlm1 - (l + 1.0) / xp * jl[l]
        val = np.sqrt(2.0 * xp / np.pi) * jl[l]
        der = np.sqrt(2.0 / (np.pi * xp)) * (0.5 * jl[l] + xp * jlp)
        val = np.where(pos, val, 0.0)
        der = np.where(pos, der, np.inf if l == 0 else 0.0)

    if scalar:
        return float(val[0]), float(der[0])
    return val.reshape(shape), der.reshape(shape)


def bessel_jp(p, x):
    """Derivative J'_p(x) alone."""
    return bessel_j(p, x)[1]


@dataclass(frozen=True)
class NeumannRootTable:
    """Ordered roots mu_pq of J'_p(mu) = 0 for one azimuthal order.

    For p = 0 the leading entry is mu_01 = 0, the plane-wave channel of a
    hard-wall duct.
    """

    order: int
    roots: tuple[float, ...]

    def __post_init__(self):
        r = np.asarray(self.roots)
        if r.size > 1 and np.any(np.diff(r) <= 0):
            raise ValueError("roots must be strictly increasing")

    def __getitem__(self, q: int) -> float:
        """Root mu_pq, 1-indexed in q."""
        return self.roots[q - 1]


def _bracketed_roots(f, count: int, x0: float = _ROOT_GRID_STEP,
                     step: float = _ROOT_GRID_STEP, limit: float = 60.0):
    """Sign-change bracketing on a uniform grid + bisection to 1e-13."""
    roots = []
    lo = x0
    flo = f(lo)
    while len(roots) < count:
        hi = lo + step
        if hi > limit:
            limit += 30.0  # extend the scan window until enough roots found
            if limit > 1e4:
                break
        fhi = f(hi)
        if flo == 0.0:
            roots.append(lo)
        elif flo * fhi < 0:
            a, b, fa = lo, hi, flo
            while b - a > _ROOT_BISECT_TOL:
                mid = 0.5 * (a + b)
                fm = f(mid)
                if fa * fm <= 0:
                    b = mid
                else:
                    a, fa = mid, fm
            roots.append(0.5 * (a + b))
        lo, flo = hi, fhi
    return roots[:count]


@lru_cache(maxsize=None)
def neumann_roots(p: int, count: int) -> NeumannRootTable:
    """First `count` roots of J'_p, the cutoff table of a circular duct."""
    if count < 1:
        raise ValueError("count must be >= 1")
    want = count - 1 if p == 0 else count
    roots = []
    if want > 0:
        roots = _bracketed_roots(lambda t: bessel_j(p, t)[1], want)
    if p == 0:
        roots = [0.0] + roots
    return NeumannRootTable(order=p, roots=tuple(roots))


@lru_cache(maxsize=None)
def half_integer_neumann_roots(l: int, count: int) -> NeumannRootTable:
    """First `count` positive roots of J'_{l+1/2}(x) = 0."""
    if count < 1:
        raise ValueError("count must be >= 1")
    roots = _bracketed_roots(lambda t: bessel_j(l + 0.5, t)[1], count, x0=0.2)
    return NeumannRootTable(order=l, roots=tuple(roots))


@lru_cache(maxsize=None)
def spherical_neumann_roots(l: int, count: int) -> NeumannRootTable:
    """First `count` positive roots of j_l'(x) = 0 (hard-wall sphere)."""
    if count < 1:
        raise ValueError("count must be >= 1")

    def djl(t):
        ta = np.atleast_1d(t)
        tab = spherical_jl(l + 1, ta)
        jm1 = np.cos(ta) / ta if l == 0 else spherical_jl(l, ta)[l - 1]
        return float((jm1 - (l + 1.0) / ta * tab[l])[0])

    roots = _bracketed_roots(djl, count, x0=0.2)
    return NeumannRootTable(order=l, roots=tuple(roots))


def assoc_legendre(l: int, m: int, x):
    """Associated Legendre P_l^m(x) with the Condon-Shortley phase.

    Accepts scalar or array x in [-1, 1]; |m| <= l required.
    """
    if abs(m) > l:
        raise ValueError(f"need |m| <= l, got l={l}, m={m}")
    scalar = np.isscalar(x)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(np.abs(x) > 1 + 1e-12):
        raise ValueError("argument must lie in [-1, 1]")
    x = np.clip(x, -1.0, 1.0)

    ma = abs(m)
    # P_ma^ma = (-1)^ma (2ma-1)!! (1-x^2)^(ma/2), then raise l
    pmm = np.ones_like(x)
    if ma > 0:
        somx2 = np.sqrt((1.0 - x) * (1.0 + x))
        fact = 1.0
        for _ in range(ma):
            pmm *= -fact * somx2
            fact += 2.0
    if l == ma:
        plm = pmm
    else:
        pm1 = x * (2.0 * ma + 1.0) * pmm
        if l == ma + 1:
            plm = pm1
        else:
            for ll in range(ma + 2, l + 1):
                plm = (x * (2.0 * ll - 1.0) * pm1 - (ll + ma - 1.0) * pmm) / (ll - ma)
                pmm, pm1 = pm1, plm
            plm = pm1 if l == ma + 1 else plm
    if m < 0:
        plm = plm * ((-1.0) ** ma * math.factorial(l - ma) / math.factorial(l + ma))
    return float(plm[0]) if scalar else plm


def spherical_harmonic(l: int, m: int, theta, phi):
    """Y_lm(theta, phi), orthonormal on the unit sphere."""
    if abs(m) > l:
        raise ValueError(f"need |m| <= l, got l={l}, m={m}")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    norm = math.sqrt((2 * l + 1) / (4.0 * math.pi)
                     * math.factorial(l - m) / math.factorial(l + m))
    val = norm * assoc_legendre(l, m, np.cos(theta)) * np.exp(1j * m * phi)
    return complex(val) if val.ndim == 0 else val


def wigner_small_d(l: int, m: int, k: int, beta) -> float | np.ndarray:
    """Small Wigner rotation matrix element d^l_{mk}(beta).

    Real; the (2l+1) x (2l+1) matrix over (m, k) is orthogonal and reduces
    to the identity at beta = 0.
    """
    if abs(m) > l or abs(k) > l:
        raise ValueError(f"need |m|,|k| <= l, got l={l}, m={m}, k={k}")
    beta = np.asarray(beta, dtype=float)
    c = np.cos(0.5 * beta)
    s = np.sin(0.5 * beta)
    pref = math.sqrt(math.factorial(l - m) * math.factorial(l + m)
                     / (math.factorial(l - k) * math.factorial(l + k)))
    total = np.zeros_like(beta)
    for sterm in range(max(0, k - m), min(l + k, l - m) + 1):
        coef = ((-1.0) ** (m - k + sterm)
                * math.comb(l + k, sterm) * math.comb(l - k, m - k + sterm))
        total = total + coef * c ** (2 * l - m + k - 2 * sterm) * s ** (m - k + 2 * sterm)
    out = pref * total
    return float(out) if out.ndim == 0 else out


def wigner_d_matrix(l: int, beta: float) -> np.ndarray:
    """Full d^l(beta) matrix, rows/columns ordered m, k = -l..l."""
    idx = range(-l, l + 1)
    return np.array([[wigner_small_d(l, m, k, beta) for k in idx] for m in idx])
