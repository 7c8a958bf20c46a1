"""Model-agnostic effective non-Hermitian Hamiltonian engine.

A model is a callable ``omega_sq -> EffectiveHamiltonian``.  The engine
assembles

    H_eff(w2) = diag(E_n) + V_static - i * sum_c k_c(w2) W_c W_c^dag,

where the channel wavenumber k_c is real for open channels and i|k_c| for
evanescent ones, so closed channels contribute the Hermitian shift
+|k_c| W_c W_c^dag.  On top of that it provides the flux-normalized
scattering matrix, fixed-point resonance solving for frequency-dependent
couplings, eigenvalue tracking along parameter sweeps with
eigenvector-overlap branch continuation, and zero-width (BIC) detection
with null-vector extraction.

Everything here is pure: assembly and eigensolves build fresh arrays from
immutable inputs, so parameter grid points can be evaluated concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

DEFAULT_WIDTH_TOL = 1e-8
DEFAULT_NULL_TOL = 1e-7
_OVERLAP_CONTINUE = 0.5
_TIE_BREAK = 1e-3
_DENSE_EIG_LIMIT = 250


class StructuralError(ValueError):
    """Inconsistent dimensions between basis, channels and couplings."""


class SingularScattering(RuntimeError):
    """E - H_eff is numerically singular: candidate BIC at this energy."""

    def __init__(self, energy: float, rcond: float):
        super().__init__(f"E - H_eff numerically singular at E={energy} (rcond~{rcond:.2e}); "
                         "candidate BIC")
        self.energy = energy
        self.rcond = rcond


@dataclass(frozen=True)
class Channel:
    """One scattering channel: a port, mode labels and a cutoff.

    ``wavenumber`` implements k = sqrt(w2 - cutoff_sq) above cutoff and
    k = i sqrt(cutoff_sq - w2) below.  ``fixed_k`` freezes the wavenumber
    (energy-independent coupling models).
    """

    port: str
    label: tuple
    cutoff_sq: float
    fixed_k: float | None = None

    def wavenumber(self, omega_sq: float) -> complex:
        if self.fixed_k is not None:
            return complex(self.fixed_k)
        diff = omega_sq - self.cutoff_sq
        if diff >= 0.0:
            return complex(np.sqrt(diff))
        return 1j * np.sqrt(-diff)

    def is_open(self, omega_sq: float) -> bool:
        if self.fixed_k is not None:
            return True
        return omega_sq >= self.cutoff_sq


class ChannelSet:
    """Channels sorted by (port, cutoff); iteration order is matrix order."""

    def __init__(self, channels: Sequence[Channel]):
        self.channels = tuple(sorted(channels, key=lambda c: (str(c.port), c.cutoff_sq,
                                                              str(c.label))))

    def __len__(self):
        return len(self.channels)

    def __iter__(self):
        return iter(self.channels)

    def __getitem__(self, i):
        return self.channels[i]

    def wavenumbers(self, omega_sq: float) -> np.ndarray:
        return np.array([c.wavenumber(omega_sq) for c in self.channels])

    def open_indices(self, omega_sq: float) -> np.ndarray:
        return np.array([i for i, c in enumerate(self.channels) if c.is_open(omega_sq)],
                        dtype=int)

    def ports(self) -> tuple:
        seen = []
        for c in self.channels:
            if c.port not in seen:
                seen.append(c.port)
        return tuple(seen)


@dataclass(frozen=True)
class ClosedBasis:
    """Truncated eigenbasis of the closed cavity (E = omega^2 convention)."""

    labels: tuple
    energies: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        object.__setattr__(self, "energies", e)
        if len(self.labels) != e.size:
            raise StructuralError("labels and energies differ in length")
        if len(set(self.labels)) != len(self.labels):
            raise StructuralError("basis labels must be unique")

    def __len__(self):
        return len(self.labels)


@dataclass(frozen=True)
class CouplingMatrix:
    """Complex coupling block: rows = basis modes, columns = channels."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2:
            raise StructuralError("coupling must be a 2-d matrix")
        if not np.all(np.isfinite(m)):
            raise StructuralError("coupling entries must be finite")


@dataclass(frozen=True)
class EffectiveHamiltonian:
    matrix: np.ndarray
    basis: ClosedBasis
    channels: ChannelSet
    coupling: CouplingMatrix
    omega_sq: float


def assemble(basis: ClosedBasis, channels: ChannelSet, coupling: CouplingMatrix,
             omega_sq: float, static: np.ndarray | None = None) -> EffectiveHamiltonian:
    """Build H_eff(omega_sq) = diag(E) + V - i sum_c k_c W_c W_c^dag."""
    w = coupling.matrix
    n = len(basis)
    if w.shape != (n, len(channels)):
        raise StructuralError(f"coupling shape {w.shape} does not match "
                              f"{n} modes x {len(channels)} channels")
    h = np.diag(basis.energies.astype(complex))
    if static is not None:
        v = np.asarray(static)
        if v.shape != (n, n):
            raise StructuralError("static perturbation has wrong shape")
        h = h + v
    k = channels.wavenumbers(omega_sq)
    # evanescent channels have k = i|k|; -i*k W W^dag then becomes the
    # Hermitian shift +|k| W W^dag
    h = h - 1j * np.einsum("c,ic,jc->ij", k, w, w.conj())
    return EffectiveHamiltonian(matrix=h, basis=basis, channels=channels,
                                coupling=coupling, omega_sq=omega_sq)


def green(heff: EffectiveHamiltonian, energy: float) -> np.ndarray:
    """Green function (E - H_eff)^(-1) with singularity detection."""
    import warnings

    a = energy * np.eye(heff.matrix.shape[0]) - heff.matrix
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(a)
    diag = np.abs(np.diag(lu))
    rcond = diag.min() / max(diag.max(), 1e-300)
    if rcond < 1e-14:
        raise SingularScattering(energy, rcond)
    return sla.lu_solve((lu, piv), np.eye(a.shape[0], dtype=complex))


def smatrix(heff: EffectiveHamiltonian, energy: float | None = None):
    """Scattering matrix over the open channels at ``energy``.

    S_cc' = delta_cc' - 2i sqrt(k_c k_c') W_c^dag G W_c' with
    G = (E - H_eff)^(-1); unitary for lossless (real-parameter) models.
    Returns (S, open_channels).
    """
    if energy is None:
        energy = heff.omega_sq
    idx = heff.channels.open_indices(energy)
    if idx.size == 0:
        raise ValueError(f"no open channel at E={energy}")
    w = heff.coupling.matrix[:, idx]
    k = np.array([heff.channels[i].wavenumber(energy).real for i in idx])
    g = green(heff, energy)
    core = w.conj().T @ g @ w
    flux = np.sqrt(k)
    s = np.eye(idx.size, dtype=complex) - 2j * (flux[:, None] * core * flux[None, :])
    return s, [heff.channels[i] for i in idx]


@dataclass
class ResonanceRecord:
    """A fixed-point-solved complex eigenvalue z = E_r - i Gamma/2."""

    z: complex
    vector: np.ndarray
    param: float | None = None
    converged: bool = True
    iterations: int = 0

    @property
    def energy(self) -> float:
        return self.z.real

    @property
    def width(self) -> float:
        return -2.0 * self.z.imag


@dataclass
class BICRecord:
    """A zero-width resonance: parameter point, frequency and null vector."""

    param: float
    omega_sq: float
    null_vector: np.ndarray
    gamma_res: float
    residual: float
    is_bic: bool
    labels: tuple = ()
    classification: str | None = None

    def modal_expansion(self):
        return bic_mode(self, self.labels)


def _eig_full(h: np.ndarray):
    return np.linalg.eig(h)


def _rqi(h: np.ndarray, v0: np.ndarray, max_steps: int = 10):
    """Rayleigh-quotient iteration from a known approximate eigenvector.

    Returns (lam, v) or None on stagnation; cost is one LU per step."""
    import warnings

    n = h.shape[0]
    v = v0 / np.linalg.norm(v0)
    scale = max(1.0, float(np.max(np.abs(np.diag(h)))))
    lam = complex(v.conj() @ h @ v)
    for _ in range(max_steps):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            try:
                lu, piv = sla.lu_factor(h - lam * np.eye(n))
                w = sla.lu_solve((lu, piv), v)
            except (sla.LinAlgError, ValueError):
                return None
        nw = np.linalg.norm(w)
        if not np.isfinite(nw) or nw == 0.0:
            return None
        v = w / nw
        lam = complex(v.conj() @ h @ v)
        res = np.linalg.norm(h @ v - lam * v)
        if res <= 1e-11 * scale:
            return lam, v
    return (lam, v) if res <= 1e-8 * scale else None


def _eig_near(h: np.ndarray, sigma: complex, k: int = 8, iters: int = 6):
    """A few eigenpairs of h nearest sigma via shifted inverse subspace
    iteration + Rayleigh-Ritz; falls back to dense eig on stagnation."""
    n = h.shape[0]
    k = min(k, n)
    a = h - sigma * np.eye(n)
    try:
        lu, piv = sla.lu_factor(a)
    except sla.LinAlgError:
        return _eig_full(h)
    diag = np.abs(np.diag(lu))
    if diag.min() / max(diag.max(), 1e-300) < 1e-15:
        lu, piv = sla.lu_factor(a + 1e-10 * np.eye(n))
    rng = np.random.default_rng(7)
    q = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    q, _ = np.linalg.qr(q)
    for _ in range(iters):
        q = sla.lu_solve((lu, piv), q)
        q, _ = np.linalg.qr(q)
    t = q.conj().T @ h @ q
    vals, vecs = np.linalg.eig(t)
    vecs = q @ vecs
    # residual check; bad subspaces fall back to dense
    res = np.linalg.norm(h @ vecs - vecs * vals[None, :], axis=0)
    if np.any(res[np.argsort(np.abs(vals - sigma))[: min(3, k)]] > 1e-8 * np.linalg.norm(h)):
        return _eig_full(h)
    return vals, vecs


def _eig(h: np.ndarray, sigma: complex | None = None):
    if sigma is None or h.shape[0] <= _DENSE_EIG_LIMIT:
        return _eig_full(h)
    return _eig_near(h, sigma)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _pick_branch(vals: np.ndarray, vecs: np.ndarray, seed_energy: float,
                 branch_vector: np.ndarray | None, prev_z: complex | None = None):
    """Branch selection: eigenvector overlap when available, else nearest
    real part; ties within 1e-3 broken by smallest |z - prev_z|."""
    if branch_vector is None:
        i = int(np.argmin(np.abs(vals.real - seed_energy)))
        return i
    ov = np.abs(branch_vector.conj() @ vecs) / np.linalg.norm(vecs, axis=0)
    order = np.argsort(-ov)
    best = order[0]
    if prev_z is not None and order.size > 1 and ov[order[0]] - ov[order[1]] < _TIE_BREAK:
        pair = order[:2]
        best = pair[int(np.argmin(np.abs(vals[pair] - prev_z)))]
    return int(best)


def _branch_eig(h: np.ndarray, sigma: float, vec: np.ndarray | None,
                prev_z: complex | None):
    """One branch eigenpair of h: dense for small problems or cold starts,
    warm Rayleigh-quotient iteration from the previous vector otherwise."""
    n = h.shape[0]
    if vec is not None and n > _DENSE_EIG_LIMIT:
        got = _rqi(h, vec)
        if got is not None and abs(vec.conj() @ _unit(got[1])) >= _OVERLAP_CONTINUE:
            return got[0], _unit(got[1])
    vals, vecs = _eig(h, sigma=sigma if vec is not None else None)
    i = _pick_branch(vals, vecs, sigma, vec, prev_z)
    return vals[i], _unit(vecs[:, i])


def solve_resonance(model: Callable[[float], EffectiveHamiltonian], seed: float,
                    branch_vector: np.ndarray | None = None,
                    max_iter: int = 200, alpha: float = 0.7,
                    tol: float = 1e-10) -> ResonanceRecord:
    """Fixed point E = Re z(E) for one branch, eigenvector-continued.

    First update takes the full step (frequency-frozen couplings then
    converge in one iteration); later steps damp by ``alpha``, with a
    guarded secant acceleration on the residual g(E) = Re z(E) - E.
    """
    e = float(seed)
    vec = branch_vector
    z = None
    e_prev = g_prev = None
    for it in range(1, max_iter + 1):
        h = model(e)
        z, vec = _branch_eig(h.matrix, e, vec, z)
        g = z.real - e
        if abs(g) <= tol * max(1.0, abs(e)):
            return ResonanceRecord(z=z, vector=vec, converged=True, iterations=it)
        if it == 1:
            e_next = z.real
        else:
            e_next = e + alpha * g
            if g_prev is not None and g != g_prev:
                e_sec = e - g * (e - e_prev) / (g - g_prev)
                # secant step accepted only while it stays comparable with
                # the damped one (oscillation guard near avoided crossings)
                if abs(e_sec - e) <= 5.0 * abs(e_next - e):
                    e_next = e_sec
        e_prev, g_prev = e, g
        e = e_next
    return ResonanceRecord(z=z, vector=vec, converged=False, iterations=max_iter)


def resonances(model: Callable[[float], EffectiveHamiltonian],
               seeds: Sequence[float], **kw) -> list[ResonanceRecord]:
    """Fixed-point resonances for several seeds; non-convergence is flagged
    on the record, never dropped."""
    return [solve_resonance(model, s, **kw) for s in seeds]


ModelFamily = Callable[[float], Callable[[float], EffectiveHamiltonian]]


def track(family: ModelFamily, grid: Sequence[float], seed_energy: float,
          branch_vector: np.ndarray | None = None, max_refine: int = 8,
          **kw) -> list[ResonanceRecord]:
    """Follow one resonance branch across a monotone parameter grid.

    Adjacent-point eigenvector overlap below 0.5 triggers grid bisection up
    to ``max_refine`` levels; a branch that stays lost truncates the
    trajectory (diagnostic record flagged unconverged).
    """
    grid = list(grid)
    if len(grid) < 2 or not (np.all(np.diff(grid) > 0) or np.all(np.diff(grid) < 0)):
        raise ValueError("parameter grid must be monotone with >= 2 points")
    first = solve_resonance(family(grid[0]), seed_energy, branch_vector, **kw)
    first.param = grid[0]
    out = [first]
    for p in grid[1:]:
        rec = _continue_branch(family, out[-1], p, max_refine, **kw)
        if rec is None:
            break
        out.append(rec)
    return out


def _continue_branch(family, prev: ResonanceRecord, p: float, depth: int,
                     **kw) -> ResonanceRecord | None:
    rec = solve_resonance(family(p), prev.energy, prev.vector, **kw)
    overlap = abs(prev.vector.conj() @ rec.vector)
    if overlap >= _OVERLAP_CONTINUE:
        rec.param = p
        return rec
    if depth <= 0:
        return None
    mid = 0.5 * (prev.param + p)
    if mid == prev.param or mid == p:
        return None
    rec_mid = _continue_branch(family, prev, mid, depth - 1, **kw)
    if rec_mid is None:
        return None
    return _continue_branch(family, rec_mid, p, depth - 1, **kw)


def _golden_minimize(fun, a: float, b: float, tol: float):
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while abs(b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    x = c if fc < fd else d
    return x, min(fc, fd)


def find_bics(trajectory: Sequence[ResonanceRecord], family: ModelFamily,
              width_tol: float = DEFAULT_WIDTH_TOL, null_tol: float = DEFAULT_NULL_TOL,
              param_tol: float = 1e-10, labels: tuple = ()) -> list[BICRecord]:
    """Zero-width points of a tracked branch.

    Local minima of Gamma(p) are refined by golden section to ``param_tol``;
    minima above ``width_tol`` are kept as quasi-BIC records (is_bic False).
    The null vector is the eigenvector of smallest |Im z| near the branch
    energy; its residual ||(w2 - H_eff) a|| / ||a|| must pass ``null_tol``.
    """
    recs = [r for r in trajectory if r.converged]
    if len(recs) < 3:
        return []
    widths = np.array([r.width for r in recs])
    out = []
    for i in range(1, len(recs) - 1):
        if not (widths[i] <= widths[i - 1] and widths[i] <= widths[i + 1]):
            continue
        seed = recs[i]

        def branch_width(p, _seed=seed):
            r = solve_resonance(family(p), _seed.energy, _seed.vector)
            return r.width if r.converged else np.inf

        p_star, _ = _golden_minimize(branch_width, recs[i - 1].param, recs[i + 1].param,
                                     param_tol)
        rec = solve_resonance(family(p_star), seed.energy, seed.vector)
        out.append(_bic_record_from(rec, family, p_star, width_tol, null_tol, labels))
    return out


def _bic_record_from(rec: ResonanceRecord, family: ModelFamily, p: float,
                     width_tol: float, null_tol: float, labels: tuple) -> BICRecord:
    model = family(p)
    w2 = rec.energy
    h = model(w2)
    vals, vecs = _eig(h.matrix)
    # minimal-|Im| pick restricted to the tracked branch neighborhood: the
    # spectrum may hold unrelated exactly-real (symmetry-protected)
    # eigenvalues that must not be grabbed
    window = max(10.0 * abs(rec.width), 1e-6 * max(1.0, abs(w2)))
    near = np.where(np.abs(vals.real - w2) <= window)[0]
    if near.size == 0:
        near = np.array([int(np.argmin(np.abs(vals - rec.z)))])
    ov = np.abs(rec.vector.conj() @ vecs[:, near]) / np.linalg.norm(vecs[:, near], axis=0)
    same_branch = near[ov >= 0.5]
    pool = same_branch if same_branch.size else near
    j = pool[int(np.argmin(np.abs(vals.imag[pool])))]
    a = _unit(vecs[:, j])
    residual = float(np.linalg.norm((w2 * np.eye(len(a)) - h.matrix) @ a))
    gamma = -2.0 * vals[j].imag
    return BICRecord(param=p, omega_sq=w2, null_vector=a, gamma_res=gamma,
                     residual=residual,
                     is_bic=bool(gamma <= width_tol and residual <= null_tol),
                     labels=tuple(labels) or tuple(h.basis.labels))


def bic_mode(record: BICRecord, labels: Sequence) -> list[tuple]:
    """Unit-norm modal expansion of a BIC, sorted by |a_n| descending."""
    a = _unit(np.asarray(record.null_vector))
    order = np.argsort(-np.abs(a))
    lab = list(labels) if len(labels) else list(range(a.size))
    return [(lab[i], complex(a[i])) for i in order]


def particular_solution(heff: EffectiveHamiltonian, rhs: np.ndarray) -> np.ndarray:
    """Minimum-norm particular solution of (w2 - H_eff) psi = rhs (orthogonal
    to the null space at a BIC point)."""
    a = heff.omega_sq * np.eye(heff.matrix.shape[0]) - heff.matrix
    return np.linalg.lstsq(a, rhs, rcond=1e-10)[0]
