"""Cylindrical hard-wall resonator with two off-axis circular waveguides.

The waveguides (unit radius) attach to the end faces z = 0 and z = L at an
axis offset r0; the z = L port is rotated about the cavity axis by an angle
dphi.  Rotating a port multiplies its coupling column by e^{i(p-m) dphi}
relative to the unrotated one, and the face factor contributes (-1)^(l-1):

    W^(L)_{mnl;pq} = (-1)^(l-1) e^{i(p-m) dphi} W^(R)_{mnl;pq}.

Overlap integrals are evaluated on the port disk by Gauss-Legendre (radius)
x trapezoid (angle) quadrature with automatic node doubling.  The truncated
three-mode theory around the (0,1,2)/(±1,1,1) crossing is provided in
closed form, including the line of zero-width points in (L, dphi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import hcore, specfun

MU_11 = 1.84118378134067  # first root of J_1'


@dataclass(frozen=True)
class CylCavity:
    radius: float = 3.0
    length: float = 4.0
    m_max: int = 4
    n_max: int = 3
    l_max: int = 6

    def __post_init__(self):
        if self.radius <= 1.0 or self.length <= 0:
            raise ValueError("need radius > waveguide radius (=1) and positive length")

    def mode_labels(self) -> tuple:
        return tuple((m, n, l)
                     for m in range(-self.m_max, self.m_max + 1)
                     for n in range(1, self.n_max + 1)
                     for l in range(1, self.l_max + 1))

    def energy(self, m: int, n: int, l: int) -> float:
        mu = specfun.neumann_roots(abs(m), self.n_max)[n]
        return (mu / self.radius) ** 2 + (math.pi * (l - 1) / self.length) ** 2

    def basis(self) -> hcore.ClosedBasis:
        labels = sorted(self.mode_labels(), key=lambda mnl: self.energy(*mnl))
        return hcore.ClosedBasis(labels=tuple(labels),
                                 energies=np.array([self.energy(*x) for x in labels]))

    def z_factor(self, l: int, z: float) -> float:
        amp = math.sqrt((2.0 - (l == 1)) / self.length)
        return amp * math.cos(math.pi * (l - 1) * z / self.length)


def radial_profile(m: int, n: int, radius: float, r: np.ndarray) -> np.ndarray:
    """Normalized cross-section radial factor of a hard-wall disk mode."""
    m = abs(m)
    mu = specfun.neumann_roots(m, n)[n]
    if mu == 0.0:
        return np.full_like(np.asarray(r, dtype=float), math.sqrt(2.0) / radius)
    jmu, _ = specfun.bessel_j(m, mu)
    jr, _ = specfun.bessel_j(m, mu * np.asarray(r, dtype=float) / radius)
    if m == 0:
        return math.sqrt(2.0) / (radius * jmu) * jr
    return math.sqrt(2.0 / (mu * mu - m * m)) * mu / (radius * jmu) * jr


def duct_channels(cutoff_max_sq: float = 16.0, ports=("R", "L"),
                  q_max: int = 2, p_max: int = 4) -> hcore.ChannelSet:
    """Circular-duct channels (p, q) with cutoffs mu_pq^2 below the cap."""
    chans = []
    for p in range(-p_max, p_max + 1):
        table = specfun.neumann_roots(abs(p), q_max)
        for q in range(1, q_max + 1):
            mu = table[q]
            if mu * mu <= cutoff_max_sq:
                for port in ports:
                    chans.append(hcore.Channel(port, ("pq", p, q), mu * mu))
    return hcore.ChannelSet(chans)


@lru_cache(maxsize=16)
def _disk_quadrature(n_rho: int, n_alpha: int):
    t, wq = np.polynomial.legendre.leggauss(n_rho)
    rho = 0.5 * (t + 1.0)
    wr = 0.5 * wq * rho
    alpha = np.linspace(0.0, 2.0 * math.pi, n_alpha, endpoint=False)
    wa = 2.0 * math.pi / n_alpha
    return rho, wr, alpha, wa


def _disk_overlaps(radius: float, r0: float, m_list, pq_list,
                   n_rho: int, n_alpha: int) -> dict:
    """K[(m, n, p, q)] = (1/2pi) intint psi_pq(rho) e^{i p a} psi_mn(r) e^{-i m phi}."""
    rho, wr, alpha, wa = _disk_quadrature(n_rho, n_alpha)
    rg = np.sqrt(r0 * r0 + rho[:, None] ** 2 + 2.0 * r0 * rho[:, None] * np.cos(alpha)[None, :])
    phig = np.arctan2(rho[:, None] * np.sin(alpha)[None, :],
                      r0 + rho[:, None] * np.cos(alpha)[None, :])
    out = {}
    cav_cache = {}
    duct_cache = {}
    for (m, n) in m_list:
        key = (abs(m), n)
        if key not in cav_cache:
            cav_cache[key] = radial_profile(abs(m), n, radius, rg)
        cav = cav_cache[key] * np.exp(-1j * m * phig)
        for (p, q) in pq_list:
            dk = (abs(p), q)
            if dk not in duct_cache:
                duct_cache[dk] = radial_profile(abs(p), q, 1.0, rho)
            duct = duct_cache[dk][:, None] * np.exp(1j * p * alpha)[None, :]
            val = (wa / (2.0 * math.pi)) * np.sum(wr[:, None] * duct * cav)
            out[(m, n, p, q)] = complex(val)
    return out


@lru_cache(maxsize=32)
def _disk_overlaps_converged(radius: float, m_max: int, n_max: int, r0: float,
                             pq_tuple: tuple, n_rho: int, n_alpha: int,
                             tol: float):
    m_list = [(m, n) for m in range(-m_max, m_max + 1)
              for n in range(1, n_max + 1)]
    pq_list = list(pq_tuple)
    k1 = _disk_overlaps(radius, r0, m_list, pq_list, n_rho, n_alpha)
    for _ in range(3):
        k2 = _disk_overlaps(radius, r0, m_list, pq_list, 2 * n_rho, 2 * n_alpha)
        diff = max(abs(k1[key] - k2[key]) for key in k1)
        if diff <= tol:
            return k2
        k1, n_rho, n_alpha = k2, 2 * n_rho, 2 * n_alpha
    raise RuntimeError(f"disk quadrature did not stabilize (change {diff:.2e})")


def disk_overlaps(cavity: CylCavity, r0: float, pq_list,
                  n_rho: int = 64, n_alpha: int = 256, tol: float = 1e-7) -> dict:
    """Converged port-disk overlaps keyed by (m, n, p, q); node counts double
    until entries stabilize.  Length-independent, cached per geometry."""
    return _disk_overlaps_converged(cavity.radius, cavity.m_max, cavity.n_max,
                                    r0, tuple(pq_list), n_rho, n_alpha, tol)


class CylModel:
    """Open cylindrical resonator with ports at z=0 (unrotated, 'R') and
    z=L (rotated by dphi, 'L')."""

    def __init__(self, cavity: CylCavity, dphi: float, r0: float = 1.5,
                 cutoff_max_sq: float = 16.0, overlaps: dict | None = None):
        self.cavity = cavity
        self.dphi = dphi
        self.r0 = r0
        self.channels = duct_channels(cutoff_max_sq)
        pq = sorted({ch.label[1:] for ch in self.channels})
        self.overlaps = overlaps if overlaps is not None else \
            disk_overlaps(cavity, r0, pq)
        self.basis = cavity.basis()
        self._w = self._coupling_matrix()

    def _coupling_matrix(self) -> np.ndarray:
        cav = self.cavity
        w = np.zeros((len(self.basis), len(self.channels)), dtype=complex)
        for j, ch in enumerate(self.channels):
            _, p, q = ch.label[0], ch.label[1], ch.label[2]
            for i, (m, n, l) in enumerate(self.basis.labels):
                base = self.overlaps[(m, n, p, q)] * cav.z_factor(l, 0.0)
                if ch.port == "R":
                    w[i, j] = base
                else:
                    w[i, j] = (-1.0) ** (l - 1) * np.exp(1j * (p - m) * self.dphi) * base
        return w

    def coupling(self) -> hcore.CouplingMatrix:
        return hcore.CouplingMatrix(self._w)

    def __call__(self, omega_sq: float) -> hcore.EffectiveHamiltonian:
        return hcore.assemble(self.basis, self.channels, self.coupling(), omega_sq)


def cyl_model(cavity: CylCavity, dphi: float, r0: float = 1.5,
              cutoff_max_sq: float = 16.0, overlaps: dict | None = None):
    return CylModel(cavity, dphi, r0, cutoff_max_sq, overlaps)


def cyl_transmittance(model: CylModel, omega_sq: float):
    """S over open channels and the (0,1)->(0,1) L->R transmittance."""
    s, chans = hcore.smatrix(model(omega_sq), omega_sq)
    idx = {(c.port,) + tuple(c.label[1:]): i for i, c in enumerate(chans)}
    t01 = None
    if ("L", 0, 1) in idx and ("R", 0, 1) in idx:
        t01 = s[idx[("L", 0, 1)], idx[("R", 0, 1)]]
    return s, chans, t01


def _stitched_spectra(models, band):
    """Eigen-spectra along a model sequence with branches matched by
    eigenvector overlap; per-branch widths at the branch's own energy."""
    spectra = []
    prev = None
    for model in models:
        probe = 0.5 * (band[0] + band[1])
        vals, vecs = np.linalg.eig(model(probe).matrix)
        # one refinement pass: re-evaluate at each branch's own energy so the
        # width carries the right k(omega)
        order = np.argsort(vals.real)
        vals, vecs = vals[order], vecs[:, order]
        vecs = vecs / np.linalg.norm(vecs, axis=0)
        if prev is not None:
            ov = np.abs(prev.conj().T @ vecs)
            perm = np.argmax(ov, axis=1)
            vals, vecs = vals[perm], vecs[:, perm]
        prev = vecs
        spectra.append((vals, vecs))
    return spectra


def cyl_find_bics(cavity_template: CylCavity, dphi: float, scan: str,
                  grid: np.ndarray, r0: float = 1.5, cutoff_max_sq: float = 16.0,
                  band=(0.05, None), width_tol: float = hcore.DEFAULT_WIDTH_TOL,
                  null_tol: float = hcore.DEFAULT_NULL_TOL) -> list[hcore.BICRecord]:
    """Zero-width points along an L sweep (scan='length') or a rotation sweep
    (scan='angle', grid in radians) in the single-open-channel band.

    Branch widths are stitched along the grid by eigenvector overlap (robust
    through avoided crossings); each local width minimum is golden-refined
    with self-consistent fixed-point solves on the locally identified
    branch."""
    if scan not in ("length", "angle"):
        raise ValueError("scan must be 'length' or 'angle'")
    hi = band[1] if band[1] is not None else MU_11**2 * 0.999
    band = (band[0], hi)

    pq = sorted({ch.label[1:] for ch in duct_channels(cutoff_max_sq)})
    overlaps = disk_overlaps(cavity_template, r0, pq)

    def family(x):
        if scan == "length":
            cav = CylCavity(cavity_template.radius, float(x), cavity_template.m_max,
                            cavity_template.n_max, cavity_template.l_max)
            return cyl_model(cav, dphi, r0, cutoff_max_sq, overlaps)
        return cyl_model(cavity_template, float(x), r0, cutoff_max_sq, overlaps)

    models = [family(x) for x in grid]
    spectra = _stitched_spectra(models, band)
    widths = np.array([[-2.0 * z.imag for z in vals] for vals, _ in spectra])
    energies = np.array([[z.real for z in vals] for vals, _ in spectra])
    out, seen = [], []
    labels = models[0].basis.labels
    nb = widths.shape[1]
    for b in range(nb):
        for i in range(1, len(grid) - 1):
            w = widths[:, b]
            if not (w[i] <= w[i - 1] and w[i] <= w[i + 1] and w[i] < 1e-2):
                continue
            if not (band[0] < energies[i, b] < band[1]):
                continue
            seed_vec = spectra[i][1][:, b]
            seed_e = energies[i, b]

            def branch_width(x, _v=seed_vec, _e=seed_e):
                rec = hcore.solve_resonance(family(x), _e, branch_vector=_v)
                return rec.width if rec.converged else np.inf

            x_star, _ = hcore._golden_minimize(branch_width, grid[i - 1],
                                               grid[i + 1], 1e-10)
            rec = hcore.solve_resonance(family(x_star), seed_e,
                                        branch_vector=seed_vec)
            bic = hcore._bic_record_from(rec, family, x_star, width_tol,
                                         null_tol, labels)
            if not bic.is_bic or not (band[0] < bic.omega_sq < band[1]):
                continue
            if any(abs(bic.param - p) < 1e-4 and abs(bic.omega_sq - q) < 1e-4
                   for p, q in seen):
                continue
            seen.append((bic.param, bic.omega_sq))
            bic.classification = "friedrich-wintgen"
            out.append(bic)
    out.sort(key=lambda r: r.omega_sq)
    return out


def surface_field(record: hcore.BICRecord, cavity: CylCavity,
                  phi: np.ndarray, z: np.ndarray) -> np.ndarray:
    """BIC pressure field on the side wall r = R over a (phi, z) grid."""
    pg, zg = np.meshgrid(phi, z, indexing="ij")
    field = np.zeros_like(pg, dtype=complex)
    for a, (m, n, l) in zip(record.null_vector, record.labels):
        if abs(a) < 1e-12:
            continue
        rad = radial_profile(m, n, cavity.radius, np.array([cavity.radius]))[0]
        zf = np.sqrt((2.0 - (l == 1)) / cavity.length) \
            * np.cos(math.pi * (l - 1) * zg / cavity.length)
        field += a * rad / math.sqrt(2 * math.pi) * np.exp(1j * m * pg) * zf
    return field


def port_channel_projection(record: hcore.BICRecord, model: CylModel) -> dict:
    """Overlap of the BIC boundary field with the open (0,1) duct mode over
    each port disk; vanishes at a converged zero-width point."""
    out = {}
    for j, ch in enumerate(model.channels):
        if ch.label[1:] != (0, 1):
            continue
        out[ch.port] = complex(np.dot(np.conj(model._w[:, j]), record.null_vector))
    return out


# ------------------------------------------------------- truncated theory --

@dataclass(frozen=True)
class TruncatedCMT:
    """Three-mode theory of the (0,1,2)/(±1,1,1) crossing at R=3, r0=1.5.

    Couplings to the open (0,1) channel and the first evanescent (±1,1)
    pair, in 1/sqrt(L) units."""

    w0_coef: float = math.sqrt(2.0) / 3.0   # (1/3) sqrt(2/L) * sqrt(L)
    w1_coef: float = 0.269
    v1_coef: float = 0.1141
    v2_coef: float = -0.0141
    radius: float = 3.0

    def omega111_sq(self) -> float:
        return (MU_11 / self.radius) ** 2


def cmt_levels(tc: TruncatedCMT, length: float, dphi: float, omega_sq: float):
    """Evanescent-shifted closed levels E1, E2(X2-branch), E3(X3-branch)."""
    q11 = math.sqrt(max(MU_11**2 - omega_sq, 0.0))
    v1 = tc.v1_coef / math.sqrt(length)
    v2 = tc.v2_coef / math.sqrt(length)
    e1 = (math.pi / length) ** 2
    base = tc.omega111_sq() + 2.0 * q11 * (v1 * v1 + v2 * v2)
    split = 2.0 * q11 * 2.0 * v1 * v2 * math.cos(dphi)
    return e1, base - split, base + split


def cmt_hamiltonian(tc: TruncatedCMT, length: float, dphi: float,
                    omega_sq: float) -> np.ndarray:
    """Truncated H_eff over (012, 111, -111) via the engine assembly."""
    basis = hcore.ClosedBasis(labels=((0, 1, 2), (1, 1, 1), (-1, 1, 1)),
                              energies=np.array([(math.pi / length) ** 2,
                                                 tc.omega111_sq(),
                                                 tc.omega111_sq()]))
    channels = hcore.ChannelSet([hcore.Channel(port, ("pq", p, 1), cutoff)
                                 for port in ("R", "L")
                                 for p, cutoff in ((0, 0.0), (1, MU_11**2), (-1, MU_11**2))])
    w0 = tc.w0_coef / math.sqrt(length)
    w1 = tc.w1_coef / math.sqrt(length)
    v1 = tc.v1_coef / math.sqrt(length)
    v2 = tc.v2_coef / math.sqrt(length)
    w = np.zeros((3, len(channels)), dtype=complex)
    raw = {(0, 1): np.array([w0, w1, w1]),
           (1, 1): np.array([0.0, v1, v2]),
           (-1, 1): np.array([0.0, v2, v1])}
    ms = np.array([0, 1, -1])
    for j, ch in enumerate(channels):
        p = ch.label[1]
        base = raw[(p, 1)]
        if ch.port == "R":
            w[:, j] = base
        else:
            w[:, j] = (-1.0) ** np.array([1, 0, 0]) * np.exp(1j * (p - ms) * dphi) * base
    return hcore.assemble(basis, channels, hcore.CouplingMatrix(w), omega_sq).matrix


def cmt_bic_length(tc: TruncatedCMT, dphi: float,
                   bracket=(3.5, 7.0)) -> tuple[float, float]:
    """Length L_c(dphi) where E1 crosses the X2 branch self-consistently
    (omega^2 = E1 on the crossing); returns (L_c, omega_sq_c)."""

    def gap(length):
        w2 = (math.pi / length) ** 2
        e1, e2, _ = cmt_levels(tc, length, dphi, w2)
        return e1 - e2

    lc = brentq(gap, bracket[0], bracket[1], xtol=1e-12)
    return lc, (math.pi / lc) ** 2


def cmt_bic_vector(tc: TruncatedCMT, length: float, dphi: float) -> np.ndarray:
    """Zero-width superposition over (012, 111, -111):
    (w1 (1 - e^{-i dphi}), w0 e^{-i dphi}, -w0), normalized."""
    w0 = tc.w0_coef / math.sqrt(length)
    w1 = tc.w1_coef / math.sqrt(length)
    v = np.array([w1 * (1.0 - np.exp(-1j * dphi)),
                  w0 * np.exp(-1j * dphi), -w0])
    return v / np.linalg.norm(v)


def cmt_widths(tc: TruncatedCMT, length: float, dphi: float) -> np.ndarray:
    """Self-consistent resonance widths of the three-mode theory."""
    def model(w2):
        return _CmtWrap(tc, length, dphi)(w2)

    widths = []
    for seed in cmt_levels(tc, length, dphi, (math.pi / length) ** 2):
        rec = hcore.solve_resonance(model, seed)
        widths.append(rec.width)
    return np.array(widths)


class _CmtWrap:
    def __init__(self, tc, length, dphi):
        self.tc, self.length, self.dphi = tc, length, dphi

    def __call__(self, w2):
        h = cmt_hamiltonian(self.tc, self.length, self.dphi, w2)
        basis = hcore.ClosedBasis(labels=((0, 1, 2), (1, 1, 1), (-1, 1, 1)),
                                  energies=np.real(np.diag(h)))
        chans = hcore.ChannelSet([hcore.Channel("R", ("x",), 0.0, fixed_k=1.0)])
        return hcore.EffectiveHamiltonian(matrix=h, basis=basis, channels=chans,
                                          coupling=hcore.CouplingMatrix(np.zeros((3, 1))),
                                          omega_sq=w2)
