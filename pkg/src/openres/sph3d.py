"""Spherical hard-wall cavity with cylindrical waveguides attached at
rotated positions.

Cavity modes j_l(kappa_ln r/R) Y_lm with kappa_ln the Neumann roots of
j_l'; each (l, n) level is (2l+1)-fold degenerate over m.  Couplings are
evaluated once for a waveguide at the pole (azimuthal selection m = p,
polar map theta = arcsin(rho/R) on the flat port disk) and rotated to the
actual attachment with Wigner small-d matrices,

    W~_{lmn,pq} = e^{-i m gamma} sum_k e^{-i k alpha} d^l_{mk}(beta) W_{lkn,pq}.

The narrow resonances scale as |W|^2 ~ R^-3 against level spacings ~ R^-2;
the interference trapping between different-l resonances is driven by the
evanescent-channel level shifts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import hcore, specfun
from .cyl3d import MU_11, duct_channels, radial_profile


@dataclass(frozen=True)
class SphereCavity:
    """Hard-wall sphere; ``root_kind`` selects the radial Neumann table:
    "half-integer" roots J'_{l+1/2} (the convention behind the reference
    avoided-crossing pair l=4,n=1 / l=1,n=2) or "spherical" roots j_l'."""

    radius: float = 10.0
    l_max: int = 6
    n_max: int = 3
    root_kind: str = "half-integer"

    def __post_init__(self):
        if self.radius <= 1.0:
            raise ValueError("sphere must exceed the waveguide radius (=1)")
        if self.root_kind not in ("half-integer", "spherical"):
            raise ValueError("root_kind must be 'half-integer' or 'spherical'")

    def kappa(self, l: int, n: int) -> float:
        if self.root_kind == "half-integer":
            return specfun.half_integer_neumann_roots(l, self.n_max)[n]
        return specfun.spherical_neumann_roots(l, self.n_max)[n]

    def mode_labels(self) -> tuple:
        return tuple((l, m, n)
                     for l in range(0, self.l_max + 1)
                     for m in range(-l, l + 1)
                     for n in range(1, self.n_max + 1))

    def energy(self, l: int, n: int) -> float:
        return (self.kappa(l, n) / self.radius) ** 2

    def basis(self) -> hcore.ClosedBasis:
        labels = sorted(self.mode_labels(),
                        key=lambda lmn: (self.energy(lmn[0], lmn[2]), lmn[1]))
        return hcore.ClosedBasis(
            labels=tuple(labels),
            energies=np.array([self.energy(l, n) for (l, m, n) in labels]))

    def radial_surface_amplitude(self, l: int, n: int) -> float:
        """Normalized radial factor at r = R."""
        kap = self.kappa(l, n)
        return math.sqrt(2.0) * kap / (self.radius ** 1.5
                                       * math.sqrt(kap * kap - l * (l + 1)))


@dataclass(frozen=True)
class WaveguideAttachment:
    """Port direction as Euler angles (alpha, beta, gamma); the identity
    attachment is the pole."""

    port: str
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0


def _pole_radial_integrals(cavity: SphereCavity, pq_list, n_rho: int = 64,
                           tol: float = 1e-7) -> dict:
    """I[(l, p, q)] = int_0^1 rho psi_pq(rho) P_l^p(cos theta(rho)) drho with
    theta = arcsin(rho / R); Gauss-Legendre with node-doubling audit."""
    def compute(nn):
        t, wq = np.polynomial.legendre.leggauss(nn)
        rho = 0.5 * (t + 1.0)
        wr = 0.5 * wq * rho
        cos_t = np.sqrt(1.0 - (rho / cavity.radius) ** 2)
        out = {}
        for (p, q) in pq_list:
            duct = radial_profile(p, q, 1.0, rho)
            for l in range(abs(p), cavity.l_max + 1):
                leg = specfun.assoc_legendre(l, abs(p), cos_t)
                if p < 0:
                    leg = leg * ((-1.0) ** abs(p) * math.factorial(l - abs(p))
                                 / math.factorial(l + abs(p)))
                out[(l, p, q)] = float(np.sum(wr * duct * leg))
        return out

    i1 = compute(n_rho)
    i2 = compute(2 * n_rho)
    diff = max(abs(i1[k] - i2[k]) for k in i1)
    if diff > tol:
        raise RuntimeError(f"pole quadrature not converged (change {diff:.2e})")
    return i2


def sphere_pole_coupling(cavity: SphereCavity,
                         channels: hcore.ChannelSet) -> np.ndarray:
    """Coupling rows (l, m, n) x channels for a waveguide at the pole:
    nonzero only for m = p."""
    basis = cavity.basis()
    pq_list = sorted({ch.label[1:] for ch in channels})
    rad = _pole_radial_integrals(cavity, pq_list)
    w = np.zeros((len(basis), len(channels)), dtype=complex)
    for j, ch in enumerate(channels):
        p, q = ch.label[1], ch.label[2]
        for i, (l, m, n) in enumerate(basis.labels):
            if m != p or l < abs(p):
                continue
            norm = math.sqrt((2 * l + 1) * math.factorial(l - m)
                             / (4.0 * math.pi * math.factorial(l + m)))
            w[i, j] = (cavity.radial_surface_amplitude(l, n)
                       * math.sqrt(2.0 * math.pi) * norm * rad[(l, p, q)])
    return w


def rotate_coupling(w_pole: np.ndarray, cavity: SphereCavity,
                    attachment: WaveguideAttachment) -> np.ndarray:
    """Wigner rotation of the pole coupling block to an attachment."""
    basis = cavity.basis()
    idx = {lab: i for i, lab in enumerate(basis.labels)}
    out = np.zeros_like(w_pole)
    a, b, g = attachment.alpha, attachment.beta, attachment.gamma
    for (l, m, n), i in idx.items():
        phase = np.exp(-1j * m * g)
        acc = np.zeros(w_pole.shape[1], dtype=complex)
        for k in range(-l, l + 1):
            d = specfun.wigner_small_d(l, m, k, b)
            if d == 0.0:
                continue
            acc += np.exp(-1j * k * a) * d * w_pole[idx[(l, k, n)]]
        out[i] = phase * acc
    return out


class SphereModel:
    """Open spherical cavity with an arbitrary number of rotated ports."""

    def __init__(self, cavity: SphereCavity, attachments,
                 cutoff_max_sq: float = 16.0):
        self.cavity = cavity
        self.attachments = tuple(attachments)
        ports = tuple(att.port for att in self.attachments)
        if len(set(ports)) != len(ports):
            raise ValueError("port names must be distinct")
        self.channels = duct_channels(cutoff_max_sq, ports=ports)
        pole_chans = duct_channels(cutoff_max_sq, ports=("X",))
        self._pole = sphere_pole_coupling(cavity, pole_chans)
        self._pole_labels = [ch.label[1:] for ch in pole_chans]
        self.basis = cavity.basis()
        w = np.zeros((len(self.basis), len(self.channels)), dtype=complex)
        for att in self.attachments:
            wr = rotate_coupling(self._pole, cavity, att)
            for j, ch in enumerate(self.channels):
                if ch.port != att.port:
                    continue
                col = self._pole_labels.index(ch.label[1:])
                w[:, j] = wr[:, col]
        self._w = w

    def coupling(self) -> hcore.CouplingMatrix:
        return hcore.CouplingMatrix(self._w)

    def __call__(self, omega_sq: float) -> hcore.EffectiveHamiltonian:
        return hcore.assemble(self.basis, self.channels, self.coupling(), omega_sq)


def sphere_model(cavity: SphereCavity, attachments, cutoff_max_sq: float = 16.0):
    return SphereModel(cavity, attachments, cutoff_max_sq)


def sphere_transmittance(model: SphereModel, omega_sq: float):
    s, chans = hcore.smatrix(model(omega_sq), omega_sq)
    return s, chans


def l_block_weights(record: hcore.BICRecord) -> dict:
    """Norm^2 of the null vector per orbital index l."""
    out = {}
    for a, (l, m, n) in zip(record.null_vector, record.labels):
        out[l] = out.get(l, 0.0) + abs(a) ** 2
    return out


def classify_sphere_bic(record: hcore.BICRecord, tol: float = 0.02) -> str:
    """FW trapping mixes different-l blocks; a rotated single multiplet that
    decouples is symmetry-protected."""
    weights = l_block_weights(record)
    major = [l for l, wgt in weights.items() if wgt > tol]
    return "friedrich-wintgen" if len(major) > 1 else "symmetry-protected"


_PROTECTED_FLOOR = 1e-14


def _coupled_narrow_state(model: SphereModel, e_window, probe: float,
                          prev_vec: np.ndarray | None = None):
    """Narrowest in-window eigenpair excluding the exactly-real
    symmetry-protected states; continuity preferred via prev_vec.

    Returns (z, vector) after a light fixed-point refinement."""
    h = model(probe)
    vals, vecs = np.linalg.eig(h.matrix)
    cand = np.where((vals.real > e_window[0]) & (vals.real < e_window[1])
                    & (-vals.imag > _PROTECTED_FLOOR))[0]
    if cand.size == 0:
        cand = np.where((vals.real > e_window[0]) & (vals.real < e_window[1]))[0]
        if cand.size == 0:
            raise RuntimeError("no state inside the energy window")
    if prev_vec is not None:
        ov = np.abs(prev_vec.conj() @ vecs[:, cand]) / np.linalg.norm(vecs[:, cand], axis=0)
        good = cand[ov > 0.5]
        if good.size:
            cand = good
    j = cand[int(np.argmax(vals.imag[cand]))]
    vec = vecs[:, j] / np.linalg.norm(vecs[:, j])
    rec = hcore.solve_resonance(model, float(vals[j].real), branch_vector=vec,
                                max_iter=30)
    return rec.z, rec.vector


def sphere_min_width_scan(cavity: SphereCavity, theta_grid: np.ndarray,
                          e_window, cutoff_max_sq: float = 16.0):
    """Width of the narrowest coupled in-window state along a two-port polar
    sweep; exactly-real protected states are excluded."""
    widths, states = [], []
    prev = None
    probe = 0.5 * (e_window[0] + e_window[1])
    for dt in theta_grid:
        model = sphere_model(
            cavity, (WaveguideAttachment("in"),
                     WaveguideAttachment("out", beta=float(dt))), cutoff_max_sq)
        z, vec = _coupled_narrow_state(model, e_window, probe, prev)
        widths.append(-2.0 * z.imag)
        states.append((z, vec))
        prev, probe = vec, z.real
    return np.array(widths), states


def _mirror_even_seed(cavity: SphereCavity, l: int, n: int) -> np.ndarray:
    """(|l,1,n> - |l,-1,n>)/sqrt(2): the m = +/-1 combination that couples
    to the rotated port's plane-wave channel (d^l_{-1,0} = -d^l_{1,0}, so
    the plus combination decouples identically)."""
    basis = cavity.basis()
    v = np.zeros(len(basis), dtype=complex)
    v[basis.labels.index((l, 1, n))] = 1.0 / math.sqrt(2.0)
    v[basis.labels.index((l, -1, n))] = -1.0 / math.sqrt(2.0)
    return v


def sphere_fw_bic(cavity: SphereCavity, theta_range=(0.55 * math.pi, 0.85 * math.pi),
                  pair=((4, 1), (1, 2)), n_grid: int = 25,
                  cutoff_max_sq: float = 16.0,
                  width_tol: float = hcore.DEFAULT_WIDTH_TOL,
                  null_tol: float = hcore.DEFAULT_NULL_TOL) -> hcore.BICRecord:
    """Interference trapping point of two different-l resonances on the
    two-port polar sweep.

    Tracks the mirror-even m = +/-1 branches of the two (l, n) multiplets
    (default (4,1) and (1,2)), whose avoided crossing - enabled by the
    evanescent-channel level shifts - closes one width; returns the best
    zero-width record, classified by l content."""
    def family(dt):
        return sphere_model(
            cavity, (WaveguideAttachment("in"),
                     WaveguideAttachment("out", beta=float(dt))), cutoff_max_sq)

    grid = np.linspace(theta_range[0], theta_range[1], n_grid)
    basis = cavity.basis()
    best = None
    for (l, n) in pair:
        seed = _mirror_even_seed(cavity, l, n)
        try:
            traj = hcore.track(family, grid, seed_energy=cavity.energy(l, n),
                               branch_vector=seed)
            recs = hcore.find_bics(traj, family, width_tol=width_tol,
                                   null_tol=null_tol, labels=basis.labels)
        except Exception:
            continue
        for rec in recs:
            if best is None or rec.gamma_res < best.gamma_res:
                best = rec
    if best is None:
        raise RuntimeError("no width minimum found on the tracked branches")
    best.classification = classify_sphere_bic(best)
    return best


def surface_field(record: hcore.BICRecord, cavity: SphereCavity,
                  theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """BIC pressure pattern on the sphere surface over a (theta, phi) grid."""
    tg, pg = np.meshgrid(theta, phi, indexing="ij")
    field = np.zeros_like(tg, dtype=complex)
    for a, (l, m, n) in zip(record.null_vector, record.labels):
        if abs(a) < 1e-12:
            continue
        field += (a * cavity.radial_surface_amplitude(l, n)
                  * specfun.spherical_harmonic(l, m, tg, pg))
    return field


def coupling_norm_sq(cavity: SphereCavity, l: int, n: int,
                     pq=(0, 1)) -> float:
    """Squared pole-coupling norm of an (l, n) multiplet to one channel;
    scales as R^-3 at fixed channel."""
    chans = duct_channels(16.0, ports=("X",))
    w = sphere_pole_coupling(cavity, chans)
    basis = cavity.basis()
    j = [k for k, ch in enumerate(chans) if ch.label[1:] == pq][0]
    tot = 0.0
    for i, (ll, m, nn) in enumerate(basis.labels):
        if ll == l and nn == n:
            tot += abs(w[i, j]) ** 2
    return tot
