"""Sensor assembly geometry, NV ensemble sampling and CW ODMR spectrum
synthesis.

Each NV contributes two unit-peak Lorentzian dips at its transition
frequencies, computed from the full 3x3 Hamiltonian with the dipole field of
the magnet projected into that NV's frame.  With 2 n_nv lines in total, each
line carries weight contrast / (2 n_nv): a spectrum where every line
coincides has dip depth exactly `contrast`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, GeometryError
from .magnet_model import Magnet, dipole_field_many, magnetic_moment
from .spin_model import SpinSystem, d_of_t, transition_pair_batch

# The four NV symmetry axes (<111> family) in the crystal frame.
TETRAHEDRAL_AXES = np.array(
    [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float
) / np.sqrt(3.0)

_LINE_CHUNK = 256  # Lorentzian accumulation block size (memory bound)


@dataclass(frozen=True)
class SensorAssembly:
    """Relative geometry of FND and magnet plus NV ensemble statistics.

    The default numbers are the design point used throughout: 200 nm magnet
    diameter, 50 nm gap, 100 nm FND with 500 NV centres.  line_width is the
    intrinsic per-NV ODMR FWHM (microwave power broadening folded in);
    contrast is the full-coincidence dip depth and is held temperature
    independent (flagged in report headers).
    """

    magnet: Magnet = None                  # None = bare FND
    fnd_center: tuple = (0.0, 0.0, 200e-9)
    fnd_radius: float = 50e-9
    n_nv: int = 500
    crystal_orientation: tuple = None      # 3x3 rotation crystal -> lab; None = identity
    strain_mean: float = 4e6               # Hz
    strain_sd: float = 2e6                 # Hz
    line_width: float = 8e6                # Hz FWHM per NV
    contrast: float = 0.2
    photon_rate: float = 12e6              # counts/s total
    rng_seed: int = 0
    bias_field: tuple = (0.0, 0.0, 0.0)    # uniform applied field, lab frame (T)
    spin: SpinSystem = field(default_factory=SpinSystem)

    def __post_init__(self):
        if self.n_nv < 1:
            raise DomainError(f"n_nv must be >= 1, got {self.n_nv}")
        if any(c != 0.0 for c in self.spin.field):
            raise DomainError(
                "per-site fields are computed from the magnet and bias_field; "
                "the spin template must carry a zero field")
        object.__setattr__(self, "bias_field",
                           tuple(float(c) for c in self.bias_field))
        if not 0.0 < self.contrast < 1.0:
            raise DomainError(f"contrast must lie in (0, 1), got {self.contrast}")
        if self.line_width <= 0:
            raise DomainError(f"line_width must be positive, got {self.line_width}")
        if self.photon_rate <= 0:
            raise DomainError(f"photon_rate must be positive, got {self.photon_rate}")
        if self.fnd_radius <= 0:
            raise DomainError(f"fnd_radius must be positive, got {self.fnd_radius}")
        if self.strain_sd < 0 or self.strain_mean < 0:
            raise DomainError("strain parameters must be >= 0")
        object.__setattr__(self, "fnd_center",
                           tuple(float(c) for c in self.fnd_center))
        if self.crystal_orientation is not None:
            rot = np.asarray(self.crystal_orientation, dtype=float)
            if rot.shape != (3, 3):
                raise DomainError("crystal_orientation must be a 3x3 rotation")
            if not np.allclose(rot @ rot.T, np.eye(3), atol=1e-9):
                raise DomainError("crystal_orientation is not orthogonal")
            object.__setattr__(self, "crystal_orientation",
                               tuple(tuple(float(x) for x in row) for row in rot))
        if self.magnet is not None and self.gap < 0:
            raise GeometryError(
                f"FND and magnet overlap: surface gap {self.gap:.3e} m"
            )

    @property
    def gap(self) -> float:
        """Surface-to-surface separation of FND and magnet (m)."""
        if self.magnet is None:
            return np.inf
        d = np.linalg.norm(np.asarray(self.fnd_center)
                           - np.asarray(self.magnet.center))
        return float(d - self.fnd_radius - self.magnet.radius)

    def rotation(self) -> np.ndarray:
        if self.crystal_orientation is None:
            return np.eye(3)
        return np.asarray(self.crystal_orientation, dtype=float)


@dataclass(frozen=True)
class NvSite:
    position: tuple    # m, lab frame
    axis: tuple        # unit vector, lab frame
    strain_e: float    # Hz


@dataclass(frozen=True)
class OdmrSpectrum:
    freqs: np.ndarray
    signal: np.ndarray
    meta: dict


def sample_ensemble(asm: SensorAssembly):
    """Draw the NV sites: positions uniform in the FND ball, axes uniform on
    the four rotated <111> directions, strain from a truncated-at-zero
    normal.  Each site uses its own RNG stream spawned from the master seed,
    so any execution order (or parallel map) reproduces the same list.
    """
    axes = TETRAHEDRAL_AXES @ asm.rotation().T
    center = np.asarray(asm.fnd_center)
    children = np.random.SeedSequence(asm.rng_seed).spawn(asm.n_nv)
    sites = []
    for child in children:
        rng = np.random.default_rng(child)
        direction = rng.standard_normal(3)
        norm = np.linalg.norm(direction)
        while norm < 1e-12:
            direction = rng.standard_normal(3)
            norm = np.linalg.norm(direction)
        radius = asm.fnd_radius * rng.random() ** (1.0 / 3.0)
        pos = center + radius * direction / norm
        axis = axes[rng.integers(4)]
        strain = rng.normal(asm.strain_mean, asm.strain_sd) if asm.strain_sd > 0 \
            else asm.strain_mean
        while strain < 0.0:
            strain = rng.normal(asm.strain_mean, asm.strain_sd)
        sites.append(NvSite(position=tuple(pos), axis=tuple(axis),
                            strain_e=float(strain)))
    return sites


def nv_frame(axis) -> np.ndarray:
    """Orthonormal frame (rows e1, e2, e3) with e3 along the NV axis.

    The transverse pair fixes the strain-axis convention; its in-plane
    orientation is arbitrary so a deterministic choice is used.
    """
    e3 = np.asarray(axis, dtype=float)
    e3 = e3 / np.linalg.norm(e3)
    ref = np.array([1.0, 0.0, 0.0]) if abs(e3[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = ref - np.dot(ref, e3) * e3
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(e3, e1)
    return np.vstack([e1, e2, e3])


def site_transition_pairs(asm: SensorAssembly, temp: float, sites):
    """(omega_minus, omega_plus) arrays over the given sites at temperature
    temp, with the magnet's dipole field projected into each NV frame."""
    positions = np.array([s.position for s in sites])
    strains = np.array([s.strain_e for s in sites])
    if asm.magnet is not None:
        moment = magnetic_moment(asm.magnet, temp)
        b_lab = dipole_field_many(moment, asm.magnet.center, positions,
                                  min_distance=asm.magnet.radius)
    else:
        b_lab = np.zeros_like(positions)
    b_lab = b_lab + np.asarray(asm.bias_field)
    b_nv = np.empty_like(b_lab)
    for i, s in enumerate(sites):
        b_nv[i] = nv_frame(s.axis) @ b_lab[i]
    d = d_of_t(asm.spin, temp)
    return transition_pair_batch(d, strains, asm.spin.gamma, b_nv)


def _accumulate_lorentzians(freqs, centers, fwhm):
    """Sum of unit-peak Lorentzians over all centers, chunked to bound memory."""
    half = 0.5 * fwhm
    total = np.zeros_like(freqs)
    for start in range(0, centers.size, _LINE_CHUNK):
        block = centers[start:start + _LINE_CHUNK]
        total += (half ** 2 / ((freqs[None, :] - block[:, None]) ** 2 + half ** 2)).sum(axis=0)
    return total


def signal_at(asm: SensorAssembly, temp: float, freqs, sites=None) -> np.ndarray:
    """Normalized ODMR signal S(omega; T) on the given frequency grid."""
    if sites is None:
        sites = sample_ensemble(asm)
    freqs = np.asarray(freqs, dtype=float)
    om, op = site_transition_pairs(asm, temp, sites)
    centers = np.concatenate([om, op])
    weight = asm.contrast / (2.0 * len(sites))
    return 1.0 - weight * _accumulate_lorentzians(freqs, centers, asm.line_width)


def default_freq_grid(asm: SensorAssembly, temp: float, sites=None,
                      pad: float = 6.0, max_points: int = 30001) -> np.ndarray:
    """Frequency grid covering every line with `pad` linewidths of margin and
    at least 10 points per linewidth."""
    if sites is None:
        sites = sample_ensemble(asm)
    om, op = site_transition_pairs(asm, temp, sites)
    lo = om.min() - pad * asm.line_width
    hi = op.max() + pad * asm.line_width
    n = int(np.ceil((hi - lo) / (asm.line_width / 10.0))) + 1
    n = min(max(n, 801), max_points)
    return np.linspace(lo, hi, n)


def synthesize_spectrum(asm: SensorAssembly, temp: float, freqs=None,
                        sites=None) -> OdmrSpectrum:
    """Synthesize S(omega; T) and attach per-line metadata.

    Sites are sampled from asm.rng_seed when not supplied; passing the same
    site list at several temperatures gives common-random-number spectra.
    """
    if sites is None:
        sites = sample_ensemble(asm)
    if freqs is None:
        freqs = default_freq_grid(asm, temp, sites)
    freqs = np.asarray(freqs, dtype=float)
    om, op = site_transition_pairs(asm, temp, sites)
    centers = np.concatenate([om, op])
    weight = asm.contrast / (2.0 * len(sites))
    signal = 1.0 - weight * _accumulate_lorentzians(freqs, centers, asm.line_width)
    meta = {
        "temp_k": float(temp),
        "centers_minus_hz": om,
        "centers_plus_hz": op,
        "line_width_hz": asm.line_width,
        "contrast": asm.contrast,
        "n_nv": len(sites),
        "rng_seed": asm.rng_seed,
        "effective_contrast": float(1.0 - signal.min()),
        "effective_width_hz": measure_fwhm(freqs, signal),
        "d_of_t_hz": d_of_t(asm.spin, temp),
        "contrast_model": "temperature independent (no published functional form)",
    }
    return OdmrSpectrum(freqs=freqs, signal=signal, meta=meta)


def signal_temperature_slope(asm: SensorAssembly, temp: float, freqs,
                             dt_step: float = 0.01, sites=None) -> np.ndarray:
    """Central finite difference dS/dT per grid frequency (1/K).

    The same ensemble sample is used at both temp +- dt_step (common random
    numbers), so the difference isolates the physics, not the sampling.
    """
    if dt_step <= 0:
        raise DomainError(f"dt_step must be positive, got {dt_step}")
    if sites is None:
        sites = sample_ensemble(asm)
    hi = signal_at(asm, temp + dt_step, freqs, sites)
    lo = signal_at(asm, temp - dt_step, freqs, sites)
    return (hi - lo) / (2.0 * dt_step)


def measure_fwhm(freqs, signal) -> float:
    """Numeric full width at half depth of the deepest dip (Hz).

    Linear interpolation for the half-depth crossings on either side of the
    global minimum; returns nan when a crossing falls outside the grid.
    """
    freqs = np.asarray(freqs)
    a = 1.0 - np.asarray(signal)
    i0 = int(np.argmax(a))
    half = 0.5 * a[i0]
    left = right = np.nan
    for i in range(i0, 0, -1):
        if a[i - 1] <= half <= a[i]:
            frac = (a[i] - half) / (a[i] - a[i - 1])
            left = freqs[i] + frac * (freqs[i - 1] - freqs[i])
            break
    for i in range(i0, len(a) - 1):
        if a[i + 1] <= half <= a[i]:
            frac = (a[i] - half) / (a[i] - a[i + 1])
            right = freqs[i] + frac * (freqs[i + 1] - freqs[i])
            break
    return float(right - left)


def absorption_second_moment(freqs, signal, lo: float, hi: float) -> float:
    """Second moment (Hz^2) of the absorption 1 - S about its centroid,
    restricted to [lo, hi].  Used to quantify gradient broadening."""
    freqs = np.asarray(freqs)
    a = 1.0 - np.asarray(signal)
    mask = (freqs >= lo) & (freqs <= hi)
    f, w = freqs[mask], a[mask]
    total = np.trapezoid(w, f)
    if total <= 0:
        raise DomainError("no absorption weight in the requested window")
    centroid = np.trapezoid(w * f, f) / total
    return float(np.trapezoid(w * (f - centroid) ** 2, f) / total)


def export_spectrum_csv(spectrum: OdmrSpectrum, path, slope=None,
                        header_lines=()):
    """Write freq_hz, signal[, dsignal_dT] CSV with '#' metadata."""
    lines = ["# critherm odmr spectrum, format_version 1"]
    lines += [f"# {h}" for h in header_lines]
    for key in ("temp_k", "line_width_hz", "contrast", "n_nv", "rng_seed",
                "effective_contrast", "effective_width_hz", "d_of_t_hz"):
        lines.append(f"# {key} = {spectrum.meta[key]!r}")
    cols = "freq_hz,signal" + (",dsignal_dT" if slope is not None else "")
    lines.append(cols)
    for i, f in enumerate(spectrum.freqs):
        row = f"{float(f)!r},{float(spectrum.signal[i])!r}"
        if slope is not None:
            row += f",{float(slope[i])!r}"
        lines.append(row)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
