"""Mean-field magnetization of a magnetic nanoparticle, the Cu(1-x)Ni(x)
Curie-temperature map, and the dipole field at the NV positions.

The reduced magnetization m(T) = M(T)/M_sat solves the self-consistent
mean-field equation

    m = B_J( 3J/(J+1) * m * Tc / T )

with B_J the Brillouin function.  A uniformly magnetized sphere produces an
exactly dipolar field outside itself, so the point-dipole formula is exact
beyond the particle radius.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import DomainError, GeometryError, SolverError

MU0 = 4e-7 * np.pi  # T m / A

# Cu(1-x)Ni(x) Curie temperature anchors: Tc(0.45) = 0 K, Tc(1.00) = 637 K,
# linear in between.
_X_LOW, _X_HIGH = 0.45, 1.00
_TC_HIGH = 637.0

# Saturation magnetizations (A/m, T = 0).  The CuNi value scales from Ni by
# the Ni fraction; all of these only set the absolute field scale and are
# config-overridable (see materials.dat).
M_SAT_GD = 2.1e6
M_SAT_NI = 4.9e5

_BISECT_LO = 1e-12
_BISECT_MAX_ITERS = 200
_BISECT_TOL = 1e-10


def curie_temperature(x: float) -> float:
    """Curie temperature (K) of Cu(1-x)Ni(x) from the Ni fraction x.

    Piecewise-linear between the two anchor points; below x = 0.45 the alloy
    is never ferromagnetic and 0 K is returned with a warning.
    """
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"Ni fraction must lie in [0, 1], got {x}")
    if x < _X_LOW:
        warnings.warn(
            f"Ni fraction {x} below the ferromagnetic threshold {_X_LOW}; "
            "returning Tc = 0 K",
            stacklevel=2,
        )
        return 0.0
    return _TC_HIGH * (x - _X_LOW) / (_X_HIGH - _X_LOW)


@dataclass(frozen=True)
class Magnet:
    """Magnetic nanoparticle description.

    Give either composition_x (Ni fraction; Tc is derived) or tc directly.
    easy_axis is normalized on construction; below Tc the remanent moment is
    fully aligned with it (single domain, large anisotropy energy).
    """

    m_sat: float                    # A/m at T = 0
    radius: float                   # m
    tc: float = None                # K; derived from composition_x if given
    composition_x: float = None     # Ni fraction in [0, 1]
    spin_j: float = 0.5             # effective spin quantum number
    center: tuple = (0.0, 0.0, 0.0)
    easy_axis: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.composition_x is not None:
            object.__setattr__(self, "tc", curie_temperature(self.composition_x))
        if self.tc is None or self.tc <= 0:
            raise DomainError(f"tc must be positive, got {self.tc}")
        if self.m_sat <= 0:
            raise DomainError(f"m_sat must be positive, got {self.m_sat}")
        if self.radius <= 0:
            raise DomainError(f"radius must be positive, got {self.radius}")
        if self.spin_j <= 0:
            raise DomainError(f"spin_j must be positive, got {self.spin_j}")
        axis = np.asarray(self.easy_axis, dtype=float)
        norm = np.linalg.norm(axis)
        if axis.shape != (3,) or norm == 0.0:
            raise DomainError("easy_axis must be a nonzero 3-vector")
        object.__setattr__(self, "easy_axis", tuple(axis / norm))
        object.__setattr__(self, "center",
                           tuple(float(c) for c in self.center))

    @property
    def volume(self) -> float:
        return 4.0 / 3.0 * np.pi * self.radius ** 3


@dataclass(frozen=True)
class MagnetizationCurve:
    temps: np.ndarray       # K
    reduced_m: np.ndarray   # M(T)/M_sat in [0, 1]
    dm_dt: np.ndarray       # 1/K


def brillouin(j: float, x):
    """Brillouin function B_J(x); series expansion near x = 0 where the coth
    form is 0/0."""
    x = np.asarray(x, dtype=float)
    a = (2.0 * j + 1.0) / (2.0 * j)
    b = 1.0 / (2.0 * j)
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    out = a / np.tanh(a * safe) - b / np.tanh(b * safe)
    out = np.where(small, (j + 1.0) / (3.0 * j) * x, out)
    return out if out.ndim else float(out)


def solve_magnetization(mag: Magnet, temp: float) -> float:
    """Reduced magnetization m(T) in [0, 1]: the stable (largest) root of the
    mean-field equation; identically 0 for T >= Tc.

    Bracketed bisection on [1e-12, 1] with a fixed iteration schedule, so
    identical inputs always give bit-identical outputs.
    """
    if temp <= 0:
        raise DomainError(f"temperature must be positive, got {temp}")
    if temp >= mag.tc:
        return 0.0

    j = mag.spin_j
    coef = 3.0 * j / (j + 1.0) * mag.tc / temp

    def f(m):
        return m - brillouin(j, coef * m)

    lo, hi = _BISECT_LO, 1.0
    flo = f(lo)
    if flo > 0 or f(hi) < 0:
        raise SolverError(
            f"mean-field root not bracketed at T = {temp} K", bracket=(lo, hi)
        )
    for _ in range(_BISECT_MAX_ITERS):
        mid = 0.5 * (lo + hi)
        if flo * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
            flo = f(lo)
        if hi - lo < _BISECT_TOL:
            return 0.5 * (lo + hi)
    raise SolverError(
        f"mean-field solver did not converge at T = {temp} K",
        bracket=(lo, hi),
    )


def dm_dtemp(mag: Magnet, temp: float, dt_step: float = 1e-3) -> float:
    """Finite-difference dm/dT (1/K); central away from Tc, one-sided from
    below when the step would straddle the transition."""
    if dt_step <= 0:
        raise DomainError(f"dt_step must be positive, got {dt_step}")
    if temp > mag.tc:
        return 0.0  # m identically zero on both sides
    if temp + dt_step > mag.tc:
        return (solve_magnetization(mag, temp)
                - solve_magnetization(mag, temp - dt_step)) / dt_step
    return (solve_magnetization(mag, temp + dt_step)
            - solve_magnetization(mag, temp - dt_step)) / (2.0 * dt_step)


def magnetization_curve(mag: Magnet, temps) -> MagnetizationCurve:
    temps = np.asarray(temps, dtype=float)
    m = np.array([solve_magnetization(mag, t) for t in temps])
    dm = np.array([dm_dtemp(mag, t) for t in temps])
    return MagnetizationCurve(temps=temps, reduced_m=m, dm_dt=dm)


def magnetic_moment(mag: Magnet, temp: float) -> np.ndarray:
    """Moment vector (A m^2): M_sat * m(T) * volume along the easy axis."""
    m = solve_magnetization(mag, temp)
    return mag.m_sat * m * mag.volume * np.asarray(mag.easy_axis)


def dipole_field(moment, source, observer, min_distance: float = 0.0) -> np.ndarray:
    """Point-dipole field (tesla) at `observer` from a moment at `source`.

    B = (mu0 / 4 pi) [3 (m.rhat) rhat - m] / r^3.  Raises GeometryError when
    the observation point is closer than min_distance (callers pass the
    particle radius: the formula is exact only outside the sphere).
    """
    moment = np.asarray(moment, dtype=float)
    r_vec = np.asarray(observer, dtype=float) - np.asarray(source, dtype=float)
    r = np.linalg.norm(r_vec)
    if r == 0.0 or r < min_distance:
        raise GeometryError(
            f"observation distance {r:.3e} m below minimum {min_distance:.3e} m"
        )
    rhat = r_vec / r
    return MU0 / (4.0 * np.pi) * (3.0 * np.dot(moment, rhat) * rhat - moment) / r ** 3


def dipole_field_many(moment, source, observers, min_distance: float = 0.0) -> np.ndarray:
    """Vectorized dipole_field for an (n, 3) array of observation points."""
    moment = np.asarray(moment, dtype=float)
    observers = np.asarray(observers, dtype=float)
    r_vec = observers - np.asarray(source, dtype=float)
    r = np.linalg.norm(r_vec, axis=1)
    if np.any(r == 0.0) or np.any(r < min_distance):
        raise GeometryError("at least one observation point inside the exclusion radius")
    rhat = r_vec / r[:, None]
    mdotr = rhat @ moment
    return MU0 / (4.0 * np.pi) * (3.0 * mdotr[:, None] * rhat - moment) / r[:, None] ** 3


# ---------------------------------------------------------------------------
# Material constants table (versioned data file shipped with the package).
# Format: whitespace columns  name  m_sat_apm  spin_j  tc_k  composition_x
# with '-' for not-applicable; '#' starts a comment.

@dataclass(frozen=True)
class MaterialRecord:
    name: str
    m_sat: float
    spin_j: float
    tc: float = None
    composition_x: float = None


def load_materials() -> dict:
    text = resources.files("critherm").joinpath("materials.dat").read_text()
    table = {}
    version = None
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("# format_version"):
            version = int(line.split()[-1])
        if not line or line.startswith("#"):
            continue
        name, msat, j, tc, x = line.split()
        table[name] = MaterialRecord(
            name=name,
            m_sat=float(msat),
            spin_j=float(j),
            tc=None if tc == "-" else float(tc),
            composition_x=None if x == "-" else float(x),
        )
    if version is None:
        raise DomainError("materials.dat has no format_version line")
    return table


def magnet_from_material(name: str, radius: float,
                         center=(0.0, 0.0, 0.0),
                         easy_axis=(0.0, 0.0, 1.0)) -> Magnet:
    rec = load_materials()[name]
    return Magnet(
        m_sat=rec.m_sat,
        radius=radius,
        tc=rec.tc,
        composition_x=rec.composition_x,
        spin_j=rec.spin_j,
        center=center,
        easy_axis=easy_axis,
    )
