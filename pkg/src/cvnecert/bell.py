"""Bell expressions in correlator form, Bloch-sphere measurements and Bell-operator assembly."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .quantum import BipartiteState, hermitize

POVM_TOL = 1e-9


class ArityError(ValueError):
    """Raised when an operation needs a binary-outcome POVM."""


class UnknownName(KeyError):
    pass


@dataclass(frozen=True)
class MeasurementSetting:
    """Bloch angles of the first projector of a binary qubit measurement."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not (0 <= self.theta <= np.pi and 0 <= self.phi < 2 * np.pi):
            raise ValueError(f"angles out of range: theta={self.theta!r}, phi={self.phi!r}")

    @classmethod
    def normalized(cls, theta: float, phi: float = 0.0) -> "MeasurementSetting":
        """Map arbitrary angles onto theta in [0, pi], phi in [0, 2pi) describing the same projector."""
        theta = float(np.mod(theta, 2 * np.pi))
        if theta > np.pi:
            theta, phi = 2 * np.pi - theta, phi + np.pi
        phi = float(np.mod(phi, 2 * np.pi))
        if np.isclose(phi, 2 * np.pi):
            phi = 0.0
        return cls(theta, phi)


@dataclass(frozen=True)
class Povm:
    elements: tuple

    def __post_init__(self):
        els = tuple(hermitize(e) for e in self.elements)
        if not els:
            raise ValueError("empty POVM")
        d = els[0].shape[0]
        for e in els:
            if e.shape != (d, d):
                raise ValueError("POVM elements differ in dimension")
            if np.linalg.eigvalsh(e)[0] < -POVM_TOL:
                raise ValueError("POVM element is not PSD")
            e.setflags(write=False)
        if not np.allclose(sum(els), np.eye(d), atol=POVM_TOL, rtol=0):
            raise ValueError("POVM elements do not sum to the identity")
        object.__setattr__(self, "elements", els)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    @classmethod
    def from_projector(cls, p: np.ndarray) -> "Povm":
        p = hermitize(p)
        return cls((p, np.eye(p.shape[0]) - p))

    @classmethod
    def from_element(cls, m: np.ndarray) -> "Povm":
        """Binary POVM {M, I - M}; eigenvalues of ``m`` are clipped into [0, 1]."""
        lam, u = np.linalg.eigh(hermitize(m))
        m = (u * np.clip(lam, 0, 1)) @ u.conj().T
        return cls.from_projector(m)


def bloch_vector(s: MeasurementSetting) -> np.ndarray:
    """Ket cos(theta/2)|0> + e^{i phi} sin(theta/2)|1> of the first projector."""
    return np.array([np.cos(s.theta / 2), np.sin(s.theta / 2) * np.exp(1j * s.phi)])


def bloch_povm(s: MeasurementSetting) -> Povm:
    v = bloch_vector(s)
    p = np.outer(v, v.conj())
    # phi = pi yields ~1e-17 imaginary parts; keep real settings exactly real
    p.imag[np.abs(p.imag) < 1e-15] = 0.0
    return Povm.from_projector(p)


def observable(p: Povm) -> np.ndarray:
    """+-1 valued observable ``M_0 - M_1`` of a binary POVM."""
    if len(p.elements) != 2:
        raise ArityError(f"expected 2 outcomes, got {len(p.elements)}")
    return hermitize(p.elements[0] - p.elements[1])


@dataclass(frozen=True)
class BellSpec:
    """Correlator Bell expression ``sum_ij coeffs[i, j] * C_ij``.

    Indices are 0-based here; ``coeffs[0, 0]`` is the correlator C_11.
    """

    name: str
    coeffs: np.ndarray
    local_bound: float
    tsirelson_bound: float
    alice_angles: tuple[MeasurementSetting, ...] | None = None
    bob_angles: tuple[MeasurementSetting, ...] | None = None
    delta: float | None = field(default=None)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 2:
            raise ValueError("coefficient table must be two-dimensional")
        if not self.local_bound < self.tsirelson_bound:
            raise ValueError("local bound must be below the Tsirelson bound")
        for angles, m in ((self.alice_angles, c.shape[0]), (self.bob_angles, c.shape[1])):
            if angles is not None and len(angles) != m:
                raise ValueError("number of optimal angles does not match the coefficient table")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def m_A(self) -> int:
        return self.coeffs.shape[0]

    @property
    def m_B(self) -> int:
        return self.coeffs.shape[1]

    @property
    def has_optimal_angles(self) -> bool:
        return self.alice_angles is not None and self.bob_angles is not None

    def optimal_povms(self) -> tuple[list[Povm], list[Povm]]:
        if not self.has_optimal_angles:
            raise ValueError(f"{self.name} has no tabulated optimal measurements")
        return [bloch_povm(s) for s in self.alice_angles], [bloch_povm(s) for s in self.bob_angles]

    def to_keyvalue(self) -> str:
        """Plain-text ``key = value`` rendering; inverse of :func:`spec_from_keyvalue`."""
        lines = [
            f"name = {self.name}",
            f"m_A = {self.m_A}",
            f"m_B = {self.m_B}",
            "coeffs = " + " ".join(repr(float(x)) for x in self.coeffs.ravel()),
            f"local_bound = {float(self.local_bound)!r}",
            f"tsirelson_bound = {float(self.tsirelson_bound)!r}",
        ]
        if self.delta is not None:
            lines.append(f"delta = {float(self.delta)!r}")
        for key, angles in (("alice_angles", self.alice_angles), ("bob_angles", self.bob_angles)):
            if angles is not None:
                lines.append(f"{key} = " + " ".join(f"{float(s.theta)!r},{float(s.phi)!r}" for s in angles))
        return "\n".join(lines) + "\n"


def spec_from_keyvalue(text: str) -> BellSpec:
    kv = {}
    for line in text.splitlines():
        if line.strip() and not line.lstrip().startswith("#"):
            key, _, value = line.partition("=")
            kv[key.strip()] = value.strip()
    m_a, m_b = int(kv["m_A"]), int(kv["m_B"])
    coeffs = np.array([float(x) for x in kv["coeffs"].split()]).reshape(m_a, m_b)

    def angles(key):
        if key not in kv:
            return None
        return tuple(MeasurementSetting(*map(float, tok.split(","))) for tok in kv[key].split())

    return BellSpec(
        name=kv["name"],
        coeffs=coeffs,
        local_bound=float(kv["local_bound"]),
        tsirelson_bound=float(kv["tsirelson_bound"]),
        alice_angles=angles("alice_angles"),
        bob_angles=angles("bob_angles"),
        delta=float(kv["delta"]) if "delta" in kv else None,
    )


def _settings(*thetas: float) -> tuple[MeasurementSetting, ...]:
    return tuple(MeasurementSetting.normalized(t, 0.0) for t in thetas)


pi = np.pi
_BUILTIN = {
    "CHSH": dict(
        coeffs=[[1, 1], [1, -1]],
        local_bound=2.0,
        tsirelson_bound=2 * np.sqrt(2),
        alice_angles=_settings(0, pi / 2),
        bob_angles=_settings(pi / 4, -pi / 4),
    ),
    "MCHSH": dict(
        coeffs=[[0, 1, 1], [1, 1, -1]],
        local_bound=3.0,
        tsirelson_bound=2 * np.sqrt(2) + 1,
        alice_angles=_settings(0, pi / 2),
        bob_angles=_settings(pi / 2, pi / 4, -pi / 4),
    ),
    "BC3": dict(
        coeffs=[[1, 1, 0], [0, 1, 1], [-1, 0, 1]],
        local_bound=4.0,
        tsirelson_bound=3 * np.sqrt(3),
        alice_angles=_settings(pi / 6, pi / 2, 5 * pi / 6),
        bob_angles=_settings(0, pi / 3, 2 * pi / 3),
    ),
    "I1": dict(
        coeffs=[[0, 1, -1], [-1, -1, 0], [1, 0, 1], [1, 0, 0]],
        local_bound=5.0,
        tsirelson_bound=1 + 3 * np.sqrt(3),
        alice_angles=_settings(0, 4 * pi / 3, 2 * pi / 3, pi / 2),
        bob_angles=_settings(pi / 2, pi / 6, 5 * pi / 6),
    ),
}
BUILTIN_NAMES = tuple(_BUILTIN)


def builtin_spec(name: str) -> BellSpec:
    try:
        params = _BUILTIN[name.upper()]
    except KeyError:
        raise UnknownName(f"unknown Bell expression {name!r}; choose from {BUILTIN_NAMES}") from None
    return BellSpec(name=name.upper(), **params)


def idelta_tsirelson(delta: float) -> float:
    return 2 * np.cos(delta) ** 3 / (np.cos(2 * delta) * np.sin(delta))


def idelta_local(delta: float) -> float:
    return -1 + 2 / np.sin(delta) + 1 / np.cos(2 * delta)


def idelta_spec(delta: float) -> BellSpec:
    """Member of the I_delta family, delta in (0, pi/6]; optimal angles are left to the optimizer."""
    if not 0 < delta <= pi / 6 + 1e-15:
        raise ValueError(f"delta must lie in (0, pi/6], got {delta!r}")
    s, c2 = np.sin(delta), np.cos(2 * delta)
    return BellSpec(
        name=f"IDELTA({delta:.6g})",
        coeffs=[[1, 1 / s], [1 / s, -1 / c2]],
        local_bound=float(idelta_local(delta)),
        tsirelson_bound=float(idelta_tsirelson(delta)),
        delta=float(delta),
    )


def bell_operator_matrix(spec: BellSpec, alice: Sequence[Povm], bob: Sequence[Povm]) -> np.ndarray:
    """``sum_ij c_ij A_i (x) B_j`` for the observables of the given binary POVMs."""
    if len(alice) != spec.m_A or len(bob) != spec.m_B:
        raise ValueError(f"{spec.name} needs {spec.m_A}x{spec.m_B} settings, got {len(alice)}x{len(bob)}")
    a_obs = [observable(p) for p in alice]
    b_obs = [observable(p) for p in bob]
    if len({a.shape for a in a_obs}) > 1 or len({b.shape for b in b_obs}) > 1:
        raise ValueError("measurements of one party differ in dimension")
    d_a, d_b = a_obs[0].shape[0], b_obs[0].shape[0]
    out = np.zeros((d_a * d_b, d_a * d_b), dtype=complex)
    for i, a in enumerate(a_obs):
        b_sum = sum(spec.coeffs[i, j] * b for j, b in enumerate(b_obs))
        out += np.kron(a, b_sum)
    return hermitize(out)


def bell_value(state: BipartiteState, spec: BellSpec, alice: Sequence[Povm], bob: Sequence[Povm]) -> float:
    return float(np.real(np.trace(state.rho @ bell_operator_matrix(spec, alice, bob))))


def violation_ratio(value: float, spec: BellSpec) -> float:
    return value / spec.local_bound


def critical_visibility(value: float, spec: BellSpec) -> float:
    """Visibility of the isotropic state that reaches ``value`` at the optimal measurements."""
    return float(np.clip(value / spec.tsirelson_bound, 0.0, 1.0))
