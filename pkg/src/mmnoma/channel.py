"""Multipath mmWave channels, beam-splitting analog beamformers and effective channels.

All arrays are horizontal ULAs with half-wavelength spacing whose axis is the
global x axis, so the per-element phase step toward azimuth ``theta`` is
``pi * cos(theta)``.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .arcs import TWO_PI, wrap_angle
from .errors import ConstraintViolation, ModelError
from .params import SPEED_OF_LIGHT, SystemParams


def path_loss(distance, exponent, carrier_hz=60e9):
    """Average power gain ``(c / (4 pi f_c))**2 * d**-exponent``."""
    distance = np.asarray(distance, dtype=float)
    if np.any(distance <= 0):
        raise ModelError("path_loss: distance must be > 0")
    lam = SPEED_OF_LIGHT / carrier_hz
    out = (lam / (4.0 * math.pi)) ** 2 * distance ** (-exponent)
    return float(out) if out.ndim == 0 else out


def steering_phase(angle):
    """``pi cos(angle)``, written as a sine so broadside (pi/2) gives exactly 0."""
    return math.pi * np.sin(math.pi / 2 - np.asarray(angle, dtype=float))


def array_response(angle, length):
    """ULA response ``[1, e^{j z}, ..., e^{j (length-1) z}]`` with ``z = pi cos(angle)``."""
    if length < 1:
        raise ValueError("array_response: length must be >= 1")
    return np.exp(1j * np.arange(length) * steering_phase(angle))


def combiner(aoa, md_antennas):
    """Unit-norm receive beam matched to the LoS angle of arrival."""
    return array_response(aoa, md_antennas) / math.sqrt(md_antennas)


def beam_splitting_beamformer(aods, antennas, ap_antennas):
    """Analog beam of one RF chain whose array is split between group members.

    ``aods`` and ``antennas`` list the members in ascending user index.  Each
    member steers a contiguous sub-array toward its LoS AoD; every block
    starts with the phase accumulated by the blocks before it.  Elements left
    over after the last block stay off.
    """
    antennas = [int(m) for m in antennas]
    if len(aods) != len(antennas):
        raise ValueError("aods and antennas differ in length")
    if any(m < 1 for m in antennas):
        raise ConstraintViolation("each scheduled user needs at least one antenna")
    if sum(antennas) > ap_antennas:
        raise ConstraintViolation(f"sub-arrays use {sum(antennas)} > {ap_antennas} elements")
    w = np.zeros(ap_antennas, dtype=complex)
    pos = 0
    phase = 0.0
    for theta, m in zip(aods, antennas):
        z = steering_phase(theta)
        w[pos:pos + m] = np.exp(1j * (phase + np.arange(m) * z))
        pos += m
        phase += m * z
    return w / math.sqrt(ap_antennas)


def effective_channel(v, H, w):
    """Scalar channel ``v^H H w`` between an AP RF chain and a device RF chain."""
    return complex(np.conj(v) @ H @ w)


def assemble_effective_matrix(combiners, channels, beams):
    """``N x K_b`` matrix whose column k holds user k's effective channel to
    each of the AP's N chains.

    ``combiners`` and ``channels`` are per served user, ``beams`` is ``N x M_AP``.
    """
    beams = np.asarray(beams)
    cols = [np.conj(v) @ H @ beams.T for v, H in zip(combiners, channels)]
    if not cols:
        return np.zeros((beams.shape[0], 0), dtype=complex)
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class PathComponent:
    path_index: int
    avg_path_loss: float
    complex_gain: complex
    aod: float
    aoa: float


def sample_link(distance, aod, aoa, los, md_antennas, ap_antennas, num_nlos, rng,
                params=SystemParams()):
    """Draw the path list and channel matrix of one user-AP link.

    LoS angles come from geometry; NLoS angles are uniform on the circle and
    every complex gain is CN(0, 1).  The LoS term is kept in the path list
    even when blocked so SIC ordering can still see it; it is dropped from
    the matrix via ``los``.
    """
    if num_nlos < 0:
        raise ValueError("num_nlos must be >= 0")
    gains = (rng.standard_normal(num_nlos + 1) + 1j * rng.standard_normal(num_nlos + 1)) / math.sqrt(2.0)
    nlos_aod = rng.uniform(0.0, TWO_PI, num_nlos)
    nlos_aoa = rng.uniform(0.0, TWO_PI, num_nlos)
    paths = [PathComponent(0, path_loss(distance, params.los_exponent, params.carrier_hz),
                           complex(gains[0]), float(aod), float(aoa))]
    rho_nlos = path_loss(distance, params.nlos_exponent, params.carrier_hz)
    for i in range(num_nlos):
        paths.append(PathComponent(i + 1, rho_nlos, complex(gains[i + 1]),
                                   float(nlos_aod[i]), float(nlos_aoa[i])))
    H = np.zeros((md_antennas, ap_antennas), dtype=complex)
    for path in paths:
        if path.path_index == 0 and not los:
            continue
        H += (math.sqrt(path.avg_path_loss) * path.complex_gain
              * np.outer(array_response(path.aoa, md_antennas),
                         np.conj(array_response(path.aod, ap_antennas))))
    return paths, H


def link_geometry(user, ap):
    """3D device-to-AP distance plus LoS AoD (at the AP) and AoA (at the user)."""
    dx = user.seat_position.x - ap.position.x
    dy = user.seat_position.y - ap.position.y
    dz = user.device_height - ap.position.z
    aod = wrap_angle(math.atan2(dy, dx))
    return math.sqrt(dx * dx + dy * dy + dz * dz), aod, wrap_angle(aod + math.pi)


def sample_channel(user, ap, blockage, num_nlos, rng, params=SystemParams()):
    """Paths and channel matrix of one (user, AP) pair given its blockage outcome."""
    dist, aod, aoa = link_geometry(user, ap)
    return sample_link(dist, aod, aoa, blockage.los_indicator, params.md_antennas,
                       ap.antenna_count, num_nlos, rng, params)


@dataclass
class ChannelRealization:
    """Channels of K users toward B APs.

    ``H`` holds the full multipath matrices, followed by the path
    parameters (``rho``, ``alpha``, ``aod``, ``aoa`` arrays of shape
    ``K x B x (L+1)``), ``los`` the K x B LoS flags.
    """

    H: np.ndarray
    rho: np.ndarray
    alpha: np.ndarray
    aod: np.ndarray
    aoa: np.ndarray
    los: np.ndarray
    distance: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def num_users(self):
        return self.H.shape[0]

    @property
    def num_aps(self):
        return self.H.shape[1]

    @property
    def md_antennas(self):
        return self.H.shape[2]

    @property
    def ap_antennas(self):
        return self.H.shape[3]

    @property
    def los_aod(self):
        return self.aod[..., 0]

    @property
    def los_aoa(self):
        return self.aoa[..., 0]

    @cached_property
    def H_los(self):
        """LoS-only matrices ``e * sqrt(rho0) alpha0 a_MD a_AP^H``."""
        K, B, Mm, Ma = self.H.shape
        out = np.zeros_like(self.H)
        for k in range(K):
            for b in range(B):
                if self.los[k, b]:
                    out[k, b] = (math.sqrt(self.rho[k, b, 0]) * self.alpha[k, b, 0]
                                 * np.outer(array_response(self.aoa[k, b, 0], Mm),
                                            np.conj(array_response(self.aod[k, b, 0], Ma))))
        return out

    def matrices(self, csi="full"):
        return self.H if csi == "full" else self.H_los

    @cached_property
    def ordering_gain(self):
        """K x B gains used for SIC ordering: LoS gain, or the strongest NLoS
        gain when the LoS path is blocked."""
        power = self.rho * np.abs(self.alpha) ** 2
        nlos = power[..., 1:].max(axis=-1) if power.shape[-1] > 1 else np.zeros(power.shape[:2])
        return np.where(self.los == 1, power[..., 0], nlos)

    @cached_property
    def combiners(self):
        """K x B x M_MD receive beams, entry [k, b] matched to AP b."""
        K, B = self.los.shape
        out = np.empty((K, B, self.md_antennas), dtype=complex)
        for k in range(K):
            for b in range(B):
                out[k, b] = combiner(self.aoa[k, b, 0], self.md_antennas)
        return out

    def combined_rows(self, csi="full"):
        """``Z[k, s, b] = v_k(s)^H H_kb``: user k's combined row channel toward
        AP b when its combiner points at serving AP s (K x B x B x M_AP)."""
        key = ("Z", csi)
        if key not in self._cache:
            H = self.matrices(csi)
            self._cache[key] = np.einsum("ksm,kbma->ksba", np.conj(self.combiners), H)
        return self._cache[key]

    def los_vectors(self):
        """``h_{kb,0} = v_k^H H_{kb,0}`` with v matched to AP b (K x B x M_AP)."""
        Z = self.combined_rows("los")
        idx = np.arange(self.num_aps)
        return Z[:, idx, idx, :]

    def subset(self, users):
        users = np.asarray(users, dtype=int)
        return ChannelRealization(self.H[users], self.rho[users], self.alpha[users],
                                  self.aod[users], self.aoa[users], self.los[users],
                                  self.distance[users])

    def to_dict(self):
        """Debug dump; complex values are split into ``[re, im]`` pairs."""
        def cplx(a):
            return np.stack([a.real, a.imag], axis=-1).tolist()
        return {"schema": "mmnoma.channel/1", "los": self.los.tolist(),
                "distance_m": self.distance.tolist(), "rho": self.rho.tolist(),
                "alpha": cplx(self.alpha), "aod": self.aod.tolist(), "aoa": self.aoa.tolist()}


def sample_channels(scenario, seat_indices, blockage, seed_seq, params=SystemParams(),
                    ap_antennas=None):
    """Channels for the selected seats; pair (k, b) uses its own child seed so
    results do not depend on evaluation order."""
    seat_indices = list(seat_indices)
    K, B = len(seat_indices), scenario.num_aps
    L = params.num_nlos_paths
    Ma = ap_antennas or params.ap_antennas
    Mm = params.md_antennas
    H = np.zeros((K, B, Mm, Ma), dtype=complex)
    rho = np.zeros((K, B, L + 1))
    alpha = np.zeros((K, B, L + 1), dtype=complex)
    aod = np.zeros((K, B, L + 1))
    aoa = np.zeros((K, B, L + 1))
    dist = np.zeros((K, B))
    for k, s in enumerate(seat_indices):
        user = scenario.seats[s]
        for b, ap in enumerate(scenario.aps):
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(
                seed_seq.entropy, spawn_key=tuple(seed_seq.spawn_key) + (k, b))))
            dist[k, b], theta, phi = link_geometry(user, ap)
            paths, H[k, b] = sample_link(dist[k, b], theta, phi, blockage.los[k, b], Mm, Ma,
                                         L, rng, params)
            for p in paths:
                rho[k, b, p.path_index] = p.avg_path_loss
                alpha[k, b, p.path_index] = p.complex_gain
                aod[k, b, p.path_index] = p.aod
                aoa[k, b, p.path_index] = p.aoa
    return ChannelRealization(H, rho, alpha, aod, aoa, np.array(blockage.los), dist)
