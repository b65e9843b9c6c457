"""Physical constants, default simulation parameters and unit conversions."""

import math
from dataclasses import dataclass, asdict, replace

SPEED_OF_LIGHT = 3.0e8  # m/s


def dbm_to_watts(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts):
    return 10.0 * math.log10(watts) + 30.0


@dataclass(frozen=True)
class SystemParams:
    """Link-level and solver parameters shared by every stage.

    Lengths are meters and powers are watts.  The dBm-valued fields are only
    converted through the ``noise_power`` / ``total_power`` properties.
    """

    carrier_hz: float = 60e9
    num_nlos_paths: int = 2
    los_exponent: float = 2.25
    nlos_exponent: float = 3.71
    noise_dbm: float = -80.0
    md_antennas: int = 15
    ap_antennas: int = 120
    rf_chains: int = 12
    total_power_dbm: float = 30.0
    rate_min: float = 0.25
    w1: float = 0.6
    # simulated annealing
    sa_t0: float = 10.0
    sa_beta: float = 0.95
    sa_tmax: int = 12
    sa_eps1: float = 7e-11
    # DC power allocation
    dc_rel_tol: float = 1e-4
    dc_max_outer: int = 50
    inner_kkt_tol: float = 1e-6
    inner_max_iter: int = 200
    # stages 1-2 evaluate rates on the LoS-only channel ("los") or the full one
    stage_csi: str = "los"

    @property
    def wavelength(self):
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def noise_power(self):
        return dbm_to_watts(self.noise_dbm)

    @property
    def total_power(self):
        return dbm_to_watts(self.total_power_dbm)

    @property
    def min_antennas(self):
        return self.ap_antennas // 6

    @property
    def w2(self):
        return 1.0 - self.w1

    def validate(self):
        errors = []
        if self.ap_antennas < 6 or self.ap_antennas % 6:
            errors.append("ap_antennas: must be a positive multiple of 6")
        if self.rf_chains < 1:
            errors.append("rf_chains: must be >= 1")
        if self.md_antennas < 1:
            errors.append("md_antennas: must be >= 1")
        if not 0.0 < self.w1 < 1.0:
            errors.append("w1: must lie in (0, 1)")
        if not 0.0 < self.sa_beta < 1.0:
            errors.append("sa_beta: must lie in (0, 1)")
        if not self.sa_t0 > self.sa_eps1 > 0.0:
            errors.append("sa_t0/sa_eps1: need t0 > eps1 > 0")
        if self.sa_tmax < 1:
            errors.append("sa_tmax: must be >= 1")
        if self.num_nlos_paths < 0:
            errors.append("num_nlos_paths: must be >= 0")
        if self.rate_min < 0:
            errors.append("rate_min: must be >= 0")
        if self.stage_csi not in ("los", "full"):
            errors.append("stage_csi: must be 'los' or 'full'")
        if errors:
            from .errors import ConfigurationError
            raise ConfigurationError(errors)
        return self

    def to_dict(self):
        return asdict(self)

    def with_(self, **changes):
        return replace(self, **changes)
