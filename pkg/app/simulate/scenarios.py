"""The two synthetic experiments.

Scenario A: one endmember oscillates (second-order linear dynamics) around a
constant spectrum, mixed with Dirichlet abundances and noised at each frame.

Scenario B: pure-pixel reflectance series produced by the simplified Hapke
model under a slowly changing solar incidence angle, plus an optional mixed
image sequence.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.model.dynamics import LinearSecondOrderDynamics
from app.model.types import AbundanceMatrix, ImageSequence, SpectralSeries
from app.simulate.hapke import AlbedoSpectrum, albedos_from_reflectance, hapke_forward
from app.simulate.spectra import add_awgn_snr, load_spectra_csv, sample_dirichlet, synth_spectrum

logger = logging.getLogger(__name__)

DEFAULT_MATERIALS = ["vegetation", "metallic_roofs", "concrete", "asphalt"]


class ScenarioAConfig(BaseModel):
    """Known-dynamics experiment: sinusoidal variation of one endmember."""

    model_config = ConfigDict(extra="forbid")

    L: int = Field(224, ge=1, description="Number of spectral bands")
    P: int = Field(3, ge=1, description="Number of endmembers")
    N: int = Field(500, ge=1, description="Number of pixels")
    T: int = Field(20, ge=1, description="Number of frames")
    beta: float = Field(-0.1, description="Second-order dynamics parameter")
    dt: float = Field(1.0, gt=0, description="Frame interval")
    snr_db: float = Field(20.0, description="Target SNR of every frame in dB")
    dirichlet_alpha: Optional[List[float]] = Field(None, description="Dirichlet concentration (default all ones)")
    variable_endmember: int = Field(0, ge=0, description="Index p of the varying endmember")
    variation_amplitude: float = Field(0.05, gt=0, description="Scale of the initial variable part")
    velocity_scale: float = Field(0.1, ge=0, description="Initial velocity std relative to the variable part's std")
    pure_pixels: bool = Field(False, description="Force one pure pixel per endmember")
    spectra_csv: Optional[str] = Field(None, description="Optional CSV of constant endmember spectra")
    rng_seed: int = Field(0, ge=0, description="Generator seed")

    @model_validator(mode="after")
    def _check(self) -> "ScenarioAConfig":
        if not math.isfinite(self.snr_db) or not math.isfinite(self.beta):
            raise ValueError("snr_db and beta must be finite")
        if self.dirichlet_alpha is not None:
            if len(self.dirichlet_alpha) != self.P:
                raise ValueError(f"dirichlet_alpha must have P={self.P} entries")
            if any(a <= 0 for a in self.dirichlet_alpha):
                raise ValueError("dirichlet_alpha entries must be > 0")
        if self.variable_endmember >= self.P:
            raise ValueError(f"variable_endmember {self.variable_endmember} out of range for P={self.P}")
        if self.pure_pixels and self.N < self.P:
            raise ValueError("pure_pixels needs N >= P")
        return self

    def alpha(self) -> np.ndarray:
        return np.ones(self.P) if self.dirichlet_alpha is None else np.asarray(self.dirichlet_alpha)


class ScenarioBConfig(BaseModel):
    """Learned-dynamics experiment: Hapke reflectance under a moving sun."""

    model_config = ConfigDict(extra="forbid")

    L: int = Field(144, ge=1, description="Number of spectral bands")
    P: int = Field(4, ge=1, description="Number of endmembers")
    N: int = Field(500, ge=1, description="Pixels of the optional mixed images")
    T: int = Field(30, ge=2, description="Number of time steps")
    train_frames: int = Field(20, ge=2, description="Leading frames used for training")
    emergence_deg: float = Field(30.0, description="Constant emergence angle in degrees")
    tau_hours: float = Field(24.0, gt=0, description="Period of the incidence-angle law")
    duration_hours: float = Field(3.0, gt=0, description="Time span covered by the T samples")
    snr_db: float = Field(30.0, description="SNR of the mixed images in dB")
    angle_law: Literal["literal", "scaled"] = Field(
        "literal", description="literal: theta0 = cos(2 pi t / tau) rad; scaled: amplitude_deg * cos(2 pi t / tau)"
    )
    angle_amplitude_deg: float = Field(60.0, description="Amplitude of the scaled angle law in degrees")
    materials: Optional[List[str]] = Field(None, description="Endmember names")
    dirichlet_alpha: Optional[List[float]] = Field(None, description="Dirichlet concentration (default all ones)")
    pure_pixels: bool = Field(True, description="Embed one pure pixel per endmember in the mixed images")
    with_images: bool = Field(True, description="Also generate the mixed noisy image sequence")
    spectra_csv: Optional[str] = Field(None, description="Optional CSV of reference reflectance spectra")
    rng_seed: int = Field(0, ge=0, description="Generator seed")

    @model_validator(mode="after")
    def _check(self) -> "ScenarioBConfig":
        if self.train_frames >= self.T:
            raise ValueError(f"train_frames ({self.train_frames}) must be < T ({self.T})")
        if not (0.0 <= self.emergence_deg < 90.0):
            raise ValueError(f"emergence_deg must lie in [0, 90), got {self.emergence_deg}")
        if not math.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")
        if self.materials is not None and len(self.materials) != self.P:
            raise ValueError(f"materials must name P={self.P} endmembers")
        if self.dirichlet_alpha is not None:
            if len(self.dirichlet_alpha) != self.P or any(a <= 0 for a in self.dirichlet_alpha):
                raise ValueError(f"dirichlet_alpha must hold P={self.P} positive entries")
        if self.pure_pixels and self.N < self.P:
            raise ValueError("pure_pixels needs N >= P")
        return self

    def material_names(self) -> List[str]:
        if self.materials is not None:
            return list(self.materials)
        if self.P == len(DEFAULT_MATERIALS):
            return list(DEFAULT_MATERIALS)
        return [f"material_{p}" for p in range(self.P)]

    def alpha(self) -> np.ndarray:
        return np.ones(self.P) if self.dirichlet_alpha is None else np.asarray(self.dirichlet_alpha)


@dataclass(frozen=True)
class ScenarioAData:
    observations: ImageSequence
    truth: SpectralSeries
    abundances: AbundanceMatrix
    s_bar: np.ndarray
    variable_index: int
    variable_states: np.ndarray


@dataclass(frozen=True)
class ScenarioBData:
    pure_pixels: SpectralSeries
    albedos: np.ndarray
    times: np.ndarray
    mu0: np.ndarray
    train_index: np.ndarray
    test_index: np.ndarray
    materials: List[str]
    observations: Optional[ImageSequence] = None
    abundances: Optional[AbundanceMatrix] = None


def _reference_spectra(rng: np.random.Generator, L: int, P: int, csv_path: Optional[str]) -> np.ndarray:
    if csv_path is None:
        return np.stack([synth_spectrum(rng, L).values for _ in range(P)], axis=1)
    _, values = load_spectra_csv(csv_path)
    if values.shape[0] != L or values.shape[1] < P:
        raise ValueError(f"{csv_path} holds {values.shape} spectra, need L={L} rows and >= {P} columns")
    return values[:, :P]


def _abundances(rng: np.random.Generator, alpha: np.ndarray, N: int, pure_pixels: bool) -> AbundanceMatrix:
    abundances = sample_dirichlet(rng, alpha, N)
    if not pure_pixels:
        return abundances
    entries = abundances.entries.copy()
    P = entries.shape[0]
    entries[:, :P] = np.eye(P)
    return AbundanceMatrix(entries)


def _mix(rng: np.random.Generator, frames: np.ndarray, abundances: AbundanceMatrix, snr_db: float, timestamps):
    noisy, sigmas = [], []
    for S_t in frames:
        Y_t, sigma = add_awgn_snr(S_t @ abundances.entries, snr_db, rng)
        noisy.append(Y_t)
        sigmas.append(sigma)
    return ImageSequence(np.stack(noisy), np.asarray(sigmas), timestamps)


def generate_scenario_a(cfg: ScenarioAConfig) -> ScenarioAData:
    """
    Generate the known-dynamics dataset.

    Endmember p follows s_bar_p + s_tilde_t, where s_tilde obeys bandwise
    second-order dynamics from a random initial (position, velocity); every
    other endmember is constant.

    Args:
        cfg: Scenario A configuration

    Returns:
        ScenarioAData with noisy observations and noiseless ground truth
    """
    p = cfg.variable_endmember
    if not (0 <= p < cfg.P):
        raise ValueError(f"variable endmember {p} out of range for P={cfg.P}")
    rng = np.random.default_rng(cfg.rng_seed)

    s_bar = _reference_spectra(rng, cfg.L, cfg.P, cfg.spectra_csv)
    s_tilde0 = cfg.variation_amplitude * synth_spectrum(rng, cfg.L).values
    v0 = rng.normal(0.0, cfg.velocity_scale * float(np.std(s_tilde0)), size=cfg.L)

    dynamics = LinearSecondOrderDynamics(cfg.beta, cfg.dt)
    states = [np.stack([s_tilde0, v0])]
    for _ in range(cfg.T - 1):
        states.append(dynamics.step(states[-1]))
    states = np.stack(states)

    frames = np.repeat(s_bar[None, :, :], cfg.T, axis=0)
    frames[:, :, p] += states[:, 0, :]
    timestamps = np.arange(cfg.T, dtype=np.float64) * cfg.dt

    abundances = _abundances(rng, cfg.alpha(), cfg.N, cfg.pure_pixels)
    observations = _mix(rng, frames, abundances, cfg.snr_db, timestamps)
    logger.info(
        f"Scenario A: L={cfg.L} P={cfg.P} N={cfg.N} T={cfg.T} beta={cfg.beta} "
        f"snr={cfg.snr_db}dB variable endmember {p}"
    )
    return ScenarioAData(
        observations=observations,
        truth=SpectralSeries(frames, timestamps),
        abundances=abundances,
        s_bar=s_bar,
        variable_index=p,
        variable_states=states,
    )


def incidence_angles(times: np.ndarray, cfg: ScenarioBConfig) -> np.ndarray:
    """Solar incidence angle theta0(t) in radians."""
    phase = np.cos(2.0 * np.pi * np.asarray(times, dtype=np.float64) / cfg.tau_hours)
    if cfg.angle_law == "literal":
        return phase
    return np.deg2rad(cfg.angle_amplitude_deg) * phase


def generate_scenario_b(
    cfg: ScenarioBConfig,
    albedos=None,
    abundances: Optional[AbundanceMatrix] = None,
) -> ScenarioBData:
    """
    Generate the learned-dynamics dataset.

    Args:
        cfg: Scenario B configuration
        albedos: L x P array or sequence of AlbedoSpectrum; derived by inverting
            reference reflectances at the t = 0 geometry when omitted
        abundances: Abundances for the mixed images (Dirichlet draw when omitted)

    Returns:
        ScenarioBData with the noiseless pure-pixel series and train/test split
    """
    rng = np.random.default_rng(cfg.rng_seed)
    times = np.linspace(0.0, cfg.duration_hours, cfg.T)
    theta0 = incidence_angles(times, cfg)
    mu0 = np.cos(theta0)
    if np.any(mu0 <= 0.0) or np.any(mu0 > 1.0) or not np.all(np.isfinite(mu0)):
        raise ValueError(f"incidence angles out of range: cos(theta0) spans [{mu0.min()}, {mu0.max()}]")
    mu = math.cos(math.radians(cfg.emergence_deg))

    if albedos is None:
        reference = _reference_spectra(rng, cfg.L, cfg.P, cfg.spectra_csv)
        albedo_matrix = albedos_from_reflectance(reference, mu, float(mu0[0]))
    elif isinstance(albedos, np.ndarray):
        albedo_matrix = np.asarray(albedos, dtype=np.float64)
    else:
        albedo_matrix = np.stack([a.values for a in albedos], axis=1)
    if albedo_matrix.shape != (cfg.L, cfg.P):
        raise ValueError(f"albedos must be L x P = ({cfg.L}, {cfg.P}), got {albedo_matrix.shape}")
    spectra = [AlbedoSpectrum(albedo_matrix[:, p]) for p in range(cfg.P)]

    frames = np.stack(
        [np.stack([hapke_forward(w, mu, m0).values for w in spectra], axis=1) for m0 in mu0]
    )
    series = SpectralSeries(frames, times)

    observations = None
    if cfg.with_images:
        if abundances is None:
            abundances = _abundances(rng, cfg.alpha(), cfg.N, cfg.pure_pixels)
        elif abundances.n_endmembers != cfg.P:
            raise ValueError(f"abundances must have P={cfg.P} rows")
        observations = _mix(rng, frames, abundances, cfg.snr_db, times)

    logger.info(
        f"Scenario B: L={cfg.L} P={cfg.P} T={cfg.T} ({cfg.train_frames} train) "
        f"angle law {cfg.angle_law}, mu0 in [{mu0.min():.4f}, {mu0.max():.4f}]"
    )
    return ScenarioBData(
        pure_pixels=series,
        albedos=albedo_matrix,
        times=times,
        mu0=mu0,
        train_index=np.arange(cfg.train_frames),
        test_index=np.arange(cfg.train_frames, cfg.T),
        materials=cfg.material_names(),
        observations=observations,
        abundances=abundances if cfg.with_images else None,
    )
