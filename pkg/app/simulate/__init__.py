"""Synthetic multitemporal datasets."""

from app.simulate.spectra import add_awgn_snr, load_spectra_csv, sample_dirichlet, synth_spectrum
from app.simulate.hapke import AlbedoSpectrum, albedos_from_reflectance, hapke_forward, hapke_invert
from app.simulate.scenarios import (
    ScenarioAConfig,
    ScenarioAData,
    ScenarioBConfig,
    ScenarioBData,
    generate_scenario_a,
    generate_scenario_b,
    incidence_angles,
)

__all__ = [
    "add_awgn_snr",
    "load_spectra_csv",
    "sample_dirichlet",
    "synth_spectrum",
    "AlbedoSpectrum",
    "albedos_from_reflectance",
    "hapke_forward",
    "hapke_invert",
    "ScenarioAConfig",
    "ScenarioAData",
    "ScenarioBConfig",
    "ScenarioBData",
    "generate_scenario_a",
    "generate_scenario_b",
    "incidence_angles",
]
