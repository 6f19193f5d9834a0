"""Simulation and optimization toolkit for far-field wireless power and
wireless information-and-power transfer.

The package is organized around a nonlinear energy-harvester model:
`rectenna` evaluates it, `waveform`/`beamforming`/`combining`/`irs`
shape transmit signals, arrays and reflecting surfaces against it,
`rate_energy` trades harvested energy against information rate,
`learning` trains signal designs instead of deriving them, and
`mec`/`sensing` allocate the harvested energy across computing tasks.
`studies` bundles reproducible experiments behind the CLI and service.
"""

__version__ = "0.1.0"

__all__ = [
    "beamforming",
    "channel",
    "combining",
    "distributions",
    "errors",
    "hpa",
    "irs",
    "learning",
    "mec",
    "numerics",
    "rate_energy",
    "rectenna",
    "sensing",
    "waveform",
]
