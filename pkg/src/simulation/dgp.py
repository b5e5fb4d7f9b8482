# src/simulation/dgp.py
"""
Registry of the five simulation designs. All use a logistic response on
[0, 1]; DGP1 is the single-impact case where S = 1 is treated as known.
"""
from dataclasses import dataclass
from typing import Dict

from common.errors import ConfigError
from simulation.processes import ProcessSpec
from simulation.responses import ImpactModelSpec, ResponseKind


@dataclass(frozen=True)
class DgpPreset:
    name: str
    process: ProcessSpec
    model: ImpactModelSpec
    c_delta: float = 1.5
    s_known: bool = False


def _logit(alpha, betas, taus) -> ImpactModelSpec:
    return ImpactModelSpec(alpha=alpha, betas=betas, taus=taus, response=ResponseKind.BERNOULLI_LOGIT)


DGP_PRESETS: Dict[str, DgpPreset] = {
    'DGP1': DgpPreset('DGP1', ProcessSpec.oup(), _logit(1.0, (4.0,), (1 / 2,)), s_known=True),
    'DGP2': DgpPreset('DGP2', ProcessSpec.oup(), _logit(1.0, (-6.0, 5.0), (1 / 3, 2 / 3))),
    'DGP3': DgpPreset(
        'DGP3', ProcessSpec.oup(), _logit(1.0, (-6.0, 6.0, -5.0, 5.0), (1 / 6, 2 / 6, 4 / 6, 5 / 6))
    ),
    'DGP4': DgpPreset('DGP4', ProcessSpec.gcm(0.1), _logit(1.0, (-6.0, 5.0), (1 / 3, 2 / 3))),
    'DGP5': DgpPreset('DGP5', ProcessSpec.ebm(), _logit(1.0, (-6.0, 5.0), (1 / 3, 2 / 3)), c_delta=3.0),
}


def get_preset(name: str) -> DgpPreset:
    key = str(name).upper().replace(' ', '')
    if key not in DGP_PRESETS:
        raise ConfigError(f"Unknown DGP '{name}'. Available: {', '.join(DGP_PRESETS)}")
    return DGP_PRESETS[key]
