"""Growing spiking neural network for task-incremental intrusion detection."""
from .config import ExperimentConfig, from_dict, load_config
from .kernels import BACKEND
from .layer import ExcitatoryLayer
from .lif import LayerState, LifParams
from .plasticity import PlasticityConfig, ad_stdp_delta, firing_factor, standard_stdp_delta
from .topology import GrowthConfig

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ExcitatoryLayer",
    "ExperimentConfig",
    "GrowthConfig",
    "LayerState",
    "LifParams",
    "PlasticityConfig",
    "ad_stdp_delta",
    "firing_factor",
    "from_dict",
    "load_config",
    "standard_stdp_delta",
]
