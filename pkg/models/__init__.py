# Models package for loopflux
from .errors import LoopfluxError
from .lattice_model import GHOST, Lattice, Site, site
from .flux_model import BoundarySpec, FluxConfig
from .pairing_model import PairedGraph, SlotGraph
from .green_function_engine import GreenFunction, GreenSpec
from .monte_carlo_engine import MonteCarloEngine
from .worm_engine import WormState, worm_sample

__all__ = ['LoopfluxError', 'GHOST', 'Lattice', 'Site', 'site', 'BoundarySpec', 'FluxConfig',
           'PairedGraph', 'SlotGraph', 'GreenFunction', 'GreenSpec', 'MonteCarloEngine',
           'WormState', 'worm_sample']
