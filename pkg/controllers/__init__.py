# Controllers package for loopflux
from .main_controller import MainController
from .series_controller import SeriesController
from .combinatorics_controller import CombinatoricsController
from .simulation_controller import SimulationController
from .suite_result import SuiteResult

__all__ = [
    'MainController',
    'SeriesController',
    'CombinatoricsController',
    'SimulationController',
    'SuiteResult',
]
