"""
Controllers package - Contains application logic and coordinates models and views.
"""

from .experiment_controller import ExperimentController
from .application_controller import ApplicationController

__all__ = ['ExperimentController', 'ApplicationController']
