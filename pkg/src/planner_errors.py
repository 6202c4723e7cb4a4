# Exceptions raised by the swarm group planner.  Library functions raise
# these; the orchestration script catches them, prints the message and
# marks the run as failed.
#
# Created by: Andy Carter, PE
# Created - 2024.03.11
# Last revised - 2024.05.02 - SolverError carries the trace
#
# swarm-group-plan - shared by every processing script


# ------------------------------------------------------------
class PlannerError(Exception):
    """Base class of every planner error"""
# ------------------------------------------------------------


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
class MapBoundsError(PlannerError, IndexError):
    """A point or cell index lies outside the grid map"""


class MapStateError(PlannerError):
    """Distance field queried before it was built"""


class MapConfigError(PlannerError, ValueError):
    """Mismatched resolution, misaligned merge or an invalid map spec"""
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~


# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>
class MapfTimeoutError(PlannerError):
    """Multi-agent search exceeded its node or wall-time budget"""


class MapfInfeasibleError(PlannerError):
    """No path exists for an agent under its constraints"""
# >>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>>


# ````````````````````````````````````````````````````````````
class TrajectoryDomainError(PlannerError, ValueError):
    """Non-positive piece duration or a bad piece count"""


class ContractError(PlannerError, ValueError):
    """Shape or count mismatch between arguments, or invalid weights"""


class SolverError(PlannerError):
    """
    Joint optimization stopped without a usable minimum (line search
    failure or a non-finite objective).

    Args:
        str_message: reason reported by the solver
        list_traj_last: trajectories of the last accepted iterate
        df_trace: per-iteration solver trace up to the failure
    """

    def __init__(self, str_message, list_traj_last=None, df_trace=None):
        super().__init__(str_message)
        self.list_traj_last = list_traj_last
        self.df_trace = df_trace
# ````````````````````````````````````````````````````````````
