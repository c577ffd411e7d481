"""Exception hierarchy"""


class WayfarerError(Exception):
    """Base class for every error raised by the simulator"""


class InputError(WayfarerError):
    """Scenario or configuration input cannot be used"""
