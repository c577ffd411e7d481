"""Hierarchical configuration"""
import copy
import logging
import os

import yaml

from . import errors

LOG = logging.getLogger(__name__)

DEFAULTS = {
    "seed": 42,
    "inputDirectory": ".",
    "outputDirectory": "output",
    "simulation": {
        "lastIteration": 9,
        "endTime": 30 * 3600,
        "windowSize": 60.0,
        "stuckTimeoutSeconds": 30.0,
        "workers": 1,
    },
    "modeChoice": {
        "epsilon": 1.0,
        "epsilonTour": 1.0,
        "tourModeChoiceEnabled": False,
        "asc": {},
        "betaTransfer": 1.0,
        "votMultiplier": {},
        "defaultValueOfTime": 15.0,
        "railBonus": 0.0,
    },
    "agents": {
        "walkSpeed": 1.4,
        "bikeSpeed": 4.5,
        "gradeSpeedMultipliers": [[-6.0, 1.2], [0.0, 1.0], [6.0, 0.6]],
        "householdVehicles": {
            "accessRadiusMeters": 150.0,
            "meanPrivateVehicleStartingSOC": 1.0,
            "cavAutomationLevel": 4,
            "refuelThresholdFraction": 0.2,
        },
        "rideHail": {
            "fleets": [],
            "maxWaitingTimeInSec": 900,
            "maxExcessRideTime": 0.5,
            "maxRequestsPerVehicle": 4,
            "defaultBaseCost": 1.8,
            "defaultCostPerMile": 0.91,
            "defaultCostPerMinute": 0.28,
            "pooledBaseCost": 1.0,
            "pooledCostPerMile": 0.6,
            "pooledCostPerMinute": 0.15,
            "dispatchIntervalSec": 30.0,
            "refuelThresholdFraction": 0.2,
            "depotChargingPowerKw": 50.0,
            "rideHailManager": {"radiusInMeters": 5000.0},
            "repositioningManager": {
                "name": "DEFAULT",
                "intervalSec": 300.0,
                "demandWindowSec": 900.0,
                "minDistanceMeters": 100.0,
            },
        },
        "sharing": {"fleets": []},
    },
    "transit": {
        "maxTransfers": 2,
        "transferRadiusMeters": 300.0,
        "fareMultiplier": 1.0,
        "accessRadiusMeters": {
            "WALK": 1000.0,
            "BIKE": 3000.0,
            "CAR": 8000.0,
            "RIDE_HAIL": 8000.0,
        },
    },
    "parking": {
        "managerType": "TAZ",
        "maxWalkDistanceMeters": 800.0,
        "betaCost": 1.0,
        "betaWalkDistance": 0.002,
        "betaRangeAnxiety": 5.0,
        "betaHomePreference": 1.0,
        "betaEnrouteDetour": 0.001,
        "epsilon": 1.0,
    },
    "discretionary": {
        "enabled": True,
        "beta0": {},
        "lambdaDest": None,
        "lambdaMode": None,
        "destSampleCount": 5,
        "destMaxRadius": 5000.0,
        "betaCost": 1.0,
        "betaTimeByMode": {},
        "betaTransfer": 1.0,
        "betaByMode": {},
        "logsumMultiplier": 1.0,
        "latenessPenalty": -50.0,
        "homeWindows": [[7.0, 11.0], [11.0, 15.0], [15.0, 20.0]],
    },
    "physsim": {
        "periodLength": 3600.0,
        "flowCapacityFactor": 1.0,
        "storageCapacityFactor": 1.0,
        "effectiveVehicleLength": 7.5,
        "caccAutomationLevel": 3,
        "caccCurve": [[0.0, 1.0], [0.5, 1.3], [1.0, 2.0]],
        "linkTimeNoise": 0.0,
        "pickupDropoffDelaySec": 0.0,
    },
    "replanning": {
        "maxPlans": 5,
        "weights": {
            "KeepBest": 0.7,
            "ClearRoutes": 0.1,
            "ClearModes": 0.1,
            "ClearDiscretionary": 0.1,
        },
        "selectionScale": 1.0,
        "fractionOfIterationsToDisableInnovation": 0.8,
        "stuckPenalty": -1000.0,
        "replanningPenalty": 1.0,
    },
    "skims": {
        "warmStartDirectory": None,
        "carryForwardWeight": 0.0,
        "intrazonalDistanceMeters": 500.0,
        "defaultSpeeds": {
            "WALK": 1.4,
            "BIKE": 4.5,
            "CAR": 11.0,
            "CAV": 11.0,
            "RIDE_HAIL": 11.0,
            "RIDE_HAIL_POOLED": 9.0,
            "SHARED_CAR": 11.0,
            "SHARED_BIKE": 4.5,
            "WALK_TRANSIT": 5.0,
            "BIKE_TRANSIT": 5.5,
            "DRIVE_TRANSIT": 7.0,
            "RIDE_HAIL_TRANSIT": 7.0,
        },
        "defaultCostPerMeter": {
            "CAR": 0.0001,
            "CAV": 0.0001,
            "RIDE_HAIL": 0.0006,
            "RIDE_HAIL_POOLED": 0.0004,
            "WALK_TRANSIT": 0.0,
            "BIKE_TRANSIT": 0.0,
            "DRIVE_TRANSIT": 0.0001,
            "RIDE_HAIL_TRANSIT": 0.0004,
        },
    },
    "outputs": {
        "writeEvents": True,
        "modeChoiceSvg": False,
    },
}


class ConfigError(errors.InputError):
    """Configuration file or override is malformed"""


def _open_maps(tree, path=""):
    """Dotted paths of the default mappings that start out empty"""
    found = set()
    for key, value in tree.items():
        dotted = f"{path}.{key}" if path else key
        if isinstance(value, dict):
            found |= _open_maps(value, dotted) if value else {dotted}
    return found


# keyed by user-chosen names such as modes or activity types
OPEN_MAPS = _open_maps(DEFAULTS)


def _deep_merge(base, update, path=""):
    for key, value in update.items():
        dotted = f"{path}.{key}" if path else key
        if key not in base:
            if not path:
                raise ConfigError(f"unknown configuration section '{key}'")
            if path not in OPEN_MAPS:
                LOG.warning("unrecognised configuration key %s", dotted)
            base[key] = copy.deepcopy(value)
        elif isinstance(base[key], dict) and isinstance(value, dict):
            _deep_merge(base[key], value, dotted)
        else:
            base[key] = copy.deepcopy(value)


def parse_override(text):
    """
    Parse a ``key=value`` command line override

    Args:
        text (str): the override, e.g. ``agents.rideHail.maxWaitingTimeInSec=120``

    Returns:
        tuple: dotted key and typed value
    """
    if "=" not in text:
        raise ConfigError(f"override '{text}' is not of the form key=value")
    key, raw = text.split("=", 1)
    return key.strip(), yaml.safe_load(raw)


class Config:
    """
    Layered configuration: built-in defaults < file < overrides

    Values are addressed by dotted paths mirroring the nesting of the file.
    """

    def __init__(self, data=None, base_dir="."):
        self.data = copy.deepcopy(DEFAULTS)
        self.base_dir = base_dir
        if data:
            _deep_merge(self.data, data)

    @classmethod
    def load(cls, path, overrides=()):
        """
        Load a YAML configuration file and apply overrides on top

        Args:
            path (str): path of the configuration file
            overrides (iterable of str): ``key=value`` overrides

        Returns:
            Config: the merged configuration
        """
        if not os.path.exists(path):
            raise ConfigError(f"configuration file {path} does not exist")
        with open(path, encoding="utf-8") as handle:
            try:
                data = yaml.safe_load(handle) or {}
            except yaml.YAMLError as exc:
                raise ConfigError(f"cannot parse {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must contain a mapping")
        config = cls(data, base_dir=os.path.dirname(os.path.abspath(path)))
        for override in overrides:
            config.set(*parse_override(override))
        return config

    def get(self, key, default=None):
        node = self.data
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def __getitem__(self, key):
        sentinel = object()
        value = self.get(key, sentinel)
        if value is sentinel:
            raise ConfigError(f"missing configuration key {key}")
        return value

    def set(self, key, value):
        parts = key.split(".")
        if parts[0] not in self.data:
            raise ConfigError(f"unknown configuration section '{parts[0]}'")
        node = self.data
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"{key} does not address a nested value")
        node[parts[-1]] = value

    def path(self, key):
        """Resolve a path-valued key relative to the configuration file"""
        value = self[key]
        if os.path.isabs(value):
            return value
        return os.path.normpath(os.path.join(self.base_dir, value))

    @property
    def iterations(self):
        return int(self["simulation.lastIteration"]) + 1

    def to_yaml(self):
        return yaml.safe_dump(self.data, sort_keys=True)
