"""Travel mode vocabularies"""
import enum


class Mode(enum.Enum):
    """Trip-level mode classifications offered to mode choice"""
    WALK = "WALK"
    BIKE = "BIKE"
    CAR = "CAR"
    RIDE_HAIL = "RIDE_HAIL"
    RIDE_HAIL_POOLED = "RIDE_HAIL_POOLED"
    CAV = "CAV"
    WALK_TRANSIT = "WALK_TRANSIT"
    BIKE_TRANSIT = "BIKE_TRANSIT"
    DRIVE_TRANSIT = "DRIVE_TRANSIT"
    RIDE_HAIL_TRANSIT = "RIDE_HAIL_TRANSIT"
    SHARED_BIKE = "SHARED_BIKE"
    SHARED_CAR = "SHARED_CAR"

    @classmethod
    def parse(cls, text):
        """Parse a mode label, case-insensitively"""
        return cls(str(text).strip().upper())


class LegMode(enum.Enum):
    """Vehicle-level mode of a single itinerary leg"""
    WALK = "walk"
    BIKE = "bike"
    CAR = "car"
    CAV = "cav"
    RIDE_HAIL = "ride_hail"
    TRANSIT = "transit"

    @property
    def network_mode(self):
        """The link mode this leg needs, None for scheduled transit"""
        return _NETWORK_MODES[self]


_NETWORK_MODES = {
    LegMode.WALK: "walk",
    LegMode.BIKE: "bike",
    LegMode.CAR: "car",
    LegMode.CAV: "car",
    LegMode.RIDE_HAIL: "car",
    LegMode.TRANSIT: None,
}


class TourMode(enum.Enum):
    """Tour-level mode constraining the trip modes of a tour"""
    CAR_BASED = "CAR_BASED"
    BIKE_BASED = "BIKE_BASED"
    WALK_BASED = "WALK_BASED"


TRANSIT_MODES = frozenset({
    Mode.WALK_TRANSIT,
    Mode.BIKE_TRANSIT,
    Mode.DRIVE_TRANSIT,
    Mode.RIDE_HAIL_TRANSIT,
})

RIDE_HAIL_MODES = frozenset({Mode.RIDE_HAIL, Mode.RIDE_HAIL_POOLED})

SHARED_MODES = frozenset({Mode.SHARED_BIKE, Mode.SHARED_CAR})

PRIVATE_VEHICLE_MODES = frozenset({Mode.CAR, Mode.BIKE})

# Transit access modes only offered on the first and last trip of a tour
TOUR_END_ONLY_MODES = frozenset({Mode.DRIVE_TRANSIT, Mode.BIKE_TRANSIT})

TRANSIT_ACCESS = {
    Mode.WALK_TRANSIT: LegMode.WALK,
    Mode.BIKE_TRANSIT: LegMode.BIKE,
    Mode.DRIVE_TRANSIT: LegMode.CAR,
    Mode.RIDE_HAIL_TRANSIT: LegMode.RIDE_HAIL,
}


def tour_trip_modes(tour_mode, first_or_last, shared_fleets=frozenset()):
    """
    Trip modes allowed on a trip of a tour with the given tour mode

    Args:
        tour_mode (TourMode): the tour's mode
        first_or_last (bool): whether the trip starts or ends the tour
        shared_fleets (frozenset of Mode): shared modes with a fleet

    Returns:
        frozenset of Mode: allowed trip modes
    """
    if tour_mode is TourMode.CAR_BASED:
        return frozenset({Mode.CAR})
    if tour_mode is TourMode.BIKE_BASED:
        return frozenset({Mode.BIKE})
    allowed = {
        Mode.WALK,
        Mode.RIDE_HAIL,
        Mode.RIDE_HAIL_POOLED,
        Mode.CAV,
        Mode.WALK_TRANSIT,
        Mode.RIDE_HAIL_TRANSIT,
    }
    allowed |= set(shared_fleets)
    if first_or_last:
        allowed |= TOUR_END_ONLY_MODES
    return frozenset(allowed)
