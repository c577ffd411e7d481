"""Vehicle fuel and battery levels"""
import dataclasses

from . import errors


class OutOfFuel(errors.WayfarerError):
    """
    Both fuel stores ran dry before the end of a leg

    The drained state and the distance that could not be powered are kept so
    the caller can let the leg finish and report it.
    """

    def __init__(self, state, missing_meters):
        self.state = state
        self.missing_meters = missing_meters
        super().__init__(f"ran out of fuel {missing_meters:.1f} m short")


@dataclasses.dataclass(frozen=True)
class FuelState:
    """Joules left in the primary and secondary stores"""
    primary: float
    secondary: float = 0.0

    def __post_init__(self):
        if self.primary < 0 or self.secondary < 0:
            raise ValueError("fuel levels cannot be negative")

    @classmethod
    def from_state_of_charge(cls, vehicle_type, state_of_charge=1.0):
        """Primary store at a fraction of capacity, secondary full"""
        if not 0.0 <= state_of_charge <= 1.0:
            raise ValueError(f"state of charge {state_of_charge} not in [0, 1]")
        return cls(vehicle_type.primary_capacity * state_of_charge,
                   vehicle_type.secondary_capacity or 0.0)

    def state_of_charge(self, vehicle_type):
        if not vehicle_type.primary_capacity:
            return 1.0
        return min(1.0, self.primary / vehicle_type.primary_capacity)

    def range(self, vehicle_type):
        """Meters that can still be driven"""
        meters = 0.0
        if vehicle_type.primary_consumption > 0:
            meters += self.primary / vehicle_type.primary_consumption
        if vehicle_type.secondary_consumption:
            meters += self.secondary / vehicle_type.secondary_consumption
        return meters


def consume_fuel(state, vehicle_type, meters):
    """
    Drain fuel for a distance, primary store first

    Args:
        state (FuelState): levels before the leg
        vehicle_type (scenario.VehicleType): consumption rates
        meters (float): distance driven

    Returns:
        FuelState: levels after the leg

    Raises:
        OutOfFuel: when both stores empty before the distance is covered
    """
    if meters < 0:
        raise ValueError("distance cannot be negative")
    if meters == 0 or vehicle_type.primary_consumption <= 0:
        return state
    primary_rate = vehicle_type.primary_consumption
    needed = meters * primary_rate
    if needed <= state.primary:
        return FuelState(state.primary - needed, state.secondary)
    remaining = meters - state.primary / primary_rate
    secondary_rate = vehicle_type.secondary_consumption or 0.0
    if secondary_rate > 0:
        needed = remaining * secondary_rate
        if needed <= state.secondary:
            return FuelState(0.0, state.secondary - needed)
        remaining -= state.secondary / secondary_rate
    raise OutOfFuel(FuelState(0.0, 0.0), remaining)


def charge(state, vehicle_type, power_kw, seconds):
    """
    Add plug energy to the primary store

    Returns:
        typing.Tuple[FuelState, float]: new levels and joules delivered
    """
    headroom = max(vehicle_type.primary_capacity - state.primary, 0.0)
    delivered = min(power_kw * 1000.0 * max(seconds, 0.0), headroom)
    return FuelState(state.primary + delivered, state.secondary), delivered


def refill(state, vehicle_type):
    """Fill every store to capacity"""
    return FuelState(vehicle_type.primary_capacity,
                     vehicle_type.secondary_capacity or 0.0)
