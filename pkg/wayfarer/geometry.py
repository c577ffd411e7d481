"""Planar coordinates"""
import math
import typing


class Point(typing.NamedTuple):
    """A planar location in meters"""
    x: float
    y: float

    def distance_to(self, other):
        return math.hypot(self.x - other.x, self.y - other.y)

    def towards(self, other, fraction):
        """The point a fraction of the way from this point to another"""
        return Point(self.x + (other.x - self.x) * fraction,
                     self.y + (other.y - self.y) * fraction)
