from enum import Enum


class Region(str, Enum):
    """Planar regions whose occupation time is measured."""

    OPPOSITE_QUADRANTS = "opposite"   # X*Y > 0
    HALF_PLANE = "half-plane"         # X > 0
    SINGLE_QUADRANT = "single-quadrant"  # X > 0 and Y > 0

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        for member in cls:
            if key in (member.value, member.name.lower().replace("_", "-")):
                return member
        raise ValueError(f"unknown region {name!r}; expected one of "
                         f"{', '.join(m.value for m in cls)}")
