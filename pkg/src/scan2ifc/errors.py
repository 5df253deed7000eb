"""Exception types raised by the reconstruction pipeline."""


class Scan2IfcError(Exception):
    """Base class for all engine errors."""


class CloudFormatError(Scan2IfcError):
    """Unparseable or invalid point cloud input (XYZ or cache)."""


class CacheFormatError(CloudFormatError):
    """Bad magic, version, or truncated payload in a .c2m cache file."""


class ConfigError(Scan2IfcError):
    """Invalid configuration value; carries the offending field name."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class StageError(Scan2IfcError):
    """Pipeline stage failure; carries the stage name for diagnostics."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


class NoSurfacesError(StageError):
    def __init__(self, message="no horizontal surfaces found"):
        super().__init__("slabs", message)


class FootprintCollapsedError(StageError):
    def __init__(self, message="footprint collapsed; reduce erosion"):
        super().__init__("slabs", message)


class EmptySliceError(StageError):
    def __init__(self, message="no points in wall slice"):
        super().__init__("walls", message)


class InsetCollapsedError(StageError):
    def __init__(self, cell_name: str):
        super().__init__("zones", f"wall inset collapses cell {cell_name}; wall thicker than room")
        self.cell_name = cell_name


class IfcBuildError(Scan2IfcError):
    """Inconsistent element graph handed to the IFC builder."""
