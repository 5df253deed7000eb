"""scan2ifc: automated conversion of indoor point clouds into IFC4 models."""

__version__ = "0.1.0"
