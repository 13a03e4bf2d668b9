"""citysim: a clock-synchronized city microsimulator with pull/push sense
APIs, trip-list control, social and economic flows, an urban knowledge
graph, and a standardized language command interface."""

from .errors import SimError
from .geometry import Point, Polygon, Polyline, point_in_polygon, polyline_length
from .ingest import InfraConfig, InfraNetwork, build_infrastructure_network, enrich_bundle
from .kernel import Engine, EngineConfig
from .mapio import load_map, load_map_file, save_map, save_map_file
from .model import (
    Aoi,
    Enterprise,
    Junction,
    MapBundle,
    Person,
    Poi,
    Road,
    Trip,
    validate_map,
)
from .routing import RoutePlanner
from .spatial import SpatialIndex, build_index
from .traffic import IdmParams, MobilParams, idm_acceleration, mobil_decide

__version__ = "0.1.0"

__all__ = [
    "Aoi",
    "Engine",
    "EngineConfig",
    "Enterprise",
    "IdmParams",
    "InfraConfig",
    "InfraNetwork",
    "Junction",
    "MapBundle",
    "MobilParams",
    "Person",
    "Poi",
    "Point",
    "Polygon",
    "Polyline",
    "Road",
    "RoutePlanner",
    "SimError",
    "SpatialIndex",
    "Trip",
    "build_index",
    "build_infrastructure_network",
    "enrich_bundle",
    "idm_acceleration",
    "load_map",
    "load_map_file",
    "mobil_decide",
    "point_in_polygon",
    "polyline_length",
    "save_map",
    "save_map_file",
    "validate_map",
]
