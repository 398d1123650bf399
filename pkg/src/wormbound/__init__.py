"""Buffer-aware worst-case delay analysis for wormhole networks-on-chip."""
from .netcalc import ArrivalCurve, DelayBound, ServiceCurve, UnstableSystem
from .platform import Config, Flow, NocModel, NodeId, NodeParams, load_config, validate, xy_route
from .analyzer import Method, analyze_all, analyze_flow

__version__ = "0.1.0"
