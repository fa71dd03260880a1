"""Bregman Voronoi diagrams, triangulations and sampling."""
from . import diagram, divergence, exp_family, geom_core, io, polygon, sampling, triangulation
from .diagram import (PlanarDiagram, RasterLabels, first_type_diagram_2d, k_order_diagram_2d,
                      raster_diagram, second_type_diagram_2d, weighted_first_type_diagram_2d)
from .divergence import (Generator, dual_divergence, eval_divergence, generator_from_spec,
                         symmetrized_divergence)
from .errors import (BregmanError, GeneralPositionWarning, NumericalError, ParseError,
                     ValidationError)
from .exp_family import ExponentialFamily, family_by_name, kl_divergence
from .sampling import DomainPolygon, bregman_kmeans, eps_net, lloyd
from .triangulation import Triangulation, bregman_delaunay_2d, geodesic_triangulation_2d

__version__ = "0.1.0"
