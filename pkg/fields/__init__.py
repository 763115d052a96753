from .domains import DomainSpec, Disk, Ellipse, Rectangle
from .grid import Grid, build_grid, ScalarField, VectorField, ComplexField, LinkField
from .operators import gradient, perp_gradient, partial, divergence, curl, laplacian
from .solvers import solve_dirichlet, dirac, dirichlet_operator, dirichlet_apply, dirichlet_form, solve_sparse, \
    graph_laplacian, solve_neumann
from .dump import write_field, read_field, write_link_field, read_link_field

from errors import DomainError

all_domains = {
    "disk": Disk,
    "ellipse": Ellipse,
    "rectangle": Rectangle,
}


def get_domain(name):
    return all_domains.get(name)


def domain_from_dict(spec):
    spec = dict(spec)
    shape = spec.pop("shape", None)
    cls = get_domain(shape)
    if cls is None:
        raise DomainError(f"unknown domain shape {shape!r}, expected one of {sorted(all_domains)}")
    if "center" in spec:
        spec["center"] = tuple(float(c) for c in spec["center"])
    try:
        return cls(**spec)
    except TypeError as e:
        raise DomainError(f"invalid parameters for {shape}: {e}")
