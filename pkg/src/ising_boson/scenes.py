"""Scene files: TOML descriptions of a domain, boundary arcs, insertions,
and tolerances, plus the builder turning them into engine objects.

The key names below are a stable contract. A scene chooses one language
for its fields: either the spin-model names (sigma, mu, epsilon, psi,
psi_star, boundary_sigma), evaluated as squared correlations through the
dictionary, or the free-field names (exp, cos, sin, dphi, dbar_phi,
grad_squared, boundary_sign), evaluated directly. Mixing the two in one
scene is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import ising
from .boson import (
    BoundarySign,
    Cos,
    DBarPhi,
    DPhi,
    GradSquared,
    NormalExp,
    Scene,
    Sin,
)
from .errors import SceneError
from .geometry import (
    FREE,
    WIRED,
    BoundaryArc,
    BoundaryData,
    Circle,
    CircularDomain,
    HalfPlaneDomain,
    Insertion,
    validate,
)

SCHEMA = 1

ISING_FIELDS = {
    "sigma": ising.Sigma,
    "mu": ising.Mu,
    "epsilon": ising.Epsilon,
    "psi": ising.Psi,
    "psi_star": ising.PsiStar,
    "boundary_sigma": ising.BoundarySigma,
}
VERTEX_FIELDS = {"exp": NormalExp, "cos": Cos, "sin": Sin}
BARE_FIELDS = {
    "dphi": DPhi,
    "dbar_phi": DBarPhi,
    "grad_squared": GradSquared,
    "boundary_sign": BoundarySign,
}

DEFAULT_TOLERANCES = {"boundary": 1e-9, "lattice": 1e-14, "theta": 1e-14}


@dataclass(frozen=True)
class SceneSpec:
    scene: Scene
    insertions: tuple
    mode: str  # "ising" or "boson"
    tolerances: dict


def _number(table, key, where, required=True, default=None):
    if key not in table:
        if required:
            raise SceneError(["missing key '%s' in %s" % (key, where)])
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SceneError(["key '%s' in %s must be a number" % (key, where)])
    return float(v)


def _string(table, key, where):
    v = table.get(key)
    if not isinstance(v, str):
        raise SceneError(["key '%s' in %s must be a string" % (key, where)])
    return v


def _circle(table, where):
    if not isinstance(table, dict):
        raise SceneError(["%s must be a table" % where])
    return Circle(
        center=complex(_number(table, "re", where), _number(table, "im", where)),
        radius=_number(table, "radius", where),
    )


def _domain(doc):
    table = doc.get("domain")
    if not isinstance(table, dict):
        raise SceneError(["missing [domain] table"])
    model = table.get("model", "circular")
    if model == "half-plane":
        if "outer" in table or table.get("holes"):
            raise SceneError(["half-plane model takes no circles"])
        return HalfPlaneDomain()
    if model != "circular":
        raise SceneError(["unknown domain model '%s'" % (model,)])
    if "outer" not in table:
        raise SceneError(["missing [domain.outer] table"])
    outer = _circle(table["outer"], "domain.outer")
    holes = tuple(
        _circle(h, "domain.holes[%d]" % i)
        for i, h in enumerate(table.get("holes", ()))
    )
    return CircularDomain(outer=outer, holes=holes)


def _boundary(doc, domain):
    table = doc.get("bc")
    if table is None:
        return None  # all wired, marked arc on the outer circle
    if isinstance(domain, HalfPlaneDomain):
        raise SceneError(["boundary arcs are not supported on the "
                          "half-plane model"])
    raw = table.get("arcs", ())
    if not raw:
        raise SceneError(["[bc] present but bc.arcs is empty"])
    arcs = []
    for i, a in enumerate(raw):
        where = "bc.arcs[%d]" % i
        if not isinstance(a, dict):
            raise SceneError(["%s must be a table" % where])
        cond = _string(a, "condition", where)
        if cond not in (WIRED, FREE):
            raise SceneError(["condition in %s must be 'wired' or 'free'"
                              % where])
        comp = a.get("component")
        if isinstance(comp, bool) or not isinstance(comp, int):
            raise SceneError(["key 'component' in %s must be an integer"
                              % where])
        arcs.append(BoundaryArc(
            component=comp,
            start_angle=_number(a, "start", where),
            end_angle=_number(a, "end", where),
            condition=cond,
        ))
    marked = table.get("marked_arc", 0)
    if isinstance(marked, bool) or not isinstance(marked, int):
        raise SceneError(["key 'marked_arc' in bc must be an integer"])
    return BoundaryData(arcs=arcs, marked_arc=marked)


def _insertions(doc):
    items = doc.get("insertions", ())
    out, modes = [], set()
    for i, t in enumerate(items):
        where = "insertions[%d]" % i
        if not isinstance(t, dict):
            raise SceneError(["%s must be a table" % where])
        z = complex(_number(t, "x", where), _number(t, "y", where))
        field = _string(t, "field", where)
        if field in VERTEX_FIELDS:
            gamma = _number(t, "gamma", where)
            gamma_im = _number(t, "gamma_im", where, required=False,
                               default=0.0)
            op = VERTEX_FIELDS[field](complex(gamma, gamma_im))
            modes.add("boson")
        elif field in ISING_FIELDS or field in BARE_FIELDS:
            if "gamma" in t or "gamma_im" in t:
                raise SceneError(["field '%s' in %s takes no gamma"
                                  % (field, where)])
            if field in ISING_FIELDS:
                op = ISING_FIELDS[field]()
                modes.add("ising")
            else:
                op = BARE_FIELDS[field]()
                modes.add("boson")
        else:
            raise SceneError(["unknown field '%s' in %s" % (field, where)])
        out.append(Insertion(location=z, op=op))
    if not out:
        raise SceneError(["scene has no insertions"])
    if len(modes) == 2:
        raise SceneError(["scene mixes spin-model and free-field insertions"])
    return tuple(out), modes.pop()


def _tolerances(doc, overrides=None):
    tols = dict(DEFAULT_TOLERANCES)
    table = doc.get("tolerances", {})
    if not isinstance(table, dict):
        raise SceneError(["[tolerances] must be a table"])
    for k in table:
        if k not in DEFAULT_TOLERANCES:
            raise SceneError(["unknown tolerance '%s'" % (k,)])
        tols[k] = _number(table, k, "tolerances")
    for k, v in (overrides or {}).items():
        if v is not None:
            tols[k] = float(v)
    for k, v in tols.items():
        if not 0.0 < v < 1.0:
            raise SceneError(["tolerance '%s' must be in (0, 1)" % (k,)])
    return tols


def build_scene(doc, tol_overrides=None):
    """Turn a parsed scene document into (scene, insertions, mode, tols)."""
    if not isinstance(doc, dict):
        raise SceneError(["scene file must contain a table"])
    if doc.get("schema") != SCHEMA:
        raise SceneError(["unsupported schema version %r (expected %d)"
                          % (doc.get("schema"), SCHEMA)])
    domain = _domain(doc)
    bc = _boundary(doc, domain)
    insertions, mode = _insertions(doc)
    tols = _tolerances(doc, tol_overrides)
    if isinstance(domain, HalfPlaneDomain):
        for ins in insertions:
            if type(ins.op).__name__ in ("BoundarySigma", "BoundarySign"):
                raise SceneError(["boundary spin not supported on the "
                                  "half-plane model"])
    scene = Scene(domain, bc=bc, tol=tols["boundary"],
                  tail_target=tols["lattice"])
    diags = validate(scene.domain, scene.bc, insertions)
    if diags:
        raise SceneError(diags)
    return SceneSpec(scene=scene, insertions=insertions, mode=mode,
                     tolerances=tols)


def load_scene(path, tol_overrides=None):
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise SceneError(["cannot read scene file: %s" % exc])
    except tomllib.TOMLDecodeError as exc:
        raise SceneError(["scene file is not valid TOML: %s" % exc])
    return build_scene(doc, tol_overrides)
