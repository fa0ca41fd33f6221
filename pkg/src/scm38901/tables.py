"""Scenario parameter catalog: loading, validation and canonical formatting.

The catalog is a TOML document (see ``data/tr38901.toml``). Every record
carries a ``tr_table_ref`` string naming the TR 38.901 table its numbers were
transcribed from. Geometry- or frequency-dependent entries are stored as small
arithmetic expressions, compiled once at load time by :class:`Expr`.
"""

from __future__ import annotations

import ast
import hashlib
import math
import sys
from dataclasses import dataclass, field, fields
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class Condition(str, Enum):
    LOS = "LOS"
    NLOS = "NLOS"


SCENARIOS = ("RMa", "UMa", "UMiStreetCanyon", "InHOfficeMixed", "InHOfficeOpen")

# Order of the large-scale parameters in the cross-correlation matrix.
LSP_ORDER = ("SF", "K", "DS", "ASD", "ASA", "ZSD", "ZSA")

CORRELATION_KEYS = (
    "ASD_DS", "ASA_DS", "ASA_SF", "ASD_SF", "DS_SF", "ASD_ASA", "ASD_K",
    "ASA_K", "DS_K", "SF_K", "ZSD_SF", "ZSA_SF", "ZSD_K", "ZSA_K", "ZSD_DS",
    "ZSA_DS", "ZSD_ASD", "ZSA_ASD", "ZSD_ASA", "ZSA_ASA", "ZSD_ZSA",
)

D_BP_RULES = ("none", "rma", "effective_height")
PATHLOSS_BRANCHES = ("single", "pre_bp", "post_bp", "nlos")
LOS_PROBABILITY_MODELS = ("exponential", "street", "street_height", "indoor", "indoor_open")

EXPR_VARIABLES = frozenset({"d2D", "d3D", "hBS", "hUT", "h", "W", "dBP", "fc"})
# Variables that may appear in pathloss A/B/C: those fixed for a given link geometry class.
HEIGHT_VARIABLES = frozenset({"hBS", "hUT", "h", "W"})

_FUNCTIONS = {
    "log10": math.log10,
    "sqrt": math.sqrt,
    "exp": math.exp,
    "atan": math.atan,
    "degrees": math.degrees,
    "min": min,
    "max": max,
    "abs": abs,
}
_CONSTANTS = {"pi": math.pi}
_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)


class CatalogError(ValueError):
    """Raised when a catalog file is malformed or fails validation."""


class Expr:
    """A restricted arithmetic expression over named link variables.

    Only numeric literals, ``+ - * / **``, unary minus, the functions in
    ``_FUNCTIONS`` and the names in ``EXPR_VARIABLES`` are accepted.
    """

    __slots__ = ("source", "names", "_code", "_const")

    def __init__(self, source: str | float | int):
        if isinstance(source, bool):
            raise CatalogError(f"boolean is not a valid expression: {source!r}")
        if isinstance(source, (int, float)):
            self.source = repr(float(source))
        else:
            self.source = " ".join(str(source).split())
        try:
            tree = ast.parse(self.source, mode="eval")
        except SyntaxError as exc:
            raise CatalogError(f"cannot parse expression {self.source!r}") from exc
        self.names = frozenset(_check_node(tree.body, self.source))
        self._code = compile(tree, "<catalog>", "eval")
        self._const = None
        if not self.names:
            self._const = float(eval(self._code, {"__builtins__": {}}, dict(_FUNCTIONS, **_CONSTANTS)))

    @property
    def is_constant(self) -> bool:
        return self._const is not None

    @property
    def is_literal(self) -> bool:
        try:
            float(self.source)
        except ValueError:
            return False
        return True

    def __call__(self, **variables: float) -> float:
        if self._const is not None:
            return self._const
        missing = self.names - variables.keys()
        if missing:
            raise KeyError(f"expression {self.source!r} needs {sorted(missing)}")
        scope = dict(_FUNCTIONS, **_CONSTANTS)
        scope.update({k: variables[k] for k in self.names})
        return float(eval(self._code, {"__builtins__": {}}, scope))

    def to_toml(self) -> float | str:
        return float(self.source) if self.is_literal else self.source

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Expr) and other.source == self.source

    def __hash__(self) -> int:
        return hash(self.source)

    def __repr__(self) -> str:
        return f"Expr({self.source!r})"


def _check_node(node: ast.AST, source: str) -> set[str]:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return set()
    if isinstance(node, ast.Name):
        if node.id in _CONSTANTS:
            return set()
        if node.id not in EXPR_VARIABLES:
            raise CatalogError(f"unknown name {node.id!r} in expression {source!r}")
        return {node.id}
    if isinstance(node, ast.BinOp) and isinstance(node.op, _BINOPS):
        return _check_node(node.left, source) | _check_node(node.right, source)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        return _check_node(node.operand, source)
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCTIONS:
        if node.keywords:
            raise CatalogError(f"keyword arguments not allowed in {source!r}")
        names: set[str] = set()
        for arg in node.args:
            names |= _check_node(arg, source)
        return names
    raise CatalogError(f"unsupported construct {ast.dump(node)[:40]}... in expression {source!r}")


# --------------------------------------------------------------------- records


@dataclass(frozen=True)
class ScenarioInfo:
    name: str
    h_bs: float
    h_ut: float
    avg_building_height: float
    street_width: float
    h_bs_min: float
    h_bs_max: float
    h_ut_min: float
    h_ut_max: float
    fc_min_ghz: float
    fc_max_ghz: float
    blocker_distance_m: float
    blocker_width_min_deg: float
    blocker_width_max_deg: float
    tr_table_ref: str


@dataclass(frozen=True)
class LosProbabilityRecord:
    scenario: str
    model: str
    d1: float
    d2: float
    scale1: float
    scale2: float
    factor: float
    tr_table_ref: str


@dataclass(frozen=True)
class PathlossRecord:
    scenario: str
    condition: Condition
    branch: str
    A: Expr
    B: Expr
    C: Expr
    X: Expr
    d_BP_rule: str
    sigma_sf: float
    corr_dist: float
    validity_min_m: float
    validity_max_m: float
    tr_table_ref: str


@dataclass(frozen=True)
class LspRecord:
    scenario: str
    condition: Condition
    fc_floor_ghz: float
    mu_lgDS: Expr
    sigma_lgDS: Expr
    mu_lgASD: Expr
    sigma_lgASD: Expr
    mu_lgASA: Expr
    sigma_lgASA: Expr
    mu_lgZSA: Expr
    sigma_lgZSA: Expr
    mu_lgZSD: Expr
    sigma_lgZSD: Expr
    mu_offset_ZOD: Expr
    sigma_SF: float
    mu_K: float
    sigma_K: float
    r_tau: float
    mu_XPR: float
    sigma_XPR: float
    n_clusters: int
    n_rays: int
    c_DS_ns: Expr
    c_ASD: float
    c_ASA: float
    c_ZSA: float
    xi: float
    correlation: Mapping[str, float]
    tr_table_ref: str

    def correlation_matrix(self) -> np.ndarray:
        """Symmetric matrix in :data:`LSP_ORDER`."""
        mat = np.eye(len(LSP_ORDER))
        for key, value in self.correlation.items():
            a, b = key.split("_")
            i, j = LSP_ORDER.index(a), LSP_ORDER.index(b)
            mat[i, j] = mat[j, i] = value
        return mat


@dataclass(frozen=True)
class SubclusterRecord:
    rays: tuple[int, ...]
    delay_offset_cds: float
    tr_table_ref: str


@dataclass(frozen=True)
class ScalingTable:
    n_clusters: tuple[int, ...]
    c: tuple[float, ...]
    tr_table_ref: str

    def lookup(self, n: int) -> float:
        """Scaling factor for ``n`` clusters, linearly interpolated between table rows."""
        return float(np.interp(n, self.n_clusters, self.c))


@dataclass(frozen=True)
class RayOffsets:
    alpha: tuple[float, ...]
    tr_table_ref: str


@dataclass(frozen=True)
class BlockageConstants:
    n_blockers: int
    blocker_zenith_deg: float
    blocker_height_deg: float
    self_block_attenuation_db: float
    tr_table_ref: str


@dataclass(frozen=True)
class SelfBlockingRegion:
    mode: str
    azimuth_deg: float
    azimuth_width_deg: float
    zenith_deg: float
    zenith_width_deg: float
    tr_table_ref: str


@dataclass(frozen=True)
class ScenarioParams:
    """Everything the models need for one scenario."""

    info: ScenarioInfo
    los_probability: LosProbabilityRecord
    pathloss: Mapping[tuple[Condition, str], PathlossRecord]
    lsp: Mapping[Condition, LspRecord]
    ray_offsets: RayOffsets
    azimuth_scaling: ScalingTable
    zenith_scaling: ScalingTable
    subclusters: tuple[SubclusterRecord, ...]
    blockage: BlockageConstants
    self_blocking: Mapping[str, SelfBlockingRegion]

    @property
    def name(self) -> str:
        return self.info.name

    def pathloss_branches(self, condition: Condition) -> dict[str, PathlossRecord]:
        return {branch: rec for (cond, branch), rec in self.pathloss.items() if cond == condition}


@dataclass(frozen=True)
class ParameterCatalog:
    version: str
    source: str
    scenarios: Mapping[str, ScenarioParams]
    checksum: str = field(default="", compare=False)

    def __getitem__(self, scenario: str) -> ScenarioParams:
        try:
            return self.scenarios[scenario]
        except KeyError:
            raise KeyError(f"unsupported scenario {scenario!r}; known: {sorted(self.scenarios)}") from None


# --------------------------------------------------------------------- parsing

_EXPR_FIELDS = {
    PathlossRecord: {"A", "B", "C", "X"},
    LspRecord: {
        "mu_lgDS", "sigma_lgDS", "mu_lgASD", "sigma_lgASD", "mu_lgASA", "sigma_lgASA",
        "mu_lgZSA", "sigma_lgZSA", "mu_lgZSD", "sigma_lgZSD", "mu_offset_ZOD", "c_DS_ns",
    },
}


def _build(cls, raw: Mapping[str, Any], where: str):
    names = [f.name for f in fields(cls)]
    unknown = set(raw) - set(names)
    if unknown:
        raise CatalogError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = set(names) - set(raw)
    if missing:
        raise CatalogError(f"{where}: missing field(s) {sorted(missing)}")
    expr_fields = _EXPR_FIELDS.get(cls, set())
    kwargs = {}
    for f in fields(cls):
        value = raw[f.name]
        try:
            if f.name in expr_fields:
                value = Expr(value)
            elif f.name == "condition":
                value = Condition(value)
            elif f.type in ("float",):
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise TypeError("expected a number")
                value = float(value)
            elif f.type in ("int",):
                if isinstance(value, bool) or not isinstance(value, int):
                    raise TypeError("expected an integer")
            elif f.type == "str":
                if not isinstance(value, str):
                    raise TypeError("expected a string")
            elif f.name in ("rays", "n_clusters", "alpha", "c"):
                value = tuple(value)
            elif f.name == "correlation":
                value = _parse_correlation(value, where)
        except (CatalogError, TypeError, ValueError) as exc:
            raise CatalogError(f"{where}: field {f.name!r}: {exc}") from None
        kwargs[f.name] = value
    return cls(**kwargs)


def _parse_correlation(raw: Any, where: str) -> dict[str, float]:
    if not isinstance(raw, Mapping):
        raise TypeError("expected a table of pairwise correlations")
    unknown = set(raw) - set(CORRELATION_KEYS)
    if unknown:
        raise CatalogError(f"unknown correlation key(s) {sorted(unknown)}")
    missing = set(CORRELATION_KEYS) - set(raw)
    if missing:
        raise CatalogError(f"missing correlation key(s) {sorted(missing)}")
    return {k: float(raw[k]) for k in CORRELATION_KEYS}


_TOP_LEVEL = {
    "catalog", "scenario", "los_probability", "pathloss", "lsp", "ray_offsets",
    "azimuth_scaling", "zenith_scaling", "subcluster", "blockage", "self_blocking",
}


def parse_catalog(doc: Mapping[str, Any], checksum: str = "") -> ParameterCatalog:
    """Build and validate a catalog from an already-decoded TOML document."""
    unknown = set(doc) - _TOP_LEVEL
    if unknown:
        raise CatalogError(f"unknown top-level section(s) {sorted(unknown)}")
    missing = _TOP_LEVEL - set(doc)
    if missing:
        raise CatalogError(f"missing section(s) {sorted(missing)}")

    header = doc["catalog"]
    if set(header) != {"version", "source"}:
        raise CatalogError("[catalog] must contain exactly 'version' and 'source'")

    infos = [_build(ScenarioInfo, r, f"scenario[{i}]") for i, r in enumerate(doc["scenario"])]
    los = [_build(LosProbabilityRecord, r, f"los_probability[{i}]") for i, r in enumerate(doc["los_probability"])]
    pls = [_build(PathlossRecord, r, f"pathloss[{i}]") for i, r in enumerate(doc["pathloss"])]
    lsps = [_build(LspRecord, r, f"lsp[{i}]") for i, r in enumerate(doc["lsp"])]
    ray_offsets = _build(RayOffsets, doc["ray_offsets"], "ray_offsets")
    az = _build(ScalingTable, doc["azimuth_scaling"], "azimuth_scaling")
    ze = _build(ScalingTable, doc["zenith_scaling"], "zenith_scaling")
    subs = tuple(_build(SubclusterRecord, r, f"subcluster[{i}]") for i, r in enumerate(doc["subcluster"]))
    blockage = _build(BlockageConstants, doc["blockage"], "blockage")
    selfb = {r["mode"]: _build(SelfBlockingRegion, r, f"self_blocking[{i}]") for i, r in enumerate(doc["self_blocking"])}

    _validate_small_scale(ray_offsets, az, ze, subs, blockage, selfb)

    scenarios: dict[str, ScenarioParams] = {}
    for info in infos:
        where = f"scenario {info.name!r}"
        if info.name in scenarios:
            raise CatalogError(f"{where}: duplicate scenario record")
        if info.name not in SCENARIOS:
            raise CatalogError(f"{where}: unknown scenario name")
        _validate_info(info)
        los_recs = [r for r in los if r.scenario == info.name]
        if len(los_recs) != 1:
            raise CatalogError(f"{where}: expected exactly one los_probability record, found {len(los_recs)}")
        _validate_los(los_recs[0])
        pathloss = {}
        for i, rec in enumerate(pls):
            if rec.scenario == info.name:
                key = (rec.condition, rec.branch)
                if key in pathloss:
                    raise CatalogError(f"pathloss[{i}]: duplicate ({rec.condition.value}, {rec.branch}) for {info.name}")
                _validate_pathloss(rec, f"pathloss[{i}]")
                pathloss[key] = rec
        _validate_branch_set(info.name, pathloss)
        lsp = {}
        for i, rec in enumerate(lsps):
            if rec.scenario == info.name:
                if rec.condition in lsp:
                    raise CatalogError(f"lsp[{i}]: duplicate {rec.condition.value} record for {info.name}")
                _validate_lsp(rec, f"lsp[{i}]")
                lsp[rec.condition] = rec
        for cond in Condition:
            if cond not in lsp:
                raise CatalogError(f"{where}: missing lsp record for {cond.value}")
        scenarios[info.name] = ScenarioParams(
            info=info,
            los_probability=los_recs[0],
            pathloss=pathloss,
            lsp=lsp,
            ray_offsets=ray_offsets,
            azimuth_scaling=az,
            zenith_scaling=ze,
            subclusters=subs,
            blockage=blockage,
            self_blocking=selfb,
        )

    for name in SCENARIOS:
        if name not in scenarios:
            raise CatalogError(f"missing scenario {name!r}")
    for kind, recs in (("los_probability", los), ("pathloss", pls), ("lsp", lsps)):
        for i, rec in enumerate(recs):
            if rec.scenario not in scenarios:
                raise CatalogError(f"{kind}[{i}]: references unknown scenario {rec.scenario!r}")

    return ParameterCatalog(
        version=str(header["version"]),
        source=str(header["source"]),
        scenarios=scenarios,
        checksum=checksum,
    )


def _require(cond: bool, where: str, message: str) -> None:
    if not cond:
        raise CatalogError(f"{where}: {message}")


def _validate_ref(ref: str, where: str) -> None:
    _require(bool(ref.strip()), where, "tr_table_ref must be non-empty")


def _validate_info(info: ScenarioInfo) -> None:
    where = f"scenario {info.name!r}"
    _validate_ref(info.tr_table_ref, where)
    _require(0 < info.h_bs_min <= info.h_bs <= info.h_bs_max, where, "h_bs outside [h_bs_min, h_bs_max]")
    _require(0 < info.h_ut_min <= info.h_ut <= info.h_ut_max, where, "h_ut outside [h_ut_min, h_ut_max]")
    _require(0 < info.fc_min_ghz < info.fc_max_ghz, where, "invalid frequency range")
    _require(info.avg_building_height > 0 and info.street_width > 0, where, "building height and street width must be positive")
    _require(info.blocker_distance_m > 0, where, "blocker_distance_m must be positive")
    _require(0 < info.blocker_width_min_deg <= info.blocker_width_max_deg, where, "invalid blocker width range")


def _validate_los(rec: LosProbabilityRecord) -> None:
    where = f"los_probability {rec.scenario!r}"
    _validate_ref(rec.tr_table_ref, where)
    _require(rec.model in LOS_PROBABILITY_MODELS, where, f"model must be one of {LOS_PROBABILITY_MODELS}")
    _require(rec.d1 >= 0 and rec.scale1 > 0, where, "d1 must be >= 0 and scale1 > 0")
    if rec.model in ("indoor", "indoor_open"):
        _require(rec.d2 > rec.d1 and rec.scale2 > 0, where, "indoor models need d2 > d1 and scale2 > 0")
        _require(0 < rec.factor <= 1, where, "factor must lie in (0, 1]")


def _validate_pathloss(rec: PathlossRecord, where: str) -> None:
    _validate_ref(rec.tr_table_ref, where)
    _require(rec.branch in PATHLOSS_BRANCHES, where, f"branch must be one of {PATHLOSS_BRANCHES}")
    _require(rec.d_BP_rule in D_BP_RULES, where, f"d_BP_rule must be one of {D_BP_RULES}")
    _require(rec.sigma_sf >= 0, where, "field 'sigma_sf' must be >= 0")
    _require(rec.corr_dist > 0, where, "field 'corr_dist' must be > 0")
    _require(0 < rec.validity_min_m < rec.validity_max_m, where, "validity range must satisfy 0 < min < max")
    for name in ("A", "B", "C"):
        extra = getattr(rec, name).names - HEIGHT_VARIABLES
        _require(not extra, where, f"field {name!r} may only reference {sorted(HEIGHT_VARIABLES)}, got {sorted(extra)}")
    if rec.branch in ("pre_bp", "post_bp"):
        _require(rec.d_BP_rule != "none", where, "dual-slope branches need a d_BP_rule")


def _validate_branch_set(scenario: str, pathloss: Mapping[tuple[Condition, str], PathlossRecord]) -> None:
    los = {b for (c, b) in pathloss if c == Condition.LOS}
    nlos = {b for (c, b) in pathloss if c == Condition.NLOS}
    where = f"scenario {scenario!r}"
    _require(los in ({"single"}, {"pre_bp", "post_bp"}), where, f"LOS pathloss needs 'single' or 'pre_bp'+'post_bp', got {sorted(los)}")
    _require(nlos == {"nlos"}, where, f"NLOS pathloss needs exactly one 'nlos' branch, got {sorted(nlos)}")


def _validate_lsp(rec: LspRecord, where: str) -> None:
    _validate_ref(rec.tr_table_ref, where)
    _require(rec.sigma_SF >= 0, where, "field 'sigma_SF' must be >= 0")
    _require(rec.sigma_K >= 0, where, "field 'sigma_K' must be >= 0")
    _require(rec.sigma_XPR >= 0, where, "field 'sigma_XPR' must be >= 0")
    _require(rec.r_tau > 1, where, "field 'r_tau' must be > 1")
    _require(rec.n_clusters >= 1, where, "field 'n_clusters' must be >= 1")
    _require(rec.n_rays >= 1, where, "field 'n_rays' must be >= 1")
    _require(rec.xi >= 0, where, "field 'xi' must be >= 0")
    for name in ("c_ASD", "c_ASA", "c_ZSA"):
        _require(getattr(rec, name) >= 0, where, f"field {name!r} must be >= 0")
    for name in _EXPR_FIELDS[LspRecord]:
        extra = getattr(rec, name).names - {"fc", "d2D", "hUT", "hBS"}
        _require(not extra, where, f"field {name!r} references unsupported names {sorted(extra)}")
    mat = rec.correlation_matrix()
    _require(bool(np.all(np.abs(mat) <= 1)), where, "correlation entries must lie in [-1, 1]")
    eig = np.linalg.eigvalsh(mat)
    _require(eig.min() >= -1e-10, where, f"correlation matrix is not positive semi-definite (min eigenvalue {eig.min():.4g})")


def _validate_small_scale(ray_offsets, az, ze, subs, blockage, selfb) -> None:
    _validate_ref(ray_offsets.tr_table_ref, "ray_offsets")
    _require(len(ray_offsets.alpha) >= 1, "ray_offsets", "alpha must not be empty")
    for name, table in (("azimuth_scaling", az), ("zenith_scaling", ze)):
        _validate_ref(table.tr_table_ref, name)
        _require(len(table.n_clusters) == len(table.c) >= 1, name, "n_clusters and c must have equal, non-zero length")
        _require(list(table.n_clusters) == sorted(set(table.n_clusters)), name, "n_clusters must be strictly increasing")
        _require(all(c > 0 for c in table.c), name, "scaling factors must be positive")
    rays = sorted(r for s in subs for r in s.rays)
    _require(rays == list(range(1, len(ray_offsets.alpha) + 1)), "subcluster", "subclusters must partition the ray indices")
    for s in subs:
        _validate_ref(s.tr_table_ref, "subcluster")
    _validate_ref(blockage.tr_table_ref, "blockage")
    _require(blockage.n_blockers >= 0, "blockage", "n_blockers must be >= 0")
    _require(blockage.self_block_attenuation_db >= 0, "blockage", "self_block_attenuation_db must be >= 0")
    for mode, region in selfb.items():
        _validate_ref(region.tr_table_ref, f"self_blocking {mode!r}")


# --------------------------------------------------------------------- I/O


def load_catalog(path: str | Path | None = None) -> ParameterCatalog:
    """Load and validate a catalog file; ``None`` loads the shipped default."""
    if path is None:
        data = resources.files("scm38901").joinpath("data/tr38901.toml").read_bytes()
    else:
        data = Path(path).read_bytes()
    try:
        doc = tomllib.loads(data.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise CatalogError(f"{path or 'default catalog'}: {exc}") from exc
    return parse_catalog(doc, checksum=hashlib.sha256(data).hexdigest())


_DEFAULT: ParameterCatalog | None = None


def default_catalog() -> ParameterCatalog:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_catalog()
    return _DEFAULT


def _record_to_dict(rec) -> dict[str, Any]:
    out = {}
    for f in fields(rec):
        value = getattr(rec, f.name)
        if isinstance(value, Expr):
            value = value.to_toml()
        elif isinstance(value, Condition):
            value = value.value
        elif isinstance(value, tuple):
            value = list(value)
        elif isinstance(value, Mapping):
            value = dict(value)
        out[f.name] = value
    return out


def catalog_to_dict(catalog: ParameterCatalog) -> dict[str, Any]:
    """Canonical document form: scenarios in :data:`SCENARIOS` order."""
    names = [n for n in SCENARIOS if n in catalog.scenarios]
    first = catalog[names[0]]
    pathloss, lsp = [], []
    for n in names:
        params = catalog[n]
        for cond in Condition:
            for branch in PATHLOSS_BRANCHES:
                rec = params.pathloss.get((cond, branch))
                if rec is not None:
                    pathloss.append(_record_to_dict(rec))
            lsp.append(_record_to_dict(params.lsp[cond]))
    return {
        "catalog": {"version": catalog.version, "source": catalog.source},
        "scenario": [_record_to_dict(catalog[n].info) for n in names],
        "los_probability": [_record_to_dict(catalog[n].los_probability) for n in names],
        "pathloss": pathloss,
        "lsp": lsp,
        "ray_offsets": _record_to_dict(first.ray_offsets),
        "azimuth_scaling": _record_to_dict(first.azimuth_scaling),
        "zenith_scaling": _record_to_dict(first.zenith_scaling),
        "subcluster": [_record_to_dict(s) for s in first.subclusters],
        "blockage": _record_to_dict(first.blockage),
        "self_blocking": [_record_to_dict(r) for r in first.self_blocking.values()],
    }


def format_catalog(catalog: ParameterCatalog) -> str:
    """Serialize a catalog to its canonical TOML text."""
    return tomli_w.dumps(catalog_to_dict(catalog))


def save_catalog(catalog: ParameterCatalog, path: str | Path) -> None:
    Path(path).write_text(format_catalog(catalog), encoding="utf-8")
