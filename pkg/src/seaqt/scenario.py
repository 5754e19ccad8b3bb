"""Scenario files: parsing, overrides, validation and model construction.

A scenario is a TOML document with tables ``system``, ``initial_state``,
``model``, optional ``baseline``, ``integration`` and ``output``.
Matrices are nested lists whose entries are reals or ``[re, im]`` pairs,
or a table ``{diagonal = [...]}``.
"""

from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import unitary_group

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .composite import noninteracting
from .integrator import IntegrationConfig
from .ksgl import jump_operators_from_rates
from .models import CompositeSeaModel, HamiltonianModel, KsglModel, PhenoModel, SeaModel
from .operators import is_hermitian
from .pheno import PhenoMode
from .state import DensityState, InvalidStateError, make_state

MODEL_KINDS = (
    "sea",
    "sea_composite",
    "massieu",
    "helmholtz_theta_s",
    "helmholtz_reservoir",
    "heat_interaction",
    "ksgl_pauli",
    "hamiltonian",
)

_PHENO = {
    "massieu": ("massieu_const_theta", "theta", "tau_g"),
    "helmholtz_theta_s": ("helmholtz_theta_S", None, "tau_f"),
    "helmholtz_reservoir": ("helmholtz_reservoir", "t_r", "tau_f"),
    "heat_interaction": ("heat_interaction", "t_q", "tau_f"),
}


class ScenarioError(ValueError):
    """Validation failure; ``field`` is the dotted path of the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def load_scenario(path) -> dict:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ScenarioError("<file>", f"{path} not found") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError("<file>", f"{path}: {exc}") from exc


def parse_value(text: str):
    """TOML literal if it parses, otherwise the raw string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_override(cfg: dict, assignment: str) -> dict:
    """Apply ``a.b.c=value`` to a copy of ``cfg``."""
    if "=" not in assignment:
        raise ScenarioError(assignment, "override must look like key=value")
    key, text = assignment.split("=", 1)
    parts = key.strip().split(".")
    if not all(parts):
        raise ScenarioError(key, "empty key segment")
    out = copy.deepcopy(cfg)
    node = out
    for p in parts[:-1]:
        nxt = node.setdefault(p, {})
        if not isinstance(nxt, dict):
            raise ScenarioError(key, f"{p} is not a table")
        node = nxt
    node[parts[-1]] = parse_value(text.strip())
    return out


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _get(tbl: dict, key: str, where: str, required: bool = True, default=None):
    if key in tbl:
        return tbl[key]
    if required:
        raise ScenarioError(f"{where}.{key}", "missing")
    return default


def _number(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ScenarioError(where, f"expected a number, got {x!r}")
    return float(x)


def _positive(x, where: str) -> float:
    v = _number(x, where)
    if not v > 0 or not np.isfinite(v):
        raise ScenarioError(where, f"must be positive and finite, got {v!r}")
    return v


def parse_matrix(spec, where: str, dim: int | None = None) -> np.ndarray:
    """Matrix from ``{diagonal=[...]}``, ``{matrix=[[...]]}`` or a bare nested list."""
    if isinstance(spec, dict):
        if "diagonal" in spec:
            diag = spec["diagonal"]
            if not isinstance(diag, list) or not diag:
                raise ScenarioError(f"{where}.diagonal", "expected a non-empty list")
            m = np.diag([_number(x, f"{where}.diagonal[{i}]") for i, x in enumerate(diag)]).astype(complex)
        elif "matrix" in spec:
            return parse_matrix(spec["matrix"], f"{where}.matrix", dim)
        else:
            raise ScenarioError(where, "expected 'diagonal' or 'matrix'")
    elif isinstance(spec, list):
        if not spec or not all(isinstance(r, list) for r in spec):
            raise ScenarioError(where, "expected a list of rows")
        n = len(spec)
        m = np.zeros((n, n), dtype=complex)
        for i, row in enumerate(spec):
            if len(row) != n:
                raise ScenarioError(f"{where}[{i}]", f"row has {len(row)} entries, expected {n}")
            for j, x in enumerate(row):
                loc = f"{where}[{i}][{j}]"
                if isinstance(x, list):
                    if len(x) != 2:
                        raise ScenarioError(loc, "complex entries are [re, im] pairs")
                    m[i, j] = complex(_number(x[0], loc), _number(x[1], loc))
                else:
                    m[i, j] = _number(x, loc)
    else:
        raise ScenarioError(where, f"expected a matrix, got {type(spec).__name__}")
    if dim is not None and m.shape[0] != dim:
        raise ScenarioError(where, f"dimension {m.shape[0]} does not match system dimension {dim}")
    return m


def _hermitian(spec, where: str, dim: int | None = None) -> np.ndarray:
    m = parse_matrix(spec, where, dim)
    if not is_hermitian(m):
        raise ScenarioError(where, "matrix is not Hermitian")
    return 0.5 * (m + m.conj().T)


@dataclass
class Scenario:
    """Validated scenario with constructed operators."""

    raw: dict
    H: np.ndarray
    rho0: DensityState
    model_kind: str
    model_params: dict
    integration: IntegrationConfig
    dims: tuple | None = None
    H_parts: tuple | None = None
    hbar: float = 1.0
    kB: float = 1.0
    observables: dict = field(default_factory=dict)
    stride: int = 1
    out_path: str | None = None
    hash: str = ""

    @property
    def dim(self) -> int:
        return self.H.shape[0]


def _system(cfg: dict):
    sysd = _get(cfg, "system", "<root>")
    if not isinstance(sysd, dict):
        raise ScenarioError("system", "expected a table")
    dims = sysd.get("dims")
    hbar = _positive(sysd.get("hbar", 1.0), "system.hbar")
    kB = _positive(sysd.get("kB", 1.0), "system.kB")
    parts = None
    if dims is not None:
        if not (isinstance(dims, list) and len(dims) == 2 and all(isinstance(x, int) and x >= 2 for x in dims)):
            raise ScenarioError("system.dims", "expected two integers >= 2")
        dims = tuple(dims)
        if "hamiltonian" in sysd:
            H = _hermitian(sysd["hamiltonian"], "system.hamiltonian", dims[0] * dims[1])
        else:
            ha = _hermitian(_get(sysd, "h_a", "system"), "system.h_a", dims[0])
            hb = _hermitian(_get(sysd, "h_b", "system"), "system.h_b", dims[1])
            parts = (ha, hb)
            H = noninteracting(ha, hb)
            if "interaction" in sysd:
                H = H + _hermitian(sysd["interaction"], "system.interaction", dims[0] * dims[1])
    else:
        H = _hermitian(_get(sysd, "hamiltonian", "system"), "system.hamiltonian")
    if "dimension" in sysd:
        d = sysd["dimension"]
        if not isinstance(d, int) or d != H.shape[0]:
            raise ScenarioError("system.dimension", f"{d!r} does not match the hamiltonian ({H.shape[0]})")
    return H, dims, parts, hbar, kB


def _basis(kind, H, seed, where: str) -> np.ndarray:
    d = H.shape[0]
    if kind == "hamiltonian":
        return np.linalg.eigh(H)[1]
    if kind == "computational":
        return np.eye(d, dtype=complex)
    if kind == "random":
        return unitary_group.rvs(d, random_state=np.random.default_rng(seed)) if d > 1 else np.eye(1)
    raise ScenarioError(where, f"unknown basis {kind!r}; expected hamiltonian, computational or random")


def _state_matrix(spec: dict, H, where: str, seed_default) -> np.ndarray:
    if not isinstance(spec, dict):
        raise ScenarioError(where, "expected a table")
    d = H.shape[0]
    if "matrix" in spec:
        return parse_matrix(spec["matrix"], f"{where}.matrix", d)
    eig = _get(spec, "eigenvalues", where)
    if not isinstance(eig, list) or len(eig) != d:
        raise ScenarioError(f"{where}.eigenvalues", f"expected {d} values")
    p = np.array([_number(x, f"{where}.eigenvalues[{i}]") for i, x in enumerate(eig)])
    if np.any(p < 0):
        raise ScenarioError(f"{where}.eigenvalues", "must be nonnegative")
    seed = spec.get("seed", seed_default)
    u = _basis(spec.get("basis", "hamiltonian"), H, seed, f"{where}.basis")
    return (u * p) @ u.conj().T


def _initial_state(cfg: dict, H, dims, parts) -> DensityState:
    spec = _get(cfg, "initial_state", "<root>")
    seed = cfg.get("seed", 0)
    if isinstance(spec, dict) and ("a" in spec or "b" in spec):
        if dims is None or parts is None:
            raise ScenarioError("initial_state", "product states need system.dims with h_a and h_b")
        ra = _state_matrix(_get(spec, "a", "initial_state"), parts[0], "initial_state.a", seed)
        rb = _state_matrix(_get(spec, "b", "initial_state"), parts[1], "initial_state.b", seed)
        m = np.kron(ra, rb)
    else:
        m = _state_matrix(spec, H, "initial_state", seed)
    try:
        return make_state(m)
    except InvalidStateError as exc:
        raise ScenarioError("initial_state", str(exc)) from exc


def _model(cfg: dict, table: str, dims, d: int) -> tuple[str, dict]:
    m = _get(cfg, table, "<root>")
    if not isinstance(m, dict):
        raise ScenarioError(table, "expected a table")
    kind = _get(m, "kind", table)
    if kind not in MODEL_KINDS:
        raise ScenarioError(f"{table}.kind", f"unknown kind {kind!r}; expected one of {', '.join(MODEL_KINDS)}")
    params: dict = {}
    if kind == "sea":
        if "tau" in m:
            params["tau"] = _positive(m["tau"], f"{table}.tau")
        params["tau_d"] = _positive(m.get("tau_d", 1.0), f"{table}.tau_d")
    elif kind == "sea_composite":
        if dims is None:
            raise ScenarioError("system.dims", "required for sea_composite")
        params["tau_a"] = _positive(_get(m, "tau_a", table), f"{table}.tau_a")
        params["tau_b"] = _positive(_get(m, "tau_b", table), f"{table}.tau_b")
    elif kind in _PHENO:
        pk, theta_key, tau_key = _PHENO[kind]
        tau = _positive(m.get(tau_key, 1.0), f"{table}.{tau_key}")
        theta = 1.0
        if theta_key is not None:
            th = _get(m, theta_key, table)
            theta = _number(th, f"{table}.{theta_key}") if kind == "massieu" else _positive(th, f"{table}.{theta_key}")
            if theta == 0:
                raise ScenarioError(f"{table}.{theta_key}", "must be nonzero")
        params["mode"] = PhenoMode(pk, theta, tau)
    elif kind == "ksgl_pauli":
        w = _get(m, "w_matrix", table)
        wm = np.real(parse_matrix(w, f"{table}.w_matrix", d))
        if np.any(wm < 0):
            raise ScenarioError(f"{table}.w_matrix", "rates must be nonnegative")
        params["w"] = wm
        params["jump_basis"] = m.get("jump_basis", "hamiltonian")
        if params["jump_basis"] not in ("hamiltonian", "computational"):
            raise ScenarioError(f"{table}.jump_basis", "expected hamiltonian or computational")
    return kind, params


def _integration(cfg: dict) -> IntegrationConfig:
    tbl = cfg.get("integration", {})
    if not isinstance(tbl, dict):
        raise ScenarioError("integration", "expected a table")
    allowed = set(IntegrationConfig.__dataclass_fields__)
    kw = {}
    for k, v in tbl.items():
        if k not in allowed:
            raise ScenarioError(f"integration.{k}", "unknown field")
        kw[k] = v
    try:
        return IntegrationConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ScenarioError("integration", str(exc)) from exc


def build_scenario(cfg: dict) -> Scenario:
    """Validate a raw scenario dictionary."""
    H, dims, parts, hbar, kB = _system(cfg)
    rho0 = _initial_state(cfg, H, dims, parts)
    kind, params = _model(cfg, "model", dims, H.shape[0])
    integ = _integration(cfg)
    out = cfg.get("output", {})
    if not isinstance(out, dict):
        raise ScenarioError("output", "expected a table")
    stride = out.get("stride", 1)
    if not isinstance(stride, int) or stride < 1:
        raise ScenarioError("output.stride", "expected a positive integer")
    obs = {}
    for name, spec in out.get("observables", {}).items():
        obs[name] = _hermitian(spec, f"output.observables.{name}", H.shape[0])
    return Scenario(cfg, H, rho0, kind, params, integ, dims, parts, hbar, kB, obs, stride,
                    out.get("path"), config_hash(cfg))


def make_model(sc: Scenario, kind: str | None = None, params: dict | None = None):
    """Model handle for ``kind`` (defaults to the scenario's model)."""
    kind = kind or sc.model_kind
    params = sc.model_params if params is None else params
    if kind == "sea":
        return SeaModel(sc.H, tau_d=params.get("tau_d", 1.0), tau=params.get("tau"), hbar=sc.hbar, kB=sc.kB)
    if kind == "sea_composite":
        return CompositeSeaModel(sc.H, sc.dims, params["tau_a"], params["tau_b"], sc.hbar, sc.kB)
    if kind in _PHENO:
        return PhenoModel(sc.H, params["mode"], sc.hbar, sc.kB)
    if kind == "ksgl_pauli":
        basis = np.linalg.eigh(sc.H)[1] if params.get("jump_basis", "hamiltonian") == "hamiltonian" else None
        return KsglModel(sc.H, jump_operators_from_rates(params["w"], basis), sc.hbar, sc.kB)
    if kind == "hamiltonian":
        return HamiltonianModel(sc.H, sc.hbar, sc.kB)
    raise ScenarioError("model.kind", f"unknown kind {kind!r}")


def baseline_params(sc: Scenario, kind: str) -> dict:
    """Parameters for a comparison run: the ``baseline`` table with ``kind`` forced."""
    tbl = dict(sc.raw.get("baseline", {}))
    tbl["kind"] = kind
    _, params = _model({"baseline": tbl}, "baseline", sc.dims, sc.dim)
    return params


def bundled_scenarios() -> dict:
    """Name to path of the example scenarios shipped with the package."""
    root = Path(__file__).parent / "scenarios"
    return {p.stem: p for p in sorted(root.glob("*.toml"))}
