"""Network case schema, admittance assembly and reduction to (Z, E) form.

Two current polarities meet in this module.  ``build_admittance`` returns the
ordinary nodal matrix (``i_inj = Y @ v``, current injected into the network).
The reduced objects use the absorbed polarity instead: currents flow *out* of
the network through the buses, so the stored blocks are ``-Y`` and

    V = E - Z @ I,   Z = -Y_LL^-1,   E = -Y_LL^-1 Y_LS V_S

with ``Z`` equal to the ordinary driving-point impedance (``Z = 0.1`` for a
single ``z = 0.1`` line).
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np

BUS_KINDS = ("slack", "pq_load", "pq_dg", "ci_dg", "tie")


class CaseError(ValueError):
    """Malformed or inconsistent case data."""


class DegenerateNetworkError(CaseError):
    """Singular admittance block (islanded or degenerate network)."""


@dataclass(frozen=True)
class Bus:
    id: Hashable
    kind: str
    shunt: complex = 0j
    s_base: complex | None = None
    i_base: complex | None = None

    @property
    def is_pq(self) -> bool:
        return self.kind in ("pq_load", "pq_dg")


@dataclass(frozen=True)
class Branch:
    from_bus: Hashable
    to_bus: Hashable
    z: complex


@dataclass(frozen=True)
class NetworkCase:
    """Raw per-phase network description in per-unit.

    Injections are signed net injections into the network: generation
    positive, load negative.
    """

    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    slack_voltage: complex = 1.0 + 0j
    base_mva: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "branches", tuple(self.branches))
        self.validate()

    def validate(self) -> None:
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            dupes = sorted({str(i) for i in ids if ids.count(i) > 1})
            raise CaseError(f"bus ids must be unique (duplicated: {', '.join(dupes)})")
        for b in self.buses:
            if b.kind not in BUS_KINDS:
                raise CaseError(f"bus {b.id}: unknown kind {b.kind!r}")
            if b.kind in ("pq_load", "pq_dg") and b.s_base is None:
                raise CaseError(f"bus {b.id}: {b.kind} bus needs s_base")
            if b.kind == "ci_dg" and b.i_base is None:
                raise CaseError(f"bus {b.id}: ci_dg bus needs i_base")
            if b.s_base is not None and b.i_base is not None:
                raise CaseError(f"bus {b.id}: s_base and i_base are mutually exclusive")
            if b.kind in ("slack", "tie") and (b.s_base is not None or b.i_base is not None):
                raise CaseError(f"bus {b.id}: {b.kind} bus cannot carry an injection")
        n_slack = sum(b.kind == "slack" for b in self.buses)
        if n_slack != 1:
            raise CaseError(f"exactly one slack bus required, found {n_slack}")
        known = set(ids)
        for k, br in enumerate(self.branches):
            if br.from_bus not in known or br.to_bus not in known:
                raise CaseError(f"branch {k}: unknown end bus ({br.from_bus} -> {br.to_bus})")
            if br.from_bus == br.to_bus:
                raise CaseError(f"branch {k}: self loop at bus {br.from_bus}")
            if br.z == 0:
                raise CaseError(f"branch {k}: series impedance must be nonzero")
        if not _connected(ids, self.branches):
            raise CaseError("network graph is not connected")
        if self.slack_voltage == 0:
            raise CaseError("slack voltage must be nonzero")

    @property
    def bus_index(self) -> dict:
        return {b.id: k for k, b in enumerate(self.buses)}

    @property
    def slack(self) -> Bus:
        return next(b for b in self.buses if b.kind == "slack")

    def ids_of(self, *kinds: str) -> list:
        return [b.id for b in self.buses if b.kind in kinds]

    def replace_buses(self, buses: Sequence[Bus]) -> "NetworkCase":
        return NetworkCase(tuple(buses), self.branches, self.slack_voltage, self.base_mva)

    def replace_branches(self, branches: Sequence[Branch]) -> "NetworkCase":
        return NetworkCase(self.buses, tuple(branches), self.slack_voltage, self.base_mva)


def _connected(ids, branches) -> bool:
    if not ids:
        return False
    adj = {i: [] for i in ids}
    for br in branches:
        adj[br.from_bus].append(br.to_bus)
        adj[br.to_bus].append(br.from_bus)
    seen = {ids[0]}
    queue = deque([ids[0]])
    while queue:
        for nb in adj[queue.popleft()]:
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return len(seen) == len(ids)


# ---------------------------------------------------------------------------
# case file I/O


def _pair(obj, where: str) -> complex:
    if (
        not isinstance(obj, (list, tuple))
        or len(obj) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj)
    ):
        raise CaseError(f"{where}: expected a [real, imag] pair of numbers, got {obj!r}")
    return complex(float(obj[0]), float(obj[1]))


def _bus_id(value, where: str):
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise CaseError(f"{where}: bus id must be an int or a string, got {value!r}")
    return value


def case_from_dict(doc: dict) -> NetworkCase:
    if not isinstance(doc, dict):
        raise CaseError("case document must be an object with meta/buses/branches")
    for section in ("meta", "buses", "branches"):
        if section not in doc:
            raise CaseError(f"missing section {section!r}")
    meta = doc["meta"]
    if not isinstance(meta, dict):
        raise CaseError("meta: expected an object")
    base_mva = meta.get("base_mva", 1.0)
    if isinstance(base_mva, bool) or not isinstance(base_mva, (int, float)) or base_mva <= 0:
        raise CaseError(f"meta.base_mva: expected a positive number, got {base_mva!r}")
    v_s = _pair(meta.get("slack_voltage", [1.0, 0.0]), "meta.slack_voltage")

    if not isinstance(doc["buses"], list):
        raise CaseError("buses: expected a list")
    buses = []
    for k, rec in enumerate(doc["buses"]):
        where = f"buses[{k}]"
        if not isinstance(rec, dict):
            raise CaseError(f"{where}: expected an object")
        for key in ("id", "kind"):
            if key not in rec:
                raise CaseError(f"{where}: missing field {key!r}")
        unknown = set(rec) - {"id", "kind", "shunt", "s_base", "i_base"}
        if unknown:
            raise CaseError(f"{where}: unknown field(s) {sorted(unknown)}")
        s_base = _pair(rec["s_base"], f"{where}.s_base") if "s_base" in rec else None
        i_base = _pair(rec["i_base"], f"{where}.i_base") if "i_base" in rec else None
        buses.append(
            Bus(
                id=_bus_id(rec["id"], f"{where}.id"),
                kind=rec["kind"],
                shunt=_pair(rec.get("shunt", [0.0, 0.0]), f"{where}.shunt"),
                s_base=s_base,
                i_base=i_base,
            )
        )

    if not isinstance(doc["branches"], list):
        raise CaseError("branches: expected a list")
    branches = []
    for k, rec in enumerate(doc["branches"]):
        where = f"branches[{k}]"
        if not isinstance(rec, dict):
            raise CaseError(f"{where}: expected an object")
        for key in ("from", "to", "z"):
            if key not in rec:
                raise CaseError(f"{where}: missing field {key!r}")
        branches.append(
            Branch(
                _bus_id(rec["from"], f"{where}.from"),
                _bus_id(rec["to"], f"{where}.to"),
                _pair(rec["z"], f"{where}.z"),
            )
        )
    return NetworkCase(tuple(buses), tuple(branches), v_s, float(base_mva))


def case_to_dict(case: NetworkCase) -> dict:
    def pair(c: complex) -> list:
        return [c.real, c.imag]

    buses = []
    for b in case.buses:
        rec = {"id": b.id, "kind": b.kind, "shunt": pair(b.shunt)}
        if b.s_base is not None:
            rec["s_base"] = pair(b.s_base)
        if b.i_base is not None:
            rec["i_base"] = pair(b.i_base)
        buses.append(rec)
    return {
        "meta": {"base_mva": case.base_mva, "slack_voltage": pair(case.slack_voltage)},
        "buses": buses,
        "branches": [
            {"from": br.from_bus, "to": br.to_bus, "z": pair(br.z)} for br in case.branches
        ],
    }


def load_case(path) -> NetworkCase:
    """Read and validate a JSON case file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CaseError(f"{path}: cannot read case file ({exc.strerror})") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return case_from_dict(doc)
    except CaseError as exc:
        raise CaseError(f"{path}: {exc}") from exc


def save_case(case: NetworkCase, path) -> None:
    Path(path).write_text(json.dumps(case_to_dict(case), indent=1) + "\n")


# ---------------------------------------------------------------------------
# admittance matrices


def build_admittance(case: NetworkCase) -> np.ndarray:
    """Ordinary nodal admittance matrix in case bus order (``i_inj = Y v``)."""
    idx = case.bus_index
    n = len(case.buses)
    Y = np.zeros((n, n), dtype=complex)
    for br in case.branches:
        i, k = idx[br.from_bus], idx[br.to_bus]
        y = 1.0 / br.z
        Y[i, i] += y
        Y[k, k] += y
        Y[i, k] -= y
        Y[k, i] -= y
    for j, b in enumerate(case.buses):
        Y[j, j] += b.shunt
    return Y


def eliminate_ties(Y: np.ndarray, ties: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Kron-reduce zero-injection buses out of ``Y``.

    Returns ``(Y_red, kept)`` where ``kept`` lists the surviving row indices
    in their original order.
    """
    n = Y.shape[0]
    ties = np.asarray(sorted(set(int(t) for t in ties)), dtype=int)
    kept = np.setdiff1d(np.arange(n), ties)
    if ties.size == 0:
        return Y.copy(), kept
    Ytt = Y[np.ix_(ties, ties)]
    Ykt = Y[np.ix_(kept, ties)]
    Ytk = Y[np.ix_(ties, kept)]
    try:
        X = np.linalg.solve(Ytt, Ytk)
    except np.linalg.LinAlgError as exc:
        raise DegenerateNetworkError("tie-bus admittance block is singular") from exc
    if not np.all(np.isfinite(X)) or np.linalg.cond(Ytt) > 1e14:
        raise DegenerateNetworkError("tie-bus admittance block is singular")
    return Y[np.ix_(kept, kept)] - Ykt @ X, kept


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class ReducedNetwork:
    """Slack-partitioned network in absorbed-current polarity.

    Non-slack buses are ordered constant-power first (declaration order), then
    constant-current.  ``Z`` and ``E`` span all of them; the ``*_pq`` views and
    :meth:`equivalent_source` give the quantities seen by constant-power buses
    once the fixed constant-current injections are folded into the source.
    """

    Y_SS: np.ndarray
    Y_SL: np.ndarray
    Y_LS: np.ndarray
    Y_LL: np.ndarray
    Z: np.ndarray
    E: np.ndarray
    slack_voltage: complex
    pq_ids: tuple
    ci_ids: tuple
    load_mask: np.ndarray
    s_base: np.ndarray
    i_base: np.ndarray
    case: NetworkCase | None = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.pq_ids)

    @property
    def n_ci(self) -> int:
        return len(self.ci_ids)

    @property
    def Z_pq(self) -> np.ndarray:
        n = self.n
        return self.Z[:n, :n]

    @property
    def E_pq(self) -> np.ndarray:
        return self.E[: self.n]

    @property
    def W(self) -> np.ndarray:
        """``diag(-Y_LL^-1 Y_LS)`` over constant-power buses (zero-load voltage / slack voltage)."""
        return np.diag(self.E_pq / self.slack_voltage)

    def equivalent_source(self, i_ci_inj=None) -> np.ndarray:
        """Source vector seen by constant-power buses, ``E - Z[:, ci] I_ci``.

        ``i_ci_inj`` is in the case convention (injection positive); the
        base constant-current injections are used when omitted.
        """
        n = self.n
        if self.n_ci == 0:
            return self.E_pq.copy()
        i_inj = self.i_base if i_ci_inj is None else np.asarray(i_ci_inj, dtype=complex)
        # absorbed current is the negated injection
        return self.E_pq - self.Z[:n, n:] @ (-i_inj)

    def injections(self, loading: float = 1.0) -> np.ndarray:
        """Constant-power injections with loads scaled by ``loading``."""
        s = self.s_base.copy()
        s[self.load_mask] *= loading
        return s

    def voltages_all(self, V_pq, i_ci_inj=None) -> np.ndarray:
        """Voltages at every non-slack bus given constant-power bus voltages."""
        n = self.n
        if self.n_ci == 0:
            return np.asarray(V_pq, dtype=complex).copy()
        i_ci = self.i_base if i_ci_inj is None else np.asarray(i_ci_inj, dtype=complex)
        V_pq = np.asarray(V_pq, dtype=complex)
        # absorbed currents at pq buses recovered from V = E' - Z_pq I
        I_pq = np.linalg.solve(self.Z_pq, self.equivalent_source(i_ci) - V_pq)
        V_ci = self.E[n:] - self.Z[n:, :n] @ I_pq - self.Z[n:, n:] @ (-i_ci)
        return np.concatenate([V_pq, V_ci])


def reduce(case: NetworkCase) -> ReducedNetwork:
    """Kron-eliminate tie buses and partition around the slack."""
    Y = build_admittance(case)
    kinds = [b.kind for b in case.buses]
    ties = [k for k, kind in enumerate(kinds) if kind == "tie"]
    Y_red, kept = eliminate_ties(Y, ties)
    kept_buses = [case.buses[k] for k in kept]

    pq = [j for j, b in enumerate(kept_buses) if b.is_pq]
    ci = [j for j, b in enumerate(kept_buses) if b.kind == "ci_dg"]
    s = [j for j, b in enumerate(kept_buses) if b.kind == "slack"]
    order = pq + ci
    # out-of-network current polarity
    Yp = -Y_red
    Y_SS = Yp[np.ix_(s, s)]
    Y_SL = Yp[np.ix_(s, order)]
    Y_LS = Yp[np.ix_(order, s)]
    Y_LL = Yp[np.ix_(order, order)]
    if Y_LL.size and (np.linalg.cond(Y_LL) > 1e14):
        raise DegenerateNetworkError("islanded or degenerate network (singular Y_LL)")
    try:
        Z = -np.linalg.inv(Y_LL)
    except np.linalg.LinAlgError as exc:
        raise DegenerateNetworkError("islanded or degenerate network (singular Y_LL)") from exc
    v_s = complex(case.slack_voltage)
    E = (Z @ Y_LS).ravel() * v_s

    pq_buses = [kept_buses[j] for j in pq]
    ci_buses = [kept_buses[j] for j in ci]
    return ReducedNetwork(
        Y_SS=_frozen(Y_SS),
        Y_SL=_frozen(Y_SL),
        Y_LS=_frozen(Y_LS),
        Y_LL=_frozen(Y_LL),
        Z=_frozen(Z),
        E=_frozen(E),
        slack_voltage=v_s,
        pq_ids=tuple(b.id for b in pq_buses),
        ci_ids=tuple(b.id for b in ci_buses),
        load_mask=_frozen(np.array([b.kind == "pq_load" for b in pq_buses], dtype=bool)),
        s_base=_frozen(np.array([b.s_base for b in pq_buses], dtype=complex)),
        i_base=_frozen(np.array([b.i_base for b in ci_buses], dtype=complex)),
        case=case,
    )
