"""Exact frequency bookkeeping through the optical conversion chain.

Nominal frequencies are exact integers (SHG doubles, degenerate PDC halves,
SFG adds, a double-pass AOM shifts by 2*f_rf); no floating point touches a
carrier.  Absolute instabilities propagate to first order: perfectly
correlated through SHG/PDC, in quadrature through SFG when the inputs have
disjoint provenance, linearly otherwise.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Tuple, Union

import numpy as np

from .errors import ParameterError
from .noisegen import CombModel


@dataclass(frozen=True)
class ChainNode:
    """An optical frequency with instability and systematic-offset bookkeeping.

    ``sigma_abs_hz`` is the absolute instability at averaging time
    ``sigma_tau_s``; combining nodes tagged with different taus is a
    parameter error (ADEV is tau-dependent).
    """

    nominal_hz: int
    sigma_abs_hz: float = 0.0
    sigma_tau_s: float = 1.0
    offset_hz: float = 0.0
    provenance: Tuple[str, ...] = ()

    def __post_init__(self):
        if not isinstance(self.nominal_hz, (int, np.integer)) or isinstance(self.nominal_hz, bool):
            raise ParameterError("nominal_hz must be an exact integer")
        if self.nominal_hz <= 0:
            raise ParameterError("nominal_hz must be > 0")
        if self.sigma_abs_hz < 0.0:
            raise ParameterError("sigma_abs_hz must be >= 0")
        object.__setattr__(self, "nominal_hz", int(self.nominal_hz))
        object.__setattr__(self, "provenance", tuple(self.provenance))


@dataclass(frozen=True)
class AfcSpec:
    """Absorption window the converted photon must hit."""

    center_hz: int
    width_hz: float
    stability_target_hz: float

    def __post_init__(self):
        object.__setattr__(self, "center_hz", int(self.center_hz))
        if not 0.0 < self.stability_target_hz < self.width_hz:
            raise ParameterError("need 0 < stability_target_hz < width_hz")


@dataclass(frozen=True)
class BudgetReport:
    node: ChainNode
    afc: AfcSpec
    stability_pass: bool
    offset_pass: bool
    stability_margin_hz: float
    offset_margin_hz: float

    def to_dict(self) -> dict:
        return {
            "node": {
                "nominal_hz": self.node.nominal_hz,
                "sigma_abs_hz": self.node.sigma_abs_hz,
                "sigma_tau_s": self.node.sigma_tau_s,
                "offset_hz": self.node.offset_hz,
                "provenance": list(self.node.provenance),
            },
            "afc": {
                "center_hz": self.afc.center_hz,
                "width_hz": self.afc.width_hz,
                "stability_target_hz": self.afc.stability_target_hz,
            },
            "stability_pass": self.stability_pass,
            "offset_pass": self.offset_pass,
            "stability_margin_hz": self.stability_margin_hz,
            "offset_margin_hz": self.offset_margin_hz,
        }


def shg(a: ChainNode) -> ChainNode:
    """Second harmonic: nominal, sigma and offset all double (self-correlated)."""
    return replace(a, nominal_hz=a.nominal_hz * 2, sigma_abs_hz=a.sigma_abs_hz * 2.0,
                   offset_hz=a.offset_hz * 2.0)


def pdc_degenerate(pump: ChainNode) -> ChainNode:
    """Degenerate downconversion: exact halving of nominal, sigma and offset."""
    if pump.nominal_hz % 2 != 0:
        raise ParameterError("degenerate PDC needs an even pump carrier "
                             "(offset the carrier by 1 Hz upstream)")
    return replace(pump, nominal_hz=pump.nominal_hz // 2, sigma_abs_hz=pump.sigma_abs_hz / 2.0,
                   offset_hz=pump.offset_hz / 2.0)


def sfg(a: ChainNode, b: ChainNode) -> ChainNode:
    """Sum frequency: exact integer addition of nominals.

    Offsets add linearly.  Sigmas combine in quadrature when provenance is
    disjoint (independent sources), linearly otherwise (common mode).
    """
    if a.sigma_tau_s != b.sigma_tau_s:
        raise ParameterError("cannot combine sigmas tagged with different taus")
    independent = not (set(a.provenance) & set(b.provenance))
    if independent:
        sigma = float(np.hypot(a.sigma_abs_hz, b.sigma_abs_hz))
    else:
        sigma = a.sigma_abs_hz + b.sigma_abs_hz
    return ChainNode(
        nominal_hz=a.nominal_hz + b.nominal_hz,
        sigma_abs_hz=sigma,
        sigma_tau_s=a.sigma_tau_s,
        offset_hz=a.offset_hz + b.offset_hz,
        provenance=a.provenance + tuple(p for p in b.provenance if p not in a.provenance),
    )


def aom_double_pass(a: ChainNode, f_rf_hz: int) -> ChainNode:
    """Double-pass AOM: shift nominal by 2*f_rf (sigma unchanged)."""
    if not isinstance(f_rf_hz, (int, np.integer)) or isinstance(f_rf_hz, bool):
        raise ParameterError("f_rf_hz must be an exact integer")
    return replace(a, nominal_hz=a.nominal_hz + 2 * int(f_rf_hz))


def solve_aom(target_hz: int, current: ChainNode) -> float:
    """RF frequency whose double-pass shift moves ``current`` onto ``target``."""
    return (target_hz - current.nominal_hz) / 2.0


def comb_beat(nu_hz, comb: CombModel):
    """Nearest comb line and beat: n = round((nu - f_ceo)/f_rep), ties toward lower n.

    Accepts a scalar integer or an integer ndarray; the beat never exceeds
    f_rep/2.
    """
    if isinstance(nu_hz, np.ndarray):
        if nu_hz.dtype.kind not in "iu":
            raise ParameterError("array input must be integer-typed")
        if np.any(nu_hz <= comb.f_ceo_hz):
            raise ParameterError("nu must exceed f_ceo")
        q, r = np.divmod(nu_hz - comb.f_ceo_hz, comb.f_rep_hz)
        up = 2 * r > comb.f_rep_hz
        n = q + up
        f_beat = np.where(up, comb.f_rep_hz - r, r)
        return n, f_beat
    nu = int(nu_hz)
    if nu <= comb.f_ceo_hz:
        raise ParameterError("nu must exceed f_ceo")
    q, r = divmod(nu - comb.f_ceo_hz, comb.f_rep_hz)
    if 2 * r > comb.f_rep_hz:
        return q + 1, comb.f_rep_hz - r
    return q, r


def afc_budget(node: ChainNode, afc: AfcSpec) -> BudgetReport:
    """Check a chain output against the AFC stability and centering budget."""
    stability_margin = afc.stability_target_hz - node.sigma_abs_hz
    mismatch = abs(node.nominal_hz + node.offset_hz - afc.center_hz)
    offset_margin = afc.width_hz / 2.0 - (mismatch + node.sigma_abs_hz)
    return BudgetReport(
        node=node, afc=afc,
        stability_pass=bool(stability_margin >= 0.0),
        offset_pass=bool(offset_margin >= 0.0),
        stability_margin_hz=float(stability_margin),
        offset_margin_hz=float(offset_margin),
    )


# ---------------------------------------------------------------------------
# Chain-description JSON: sources plus a DAG of operations.

def _node_from_dict(d: dict, label: str) -> ChainNode:
    return ChainNode(
        nominal_hz=int(d["nominal_hz"]),
        sigma_abs_hz=float(d.get("sigma_abs_hz", 0.0)),
        sigma_tau_s=float(d.get("sigma_tau_s", 1.0)),
        offset_hz=float(d.get("offset_hz", 0.0)),
        provenance=tuple(d.get("provenance", [label])),
    )


def evaluate_chain(doc: dict) -> dict:
    """Evaluate a chain-description document; returns nodes and budget report.

    Document layout::

        {"sources": {name: {nominal_hz, sigma_abs_hz, ...}},
         "operations": [{"op": "shg"|"pdc"|"sfg"|"aom", "in": ..., "out": name, ...}],
         "afc": {center_hz, width_hz, stability_target_hz},   # optional
         "budget_node": name}                                 # required with afc
    """
    nodes = {}
    for name, src in doc.get("sources", {}).items():
        nodes[name] = _node_from_dict(src, name)
    for i, op in enumerate(doc.get("operations", [])):
        kind = op.get("op")
        out = op.get("out")
        if not out:
            raise ParameterError(f"operations[{i}]: missing 'out'")
        try:
            if kind == "shg":
                nodes[out] = shg(nodes[op["in"]])
            elif kind == "pdc":
                nodes[out] = pdc_degenerate(nodes[op["in"]])
            elif kind == "sfg":
                a, b = op["in"]
                nodes[out] = sfg(nodes[a], nodes[b])
            elif kind == "aom":
                nodes[out] = aom_double_pass(nodes[op["in"]], int(op["f_rf_hz"]))
            else:
                raise ParameterError(f"operations[{i}]: unknown op {kind!r}")
        except KeyError as exc:
            raise ParameterError(f"operations[{i}]: unresolved node {exc}") from None
    result = {
        "nodes": {
            name: {"nominal_hz": n.nominal_hz, "sigma_abs_hz": n.sigma_abs_hz,
                   "sigma_tau_s": n.sigma_tau_s, "offset_hz": n.offset_hz,
                   "provenance": list(n.provenance)}
            for name, n in nodes.items()
        }
    }
    if "afc" in doc:
        afc = AfcSpec(
            center_hz=int(doc["afc"]["center_hz"]),
            width_hz=float(doc["afc"]["width_hz"]),
            stability_target_hz=float(doc["afc"]["stability_target_hz"]),
        )
        budget_name = doc.get("budget_node")
        if budget_name not in nodes:
            raise ParameterError(f"budget_node {budget_name!r} is not a defined node")
        result["budget"] = afc_budget(nodes[budget_name], afc).to_dict()
    return result


def load_chain(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
