"""Scenario documents: schema validation and construction of the objects they describe."""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Optional

import jsonschema

from .correspond import Correspondence, CorrespondenceError, CoveringLeg, FoldTwistLeg
from .curves import CurveError, NotClosed, make_curve
from .exprlang import ExprError
from .flatgeom import (
    GeometryError, Identity, Twist, TwistProfile, covering_from_sublattice, dehn_twist_profile,
    good_map_profile, make_cylinder, make_fold, make_torus,
)
from .jetlab import FirstType, HamiltonianRotation, JetError, SecondType, SmoothMap2to4, SmoothMap4to4

SCHEMA_VERSION = 1


class ScenarioError(Exception):
    """Invalid scenario input, located by a JSON pointer."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer
        self.message = message


def pointer(path) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in path)


def load_schema() -> dict:
    text = resources.files("lagcorr").joinpath("data/schema/scenario-v1.json").read_text("utf-8")
    return json.loads(text)


def shipped_scenarios() -> dict:
    """Name -> path of the scenarios bundled with the package."""
    d = resources.files("lagcorr").joinpath("data/scenarios")
    return {p.name[:-5]: p for p in sorted(d.iterdir(), key=lambda p: p.name) if p.name.endswith(".json")}


def validate(doc) -> None:
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = list(validator.iter_errors(doc))
    if errors:
        # the deepest error is usually the informative one
        err = max(errors, key=lambda e: (len(e.absolute_path), -len(str(e.message))))
        best = jsonschema.exceptions.best_match(errors)
        if len(best.absolute_path) >= len(err.absolute_path):
            err = best
        raise ScenarioError(pointer(err.absolute_path), err.message)


def _q(v) -> Fraction:
    return Fraction(v) if not isinstance(v, float) else Fraction(v).limit_denominator(10**12)


def _pt(p):
    return (_q(p[0]), _q(p[1]))


@dataclass
class Scenario:
    doc: dict
    path: Optional[str] = None

    @property
    def kind(self):
        return self.doc["kind"]

    @property
    def name(self):
        return self.doc.get("name", "scenario")

    @property
    def seed(self):
        return self.doc.get("seed")

    # -- surfaces and curves ------------------------------------------------

    def _surface(self, ref, path):
        if isinstance(ref, str):
            table = self.doc.get("surfaces", {})
            if ref not in table:
                raise ScenarioError(pointer(path), f"unknown surface {ref!r}")
            return self._surface(table[ref], ["surfaces", ref])
        try:
            if ref["kind"] == "torus":
                b1, b2 = ref["basis"]
                return make_torus(_pt(b1), _pt(b2))
            return make_cylinder(_q(ref["circumference"]), _pt(ref.get("height", (-1, 1))))
        except GeometryError as e:
            raise ScenarioError(pointer(path), str(e)) from None

    def _twist(self, spec, path):
        try:
            if "n" in spec:
                return Twist(dehn_twist_profile(spec["n"]))
            prof = spec.get("profile")
            if prof is None:
                return Identity()
            if prof == "good":
                return Twist(good_map_profile())
            return Twist(TwistProfile(tuple(_pt(b) for b in prof)))
        except ValueError as e:
            raise ScenarioError(pointer(path), str(e)) from None

    def correspondence(self) -> Correspondence:
        spec = self.doc["correspondence"]
        base = ["correspondence"]
        kinds = {spec["leg1"]["type"], spec["leg2"]["type"]}
        if len(kinds) != 1:
            raise ScenarioError(pointer(base), "mixed covering and fold legs are not modelled")
        try:
            if kinds == {"covering"}:
                if "domain" not in spec:
                    raise ScenarioError(pointer(base), "a covering correspondence needs a domain")
                F = self._surface(spec["domain"], base + ["domain"])
                legs = []
                for k in ("leg1", "leg2"):
                    T = self._surface(spec[k]["target"], base + [k, "target"])
                    try:
                        legs.append(CoveringLeg(covering_from_sublattice(F, T)))
                    except GeometryError as e:
                        raise ScenarioError(pointer(base + [k, "target"]), str(e)) from None
                return Correspondence(F, *legs)
            circ = 1
            if "domain" in spec:
                D = self._surface(spec["domain"], base + ["domain"])
                if not D.is_cylinder or D.height != (-1, 1):
                    raise ScenarioError(pointer(base + ["domain"]),
                                        "a fold correspondence needs the cylinder of height [-1, 1]")
                circ = D.circumference
            fold = make_fold(circ)
            legs = [FoldTwistLeg(fold, self._twist(spec[k], base + [k])) for k in ("leg1", "leg2")]
            return Correspondence(fold.source, *legs)
        except CorrespondenceError as e:
            raise ScenarioError(pointer(base), str(e)) from None

    def curves(self, corr=None):
        corr = corr or self.correspondence()
        out = []
        for k, (spec, surface) in enumerate(zip(self.doc["curves"], (corr.target1, corr.target2))):
            try:
                out.append(make_curve(surface, [_pt(v) for v in spec["vertices"]], _pt(spec["holonomy"])))
            except NotClosed as e:
                raise ScenarioError(pointer(["curves", k, "holonomy"]), str(e)) from None
            except CurveError as e:
                raise ScenarioError(pointer(["curves", k, "vertices"]), str(e)) from None
        return out

    # -- maps -------------------------------------------------------------

    def _params(self, spec):
        return {k: float(_q(v)) if not isinstance(v, float) else v for k, v in spec.get("params", {}).items()}

    def smooth_map(self) -> SmoothMap2to4:
        spec = self.doc["map"]
        try:
            return SmoothMap2to4(spec["components"], tuple(spec.get("variables", ("x1", "x2"))),
                                 self._params(spec))
        except ExprError as e:
            raise ScenarioError(pointer(["map", "components"]), str(e)) from None
        except JetError as e:
            raise ScenarioError(pointer(["map"]), str(e)) from None

    def extension(self) -> SmoothMap4to4:
        spec = self.doc["extension"]
        try:
            return SmoothMap4to4(spec["components"], params=self._params(spec))
        except ExprError as e:
            raise ScenarioError(pointer(["extension", "components"]), str(e)) from None

    def perturbation(self):
        spec = self.doc["perturbation"]
        t = spec.get("t", 0)
        t = float(t) if isinstance(t, float) else _q(t)
        if spec["type"] == "first":
            return FirstType(t)
        if spec["type"] == "second":
            return SecondType(t)
        return HamiltonianRotation(float(spec["eps"]), float(t), spec.get("step"))

    @property
    def window(self):
        w = self.doc.get("window", [[-1, 1], [-1, 1]])
        return (tuple(map(float, w[0])), tuple(map(float, w[1])))

    @property
    def grid(self):
        return int(self.doc.get("grid", 200))

    @property
    def thresholds(self):
        return dict(self.doc.get("thresholds", {}))


def from_dict(doc, path=None) -> Scenario:
    validate(doc)
    return Scenario(doc, path)


def load(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise ScenarioError("", f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ScenarioError("", f"not valid JSON: {e.msg} at line {e.lineno}") from None
    return from_dict(doc, str(path))
