"""Rewrites that let a call-based taint engine see conditions and field sources.

Every conditional gets a preceding dummy sink call carrying its condition
variables, and every load of a catalog source field becomes a call to a
generated getter, e.g. ``b = field Build.BRAND`` becomes
``b = BuildClass.getBuild_BRAND()``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .catalog import RESERVED_CLASSES, Catalog
from .tir import Assign, Call, FieldLoad, Goto, If, MethodDef, Program, Statement, VoidCall

SINK_CLASS = "IfClass"
SOURCE_CLASS = "BuildClass"


class InstrumentationError(ValueError):
    pass


@dataclass(frozen=True)
class Instrumented:
    program: Program
    # "IfClass.ifMethod_k" -> (method key, label of the original if)
    sinks: dict[str, tuple[str, str]]
    # "BuildClass.getC_F" -> "C.F"
    sources: dict[str, str]


def _check_not_instrumented(p: Program) -> None:
    for c in p.classes:
        if c.name in RESERVED_CLASSES:
            raise InstrumentationError(f"class {c.name} uses a reserved name")
    for m in p.methods():
        for s in m.body:
            call = s.call
            if call is not None and call.cls in RESERVED_CLASSES:
                raise InstrumentationError(
                    f"{m.key}:{s.label} already calls {call.signature}; program is instrumented")


def _map_methods(p: Program, fn) -> Program:
    return Program(tuple(replace(c, methods=tuple(fn(m) for m in c.methods)) for c in p.classes))


def instrument_ifs(p: Program) -> tuple[Program, dict[str, tuple[str, str]]]:
    _check_not_instrumented(p)
    return _instrument_ifs(p)


def _instrument_ifs(p: Program) -> tuple[Program, dict[str, tuple[str, str]]]:
    registry: dict[str, tuple[str, str]] = {}

    def rewrite(m: MethodDef) -> MethodDef:
        if not any(isinstance(s.instr, If) for s in m.body):
            return m
        taken = {s.label for s in m.body}
        body = []
        moved = {}
        for s in m.body:
            if isinstance(s.instr, If):
                k = len(registry)
                name = f"ifMethod_{k}"
                label = f"__if{k}"
                while label in taken:
                    label += "_"
                taken.add(label)
                registry[f"{SINK_CLASS}.{name}"] = (m.key, s.label)
                moved[s.label] = label
                body.append(Statement(label, VoidCall(Call(SINK_CLASS, name, s.instr.variables))))
            body.append(s)
        # jumps into a conditional must pass through its sink call
        body = [_retarget(s, moved) for s in body]
        return replace(m, body=tuple(body))

    return _map_methods(p, rewrite), registry


def _retarget(s: Statement, moved: dict[str, str]) -> Statement:
    ins = s.instr
    if isinstance(ins, (If, Goto)) and ins.target in moved:
        return replace(s, instr=replace(ins, target=moved[ins.target]))
    return s


def getter_name(field_sig: str) -> str:
    cls, fld = field_sig.split(".", 1)
    return f"get{cls}_{fld}"


def instrument_field_sources(p: Program, cat: Catalog) -> tuple[Program, dict[str, str]]:
    _check_not_instrumented(p)
    return _instrument_field_sources(p, cat)


def _instrument_field_sources(p: Program, cat: Catalog) -> tuple[Program, dict[str, str]]:
    registry: dict[str, str] = {}

    def rewrite(m: MethodDef) -> MethodDef:
        body = []
        for s in m.body:
            ins = s.instr
            if isinstance(ins, Assign) and isinstance(ins.rhs, FieldLoad) \
                    and ins.rhs.signature in cat.source_fields:
                name = getter_name(ins.rhs.signature)
                registry[f"{SOURCE_CLASS}.{name}"] = ins.rhs.signature
                s = replace(s, instr=Assign(ins.target, Call(SOURCE_CLASS, name, ())))
            body.append(s)
        return replace(m, body=tuple(body))

    return _map_methods(p, rewrite), registry


def instrument(p: Program, cat: Catalog) -> Instrumented:
    """Apply both rewrites; field sources first so the sink pass sees the
    original conditions unchanged."""
    _check_not_instrumented(p)
    q, sources = _instrument_field_sources(p, cat)
    q, sinks = _instrument_ifs(q)
    return Instrumented(q, sinks, sources)
