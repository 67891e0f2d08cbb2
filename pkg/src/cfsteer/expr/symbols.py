from __future__ import annotations

import math
from dataclasses import dataclass

KINDS = ("state", "control", "noise", "parameter")


@dataclass(frozen=True, order=True, slots=True)
class Variable:
    """A named symbol. Ordering follows the declaration index."""

    index: int
    name: str
    kind: str

    @property
    def is_random(self) -> bool:
        # controls sit in random positions until a feedback law replaces them
        return self.kind != "parameter"

    def __repr__(self):
        return self.name


class SymbolTable:
    """Declared variables plus named numeric constants for the parser."""

    def __init__(self, constants=None):
        self._vars: dict[str, Variable] = {}
        self.constants: dict[str, float] = {"pi": math.pi}
        if constants:
            for name, value in constants.items():
                self.set_constant(name, value)

    def declare(self, name: str, kind: str) -> Variable:
        if kind not in KINDS:
            raise ValueError(f"unknown variable kind {kind!r}")
        if name in self._vars or name in ("sin", "cos"):
            raise ValueError(f"symbol {name!r} declared twice")
        v = Variable(len(self._vars), name, kind)
        self._vars[name] = v
        return v

    def fresh(self, base: str, kind: str) -> Variable:
        name, n = base, 0
        while name in self._vars or name in self.constants:
            n += 1
            name = f"{base}_{n}"
        return self.declare(name, kind)

    def set_constant(self, name: str, value: float):
        if name in self._vars:
            raise ValueError(f"constant {name!r} shadows a variable")
        self.constants[name] = float(value)

    def __getitem__(self, name: str) -> Variable:
        return self._vars[name]

    def __contains__(self, name) -> bool:
        return name in self._vars

    def get(self, name, default=None):
        return self._vars.get(name, default)

    def variables(self, kind=None) -> list[Variable]:
        return [v for v in self._vars.values() if kind is None or v.kind == kind]
