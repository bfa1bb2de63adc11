"""Declared symbols: which boxes are constants and which are the variable."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


class RegistryError(ValueError):
    pass


@dataclass(frozen=True)
class Entry:
    rows: Optional[str]
    cols: Optional[str]
    is_variable: bool = False


@dataclass
class VarRegistry:
    entries: dict = field(default_factory=dict)
    dims: set = field(default_factory=set)

    def declare_dim(self, name: str):
        if name in self.dims or name in self.entries:
            raise RegistryError(f"{name!r} declared twice")
        self.dims.add(name)

    def declare(self, name: str, rows, cols=None, is_variable=False):
        if name in self.entries or name in self.dims:
            raise RegistryError(f"{name!r} declared twice")
        for d in (rows, cols):
            if d is not None and d not in self.dims:
                raise RegistryError(f"unknown dimension {d!r} for {name!r}")
        self.entries[name] = Entry(rows, cols, is_variable)

    def __contains__(self, name):
        return name in self.entries

    def __getitem__(self, name) -> Entry:
        return self.entries[name]

    def shape(self, name):
        e = self.entries[name]
        return e.rows, e.cols

    @property
    def variables(self) -> list:
        return [k for k, e in self.entries.items() if e.is_variable]
