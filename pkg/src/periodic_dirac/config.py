"""INI run configuration.

Vectors are whitespace-separated numbers; matrices and vector lists use
``;`` between rows.  See the README for the full schema.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass

import numpy as np

from .clifford import build_clifford
from .errors import PreconditionError
from .lattice import Lattice
from .potential import fields


class ConfigError(ValueError):
    """The configuration file is missing, malformed or inconsistent."""


def parse_vector(text, dtype=float):
    try:
        return np.array([dtype(t) for t in text.replace(",", " ").split()])
    except ValueError as exc:
        raise ConfigError(f"cannot parse numbers from {text!r}") from exc


def parse_rows(text, dtype=float):
    rows = [parse_vector(r, dtype) for r in text.split(";") if r.strip()]
    if not rows or len({len(r) for r in rows}) != 1:
        raise ConfigError(f"ragged or empty row list {text!r}")
    return np.array(rows)


@dataclass
class RunConfig:
    parser: configparser.ConfigParser
    path: str

    @classmethod
    def load(cls, path):
        if not os.path.isfile(path):
            raise ConfigError(f"config file {path!r} does not exist")
        cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
        try:
            with open(path, encoding="utf-8") as fh:
                cp.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        cfg = cls(cp, path)
        cfg.lattice()
        return cfg

    # typed getters ----------------------------------------------------------
    def get(self, section, key, default=None):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key)
        if default is None:
            raise ConfigError(f"missing [{section}] {key}")
        return default

    def has(self, section, key):
        return self.parser.has_option(section, key)

    def getfloat(self, section, key, default=None, lo=-np.inf, hi=np.inf):
        raw = self.get(section, key, None if default is None else str(default))
        try:
            val = float(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} is not a number") from exc
        if not lo <= val <= hi:
            raise ConfigError(f"[{section}] {key}={val} outside [{lo}, {hi}]")
        return val

    def getint(self, section, key, default=None, lo=-(2**62), hi=2**62):
        raw = self.get(section, key, None if default is None else str(default))
        try:
            val = int(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} is not an integer") from exc
        if not lo <= val <= hi:
            raise ConfigError(f"[{section}] {key}={val} outside [{lo}, {hi}]")
        return val

    def getvector(self, section, key, default=None, dtype=float):
        return parse_vector(self.get(section, key, default), dtype)

    def getrows(self, section, key, default=None, dtype=float):
        return parse_rows(self.get(section, key, default), dtype)

    def resolve(self, rel):
        return rel if os.path.isabs(rel) else os.path.join(os.path.dirname(os.path.abspath(self.path)), rel)

    # model objects ----------------------------------------------------------
    def lattice(self):
        d = self.getint("lattice", "dim", lo=2, hi=8)
        basis = self.getrows("lattice", "basis", default=";".join(
            " ".join("1" if i == j else "0" for j in range(d)) for i in range(d)))
        if basis.shape != (d, d):
            raise ConfigError(f"[lattice] basis must be {d} rows of {d} numbers")
        try:
            return Lattice(basis)
        except PreconditionError as exc:
            raise ConfigError(str(exc)) from exc

    def clifford(self):
        return build_clifford(self.lattice().dim)

    @property
    def seed(self):
        return self.getint("run", "seed", default=0, lo=0, hi=2**64 - 1)

    @property
    def n_max(self):
        return self.getint("basis", "n_max", default=2, lo=0, hi=12)

    def potentials(self):
        """``(V, A)`` from the ``[potential]`` section; either may be ``None``.

        ``V`` is scalar or matrix valued, ``A`` vector valued.
        """
        lat = self.lattice()
        cl = build_clifford(lat.dim)
        preset = self.get("potential", "preset", "free")
        V = A = None
        if preset == "free":
            pass
        elif preset == "mass":
            m = self.getfloat("potential", "mass", default=1.0)
            V = fields.constant(lat, m * cl.beta)
        elif preset == "scalar_mode":
            n0 = self.getvector("potential", "mode", dtype=int)
            V = fields.single_mode(lat, n0, self.getfloat("potential", "amplitude"))
        elif preset == "coulomb":
            V = self.coulomb_series()
        elif preset == "table":
            V, A = self._tables(lat)
        else:
            raise ConfigError(f"unknown potential preset {preset!r}")
        if self.has("potential", "vector_mode"):
            n0 = self.getvector("potential", "vector_mode", dtype=int)
            amp = self.getvector("potential", "vector_amplitude")
            if len(amp) != lat.dim or len(n0) != lat.dim:
                raise ConfigError("vector_mode and vector_amplitude need d entries")
            extra = fields.single_mode(lat, n0, amp)
            A = extra if A is None else A + extra
        if V is not None and len(V.value_shape) == 2 and V.value_shape != (cl.size, cl.size):
            raise ConfigError("matrix potential has the wrong size")
        return V, A

    def _tables(self, lat):
        V = A = None
        if self.has("potential", "scalar_table"):
            V = fields.from_table(lat, self._read_table("scalar_table"), ())
        if self.has("potential", "vector_table"):
            A = fields.from_table(lat, self._read_table("vector_table"), (lat.dim,))
        return V, A

    def _read_table(self, key):
        path = self.resolve(self.get("potential", key))
        if not os.path.isfile(path):
            raise ConfigError(f"coefficient table {path!r} does not exist")
        return np.loadtxt(path, delimiter=",", comments="#", ndmin=2)

    def coulomb_params(self):
        return dict(
            center=self.getvector("potential", "center", "0.5 0.5 0.5"),
            charge=self.getfloat("potential", "charge", default=1.0),
            r1=self.getfloat("potential", "r1", default=0.25, lo=0.0),
            r2=self.getfloat("potential", "r2", default=0.45, lo=0.0),
        )

    def coulomb_series(self):
        lat = self.lattice()
        p = self.coulomb_params()
        n = self.getint("potential", "series_n_max", default=2, lo=0, hi=16)
        return fields.coulomb_series(lat, n, p["center"], p["charge"], p["r1"], p["r2"])

    def matrix_potential(self):
        V, A = self.potentials()
        if V is None and A is None:
            return None
        return fields.matrix_potential(self.clifford(), V=V, A=A)
