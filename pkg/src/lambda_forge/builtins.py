"""
Catalogue of built-in algebras, addressable by name from the CLI and the server.
"""

from __future__ import annotations

from collections.abc import Callable
from functools import cache

from .constructions import cur, fermion_charged, fermion_neutral, virasoro
from .fileformat import Spec
from .liealg import GoodGrading, LieAlgData, sl2, sl2_grading, sl3, sl3_minimal, sl3_principal
from .pva import PvaSpec, gfz

BUILTINS: dict[str, Callable[[], Spec]] = {
    "virasoro": virasoro,
    "sl2": sl2,
    "sl3": sl3,
    "cur-sl2": lambda: cur(sl2()),
    "cur-sl3": lambda: cur(sl3()),
    "charged-fermion": lambda: fermion_charged([("phi", "phistar")]),
    "neutral-fermion": lambda: fermion_neutral(["psi", "psibar"], {("psi", "psibar"): 1}),
    "gfz": gfz,
    "kdv": lambda: PvaSpec(gfz().gens, gfz().table, name="kdv"),
}

GRADINGS: dict[tuple[str, str], Callable[[LieAlgData], GoodGrading]] = {
    ("sl2", "principal"): sl2_grading,
    ("sl3", "principal"): sl3_principal,
    ("sl3", "minimal"): sl3_minimal,
}


@cache
def builtin(name: str) -> Spec:
    """The built-in algebra called ``name``; raises KeyError listing the known names."""
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown builtin {name!r}; known: {', '.join(BUILTINS)}") from None
    return factory()


def builtin_liealg(name: str) -> LieAlgData:
    spec = builtin(name)
    if not isinstance(spec, LieAlgData):
        raise KeyError(f"builtin {name!r} is not a Lie superalgebra")
    return spec


def grading(data: LieAlgData, kind: str = "principal") -> GoodGrading:
    """A named good grading of a built-in algebra."""
    try:
        factory = GRADINGS[(data.name, kind)]
    except KeyError:
        known = ", ".join(f"{a}/{g}" for a, g in GRADINGS)
        raise KeyError(f"no {kind!r} grading for {data.name!r}; known: {known}") from None
    return factory(data)


__all__ = ["BUILTINS", "GRADINGS", "builtin", "builtin_liealg", "grading"]
