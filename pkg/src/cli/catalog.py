"""
Built-in instance catalog

Entries use the inline instance schema of the run configuration, so catalog
and inline instances go through the same builder. Names are a stable surface.
"""

from __future__ import annotations

from typing import Any

_UNIT = [-1.0, 1.0]


def _line(coord: str, entry: str = "1", box: list[float] = _UNIT) -> dict[str, Any]:
    return {"dim": 1, "coords": [coord], "metric": [[entry]], "box": [list(box)]}


CATALOG: dict[str, dict[str, Any]] = {
    "flat3": {
        "kind": "generic",
        "factors": [_line("x"), _line("y"), _line("z")],
        "f": "1",
        "h": "1",
    },
    "hyp3": {
        "kind": "generic",
        "factors": [_line("x"), _line("y"), _line("z")],
        "f": "exp(x)",
        "h": "exp(x)",
    },
    "mink-static": {
        "kind": "standard-static",
        "factors": [_line("x"), _line("y"), _line("t", "-1")],
        "f": "1",
        "h": "1",
    },
    "desitter-grw": {
        "kind": "grw",
        "factors": [_line("t", "-1"), _line("y"), _line("z")],
        "f": "exp(t)",
        "h": "exp(t)",
    },
    "rand-riemann": {
        "kind": "generic",
        "factors": [_line("x", box=[0.2, 1.0]), _line("y", box=[0.2, 1.0]),
                    _line("z", box=[0.2, 1.0])],
        "f": "1 + x^2",
        "h": "1 + x^2 + y^2",
    },
}

DESCRIPTIONS: dict[str, str] = {
    "flat3": "Euclidean R^3 as a trivially warped product",
    "hyp3": "hyperbolic 3-space, dx^2 + e^2x dy^2 + e^2x dz^2",
    "mink-static": "Minkowski space as a standard static space-time",
    "desitter-grw": "de Sitter flat slicing, -dt^2 + e^2t dy^2 + e^2t dz^2",
    "rand-riemann": "Riemannian product with non-trivial f(x) and h(x, y)",
}


def catalog_entry(name: str) -> dict[str, Any]:
    if name not in CATALOG:
        raise KeyError(name)
    return {**CATALOG[name], "name": name}


def catalog_rows() -> list[dict[str, Any]]:
    """One summary row per built-in instance for `--catalog`"""
    rows = []
    for name, entry in CATALOG.items():
        coords = [c for factor in entry["factors"] for c in factor["coords"]]
        box = {c: tuple(b) for factor in entry["factors"]
               for c, b in zip(factor["coords"], factor["box"])}
        rows.append({
            "name": name,
            "kind": entry["kind"],
            "dims": "+".join(str(factor["dim"]) for factor in entry["factors"]),
            "coords": ",".join(coords),
            "f": entry["f"],
            "h": entry["h"],
            "box": " ".join(f"{c}:[{lo:g},{hi:g}]" for c, (lo, hi) in box.items()),
            "description": DESCRIPTIONS[name],
        })
    return rows
