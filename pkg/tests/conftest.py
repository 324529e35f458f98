"""Shared fixtures: reference algebras and the shipped catalog."""

from __future__ import annotations

from fractions import Fraction as F

import pytest

from coadinv.algebra import StructureConstants
from coadinv.catalog import default_catalog_path, load_catalog


@pytest.fixture(scope="session")
def sl2():
    """sl(2,R): [X1,X2]=2X2, [X1,X3]=-2X3, [X2,X3]=X1."""
    return StructureConstants(3, {(1, 2, 2): F(2), (1, 3, 3): F(-2), (2, 3, 1): F(1)})


@pytest.fixture(scope="session")
def heisenberg1():
    """h_1: [X1,X2]=X3."""
    return StructureConstants(3, {(1, 2, 3): F(1)})


def abelian(n: int) -> StructureConstants:
    return StructureConstants(n, {})


@pytest.fixture(scope="session")
def catalog_records():
    return load_catalog(default_catalog_path())


@pytest.fixture(scope="session")
def catalog_by_name(catalog_records):
    return {rec.name: rec for rec in catalog_records}
