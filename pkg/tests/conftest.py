"""Shared fixtures: the two acceptance-scale constructions are built once
per session and reused by every test that needs them."""

from __future__ import annotations

import pytest

from cesarolab import build_block_mesh, build_harmonic_mesh, build_orbit


@pytest.fixture(scope="session")
def harmonic_orbit_10k():
    mesh = build_harmonic_mesh(0.125, 10000)
    return build_orbit(mesh, validate=False)


@pytest.fixture(scope="session")
def block_orbit_k4():
    mesh, meta = build_block_mesh(8, 4)
    return build_orbit(mesh, meta, validate=False)


@pytest.fixture(scope="session")
def small_harmonic_orbit():
    mesh = build_harmonic_mesh(0.1, 400)
    return build_orbit(mesh, validate=False)
