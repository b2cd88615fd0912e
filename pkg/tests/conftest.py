import numpy as np
import pytest

from idpe import (DiscreteAtoms, DissipativeKernel, FixedPointAtoms, IntegerLattice, Kernel, LevySpec,
                  PointConfiguration, kernel_region, validate_levy)

Z = IntegerLattice(1)


def e1_spec():
    return validate_levy(LevySpec(Z, (FixedPointAtoms(((2.0, 0.5),)),)))


def e2_spec(group=Z, kernel=None):
    kern = Kernel.create(group, kernel or {0: 1.0, 1: 0.5})
    return validate_levy(LevySpec(group, (DissipativeKernel(kern, DiscreteAtoms((1.0,), (1.0,)), 1.0),)))


def make_config(levy, points, coords, atom_counts=()):
    """Single-replica configuration with hand-placed kernel points ``(component, location, mark)``."""
    group = levy.group
    locs = np.array([p[1] for p in points], dtype=np.int64).reshape(-1, group.arity)
    coords = np.array(coords, dtype=np.int64).reshape(-1, group.arity)
    regions = {}
    atom_values, atom_components = [], []
    for ci, comp in enumerate(levy.components):
        if isinstance(comp, DissipativeKernel):
            regions[ci] = kernel_region(group, coords, comp.kernel.offsets_array)
        else:
            for c, _ in comp.atoms:
                atom_values.append(c)
                atom_components.append(ci)
    counts = np.array(atom_counts, dtype=np.int64).reshape(1, len(atom_values))
    return PointConfiguration(
        levy, 1, locs, np.array([p[2] for p in points], dtype=float),
        np.array([p[0] for p in points], dtype=np.int64), np.zeros(len(points), dtype=np.int64),
        regions, np.array(atom_values, dtype=float), np.array(atom_components, dtype=np.int64),
        counts, coords)


@pytest.fixture
def E1():
    return e1_spec()


@pytest.fixture
def E2():
    return e2_spec()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
