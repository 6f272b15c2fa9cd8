import math
import random

import numpy as np
import pytest

from gfsheaf.fixtures import (circle_function, cusp_front, cusp_genfun,
                              pure_quad_genfun, random_circle_morse)
from gfsheaf.genfun import graph_brane, graph_genfun, window_floor
from gfsheaf.grids import BaseRegion, circle_grid, sublevel_filtration
from gfsheaf.sheaves import (ConeSet, TAxis, TameSheaf, behavior_at_infinity,
                             conify, conify_conormal, front_interior_table,
                             microstalk, quantize, sections,
                             singular_support, to_cellular, unit_sheaf)

INF = math.inf


def test_taxis_cells_and_reps():
    ax = TAxis((0.0, 1.0))
    cells = ax.cells()
    assert cells == [("e", 0), ("v", 0), ("e", 1), ("v", 1), ("e", 2)]
    assert ax.rep(("e", 1)) == 0.5
    assert ax.rep(("v", 0)) == 0.5
    assert ax.rep(("v", 1)) == 1.5
    assert ax.rep_below(("v", 1)) == 0.5
    # window selection [0, 1): touches >= 0, not >= 1 (the open interval
    # (0,1) has a vertex at 1, so it belongs to the >= 1 subcomplex)
    assert ax.window_cells(0.0, 1.0) == [("e", 0), ("v", 0)]


def test_unit_sheaf_sections():
    grid = circle_function("0*x", n=12).grid
    U = unit_sheaf(grid)
    assert sections(U, None, -INF, 0.5) == {0: 1, 1: 1}
    assert sections(U, None, -INF, -0.5) == {}
    assert sections(U, None, 0.5, INF) == {}
    # over a closed arc: contractible
    reg = BaseRegion.interval_arc(grid, 2, 6)
    assert sections(U, reg, -INF, 0.5) == {0: 1}


def test_quantize_graph_sections_match_barcode():
    f = circle_function("cos(2*pi*x)", n=32)
    F = quantize(graph_genfun(f))
    bc = sublevel_filtration(f).barcode()
    for (a, b) in [(-INF, 0.0133), (-INF, INF), (0.0133, INF),
                   (-0.4871, 0.5123)]:
        want = bc.window_ranks(a if a != -INF else -2.0,
                               b if b != INF else 2.0)
        assert sections(F, None, a, b) == want


def test_to_cellular_agrees_with_gf_route():
    f = circle_function("cos(2*pi*x)", n=16)
    F = quantize(graph_genfun(f))
    C = to_cellular(F)  # constructor spot-checks 20 random boxes
    assert sections(C, None, -INF, 0.0133) == sections(F, None, -INF, 0.0133)
    assert sections(C, None, -INF, INF) == {0: 1, 1: 1}


def test_to_cellular_cusp_small():
    gf = cusp_genfun(n_base=12, n_fiber=48)
    F = quantize(gf)
    C = to_cellular(F, spot_checks=8)
    hi = gf.grid.base[0].n_cells - 1
    region = BaseRegion.interval_arc(gf.grid, hi - 4, hi)
    for (a, b) in [(0.45, 0.8), (-0.2, 0.2), (-0.8, 0.42)]:
        got = sections(C, region, a, b)
        want = sections(F, region, a, b, check_regular=False)
        assert got == want, (a, b, got, want)


def test_behavior_at_infinity():
    f = circle_function("0.3*sin(2*pi*x)", n=16)
    F = quantize(graph_genfun(f))
    minus, plus = behavior_at_infinity(F)
    assert minus == {}
    assert plus == {0: 1, 1: 1}
    gf = cusp_genfun(n_base=12, n_fiber=24)
    minus2, plus2 = behavior_at_infinity(quantize(gf))
    assert minus2 == {}
    # interval base: H^*(N) = {0: 1}, Floer-normalized by the shift
    assert sum(plus2.values()) == 1


def test_microstalk_graph_brane():
    f = circle_function("0.4*cos(2*pi*x)", n=16)
    F = quantize(graph_genfun(f))
    # at (x, f(x)): rank 1 in degree 0 (regular front point)
    cell = (4,)
    x = f.grid.base[0].cell_coord(4)
    t = 0.4 * math.cos(2 * math.pi * x)
    assert microstalk(F, cell, t, eps=0.01) == {0: 1}
    # away from the front and below everything: zero
    assert microstalk(F, cell, t + 0.2, eps=0.01) == {}
    assert microstalk(F, cell, -5.0, eps=0.5) == {}


def test_microstalk_cusp_on_strands():
    gf = cusp_genfun(n_base=24, n_fiber=64)
    F = quantize(gf)
    g = gf.grid.base[0]
    j = g.n_vertices - 1
    x = g.vertex_coords()[j]
    lo_t, hi_t = cusp_front(x)
    cell = (2 * j,)
    cps = gf.fiber_critical_data((j,))
    # pair semantics: rank 1 exactly at the sampled strand values
    assert sum(microstalk(F, cell, cps[0].value, eps=0.05).values()) == 1
    assert sum(microstalk(F, cell, cps[1].value, eps=0.05).values()) == 1
    # strictly between the strands: the two-sided pair vanishes
    assert microstalk(F, cell, 0.0, eps=0.05) == {}


def test_front_interior_table_cusp():
    gf = cusp_genfun(n_base=24, n_fiber=64)
    F = quantize(gf)
    g = gf.grid.base[0]
    for j in (g.n_vertices - 1, g.n_vertices // 2):
        x = g.vertex_coords()[j]
        lo_t, hi_t = cusp_front(x)
        cell = (2 * j,)
        band_top = hi_t + 0.3
        delta = 0.1
        if hi_t > 2 * delta:
            assert front_interior_table(F, cell, 0.0, band_top,
                                        eps=delta) == 1
        assert front_interior_table(F, cell, hi_t + 2 * delta + 0.05,
                                    band_top + 0.4, eps=delta) == 0
        assert front_interior_table(F, cell, lo_t - 2 * delta - 0.05,
                                    band_top, eps=delta) == 0


def test_conify_graph():
    f = circle_function("0.2*sin(2*pi*x)", n=16)
    cone = conify(graph_brane(f))
    taus = {tau for (_x, _t, _p, tau) in cone.points}
    assert taus == {0, 1}
    for (x, t, p, tau) in cone.points:
        assert t == pytest.approx(0.2 * math.sin(2 * math.pi * x[0]),
                                  abs=1e-9)


def test_singular_support_graph_matches_conify():
    f = circle_function("0.3*cos(2*pi*x)", n=16)
    F = quantize(graph_genfun(f))
    ss = singular_support(F, p_samples=7)
    cone = conify(graph_brane(f))
    g = f.grid.base[0]
    # codirection axis graded in curvature x spacing units
    curv = 0.3 * (2 * math.pi) ** 2
    scales = (g.spacing, 0.1, curv * g.spacing, 1.0)
    assert ss.hausdorff(cone, scales) <= 2.0


def test_singular_support_unit():
    grid = circle_function("0*x", n=12).grid
    U = unit_sheaf(grid)
    ss = singular_support(U, p_samples=5)
    assert ss.points
    for (x, t, p, tau) in ss.points:
        assert t == 0.0
        if tau == 1:
            assert p == (0.0,)


def test_singular_support_cusp_shape():
    from gfsheaf.genfun import brane_of
    gf = cusp_genfun(n_base=16, n_fiber=48)
    F = quantize(gf)
    ss = singular_support(F, p_samples=9)
    cone = conify(brane_of(gf))
    g = gf.grid.base[0]
    # front curvature of the blended profile reaches ~5 near the far strand
    scales = (g.spacing, 2 * gf.tau_val(), 5.0 * g.spacing, 1.0)
    assert ss.hausdorff(cone, scales) <= 2.0


def test_conify_conormal_shape():
    grid = circle_function("0*x", n=12).grid
    reg = BaseRegion.interval_arc(grid, 3, 9)
    cone = conify_conormal(reg)
    xs = {x[0] for (x, t, p, tau) in cone.points if p == (0.0,)}
    assert len(xs) >= 3
    outward = [(x, p) for (x, _t, p, tau) in cone.points if p != (0.0,)]
    assert outward  # rim codirections present


def test_unit_map_cone_is_the_band_fiber():
    # the fiber of the counit is the half-open band below the front: its
    # section ranks (computed from a directly built stratified indicator)
    # match the cone of the section-level map, shifted by one
    from gfsheaf.complexes import cohomology_ranks, mapping_cone
    from gfsheaf.sheaves import (CONST_STALK, ZERO_STALK, CellSheaf, TAxis,
                                 TameSheaf, unit_map_section_level)
    f = circle_function("0.4*cos(2*pi*x)", n=16)
    F = quantize(graph_genfun(f))
    cell = to_cellular(F, spot_checks=0).cell
    t0 = cell.taxis.breaks[0] - 1.0
    cm = f.cell_max()

    def band_stalk(bc, thr):
        if t0 < thr and not thr > float(cm[tuple(bc)]):
            return CONST_STALK
        return ZERO_STALK

    K = TameSheaf("cell", cell=CellSheaf(
        f.grid.base_only(), TAxis((t0,) + cell.taxis.breaks), band_stalk,
        label="band"), label="band")
    lo, hi = f.range()
    for (a, b) in [(lo - 1.04, hi + 1.02), (lo - 1.04, 0.0131),
                   (-0.1043, 0.2091), (0.2091, hi + 1.02)]:
        T = unit_map_section_level(F, None, a, b)
        cone = cohomology_ranks(mapping_cone(T))
        band = sections(K, None, a, b)
        assert cone == {k - 1: v for k, v in band.items()}, (a, b, cone, band)


def test_sections_field_guard():
    from gfsheaf.linalg import QQ
    f = circle_function("0.4*cos(2*pi*x)", n=8)
    C = to_cellular(quantize(graph_genfun(f)), spot_checks=0)
    with pytest.raises(ValueError, match="F2-only"):
        sections(C, None, -2.0, 2.0, field=QQ)


def test_to_cellular_size_guard():
    gf = cusp_genfun(n_base=32, n_fiber=64)
    with pytest.raises(ValueError, match="too large"):
        to_cellular(quantize(gf), max_cells=10)


def test_microstalk_locality_on_cropped_grid():
    # the microstalk only sees generating data near its base cell: rebuild
    # the family on a cropped base interval and compare
    gf = cusp_genfun(n_base=32, n_fiber=48)
    g = gf.grid.base[0]
    j = 20
    x = g.vertex_coords()[j]
    crop = cusp_genfun(n_base=8, n_fiber=48,
                       x_lo=x - 4 * g.spacing, x_hi=x + 4 * g.spacing)
    F = quantize(gf)
    Fc = quantize(crop)
    cell_full = (2 * j,)
    cell_crop = (2 * 4,)  # the center vertex of the cropped grid
    cps = gf.fiber_critical_data((j,))
    for t in [cps[0].value, cps[1].value, 0.0,
              (cps[1].value + cps[2].value) / 2]:
        a = microstalk(F, cell_full, t, eps=0.04)
        b = microstalk(Fc, cell_crop, t, eps=0.04)
        assert a == b, (t, a, b)
