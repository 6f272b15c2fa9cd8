import math
import random

import pytest

from gfsheaf.complexes import (Barcode, ChainComplex, ChainMap,
                               FilteredComplex, cohomology_ranks,
                               dual_complex, is_quasi_iso, identity_map,
                               mapping_cone, zero_map)
from gfsheaf.linalg import GF2, QQ

INF = math.inf


def point_complex(field=GF2):
    return ChainComplex(["x"], {"x": 0}, {}, field)


def acyclic_pair(field=GF2):
    return ChainComplex(["x", "y"], {"x": 0, "y": 1}, {"x": {"y": 1}}, field)


def circle_complex(field=GF2):
    # one vertex, one edge, zero differential
    return ChainComplex(["v", "e"], {"v": 0, "e": 1}, {}, field)


def test_point_ranks():
    assert cohomology_ranks(point_complex()) == {0: 1}


def test_acyclic_cone_ranks():
    assert cohomology_ranks(acyclic_pair()) == {}


def test_circle_ranks_vs_smith_oracle():
    # Oracle: brute-force Smith-style reduction of the (empty) boundary gives
    # rank 0 in both degrees, so H^0 and H^1 are both 1-dimensional.
    assert cohomology_ranks(circle_complex()) == {0: 1, 1: 1}
    assert cohomology_ranks(circle_complex(QQ)) == {0: 1, 1: 1}


def test_d_squared_guard():
    with pytest.raises(ValueError):
        ChainComplex(["a", "b", "c"], {"a": 0, "b": 1, "c": 2},
                     {"a": {"b": 1}, "b": {"c": 1}}, GF2)


def test_window_full_and_empty():
    C = FilteredComplex(point_complex(), {"x": 0.0})
    assert cohomology_ranks(C.window(-INF, INF)) == {0: 1}
    assert C.window(1.0, INF).total_dim() == 0
    with pytest.raises(ValueError):
        C.window(2.0, 1.0)


def test_window_double_well():
    # 1-D double-well Morse data: two minima (0.0, 0.3), one saddle (1.0),
    # modeled by its Morse cochain complex.
    C = ChainComplex(["m1", "m2", "s"], {"m1": 0, "m2": 0, "s": 1},
                     {"m1": {"s": 1}, "m2": {"s": 1}}, GF2)
    FC = FilteredComplex(C, {"m1": 0.0, "m2": 0.3, "s": 1.0})
    # window isolating one well
    W = FC.window(-0.1, 0.2)
    assert cohomology_ranks(W) == {0: 1}
    bc = FC.barcode()
    assert bc.bars == ((0, 0.0, INF), (0, 0.3, 1.0))


def test_barcode_trivial_cases():
    single = FilteredComplex(point_complex(), {"x": 2.5})
    assert single.barcode().bars == ((0, 2.5, INF),)
    pair = FilteredComplex(acyclic_pair(), {"x": 1.0, "y": 3.0})
    assert pair.barcode().bars == ((0, 1.0, 3.0),)


def random_filtered_complex(rng, field=GF2, max_gens=40):
    """Random filtered complex: random actions, random action-respecting d.

    Built as a cone-style perturbation guaranteed to satisfy d^2 = 0 by
    pairing generators (x_i in degree k, y_i in degree k+1, d x_i = y_i)
    plus isolated generators, then conjugating by a random filtered
    automorphism. Exactness of d^2 is asserted by the constructor.
    """
    n_pairs = rng.randint(0, max_gens // 2 - 1)
    n_free = rng.randint(1, max_gens - 2 * n_pairs)
    gens, deg, action, d = [], {}, {}, {}
    for i in range(n_pairs):
        k = rng.randint(-2, 2)
        a = round(rng.uniform(0, 4), 2)
        b = a + round(rng.uniform(0.01, 2), 2)
        gens += [("p", i, 0), ("p", i, 1)]
        deg[("p", i, 0)] = k
        deg[("p", i, 1)] = k + 1
        action[("p", i, 0)] = a
        action[("p", i, 1)] = b
        d[("p", i, 0)] = {("p", i, 1): 1}
    for i in range(n_free):
        gens.append(("f", i))
        deg[("f", i)] = rng.randint(-2, 3)
        action[("f", i)] = round(rng.uniform(0, 4), 2)
    C = ChainComplex(gens, deg, d, field)
    # conjugate: add x-column of a later generator of same degree (filtered
    # base change preserves d^2=0 and the barcode is an invariant).
    for _ in range(len(gens)):
        g, h = rng.sample(gens, 2) if len(gens) >= 2 else (None, None)
        if g is None:
            break
        if deg[g] == deg[h] and action[g] <= action[h] and g != h:
            # replace h by h + g in the basis: adjust d accordingly
            newd = {}
            for s, cb in C.d.items():
                cb = dict(cb)
                if h in cb:
                    cb[g] = C.field.add(cb.get(g, 0), cb[h])
                    if cb[g] == 0:
                        del cb[g]
                if s == g:
                    for t, v in C.d.get(h, {}).items():
                        cb[t] = C.field.add(cb.get(t, 0), v)
                        if cb[t] == 0:
                            del cb[t]
                newd[s] = cb
            try:
                C2 = ChainComplex(gens, deg, newd, field)
                FilteredComplex(C2, action)
                C = C2
            except ValueError:
                pass
    return FilteredComplex(C, action)


def test_barcode_window_consistency_random():
    rng = random.Random(4711)
    for _ in range(50):
        FC = random_filtered_complex(rng)
        bc = FC.barcode()
        points = sorted({FC.action[g] for g in FC.complex.gens})
        lambdas = []
        for i, p in enumerate(points):
            lambdas.append(p + 1e-9)
            if i + 1 < len(points):
                lambdas.append((p + points[i + 1]) / 2)
        lambdas.append(points[-1] + 1.0)
        for lam in lambdas:
            direct = cohomology_ranks(FC.window(-INF, lam))
            assert direct == bc.ranks_at(lam), (direct, bc.bars, lam)


def test_barcode_window_pair_consistency_random():
    rng = random.Random(271828)
    for _ in range(25):
        FC = random_filtered_complex(rng, max_gens=20)
        bc = FC.barcode()
        pts = sorted({FC.action[g] for g in FC.complex.gens})
        cuts = [pts[0] - 1.0] + [p + 1e-9 for p in pts] + [pts[-1] + 1.0]
        for i in range(len(cuts)):
            for j in range(i + 1, len(cuts)):
                a, b = cuts[i], cuts[j]
                direct = cohomology_ranks(FC.window(a, b))
                assert direct == bc.window_ranks(a, b), (a, b, bc.bars)


def test_mapping_cone_identity_acyclic():
    C = circle_complex()
    assert cohomology_ranks(mapping_cone(identity_map(C))) == {}


def test_mapping_cone_zero_map():
    A = point_complex()
    B = point_complex()
    cone = mapping_cone(zero_map(A, B))
    assert cohomology_ranks(cone) == {-1: 1, 0: 1}


def test_cone_rank_formula_zero_maps():
    rng = random.Random(99)
    for _ in range(10):
        FA = random_filtered_complex(rng, max_gens=16)
        FB = random_filtered_complex(rng, max_gens=16)
        A, B = FA.complex, FB.complex
        cone = mapping_cone(zero_map(A, B))
        ra, rb, rc = (A.cohomology_ranks(), B.cohomology_ranks(),
                      cone.cohomology_ranks())
        expect = dict(rb)
        for k, v in ra.items():
            expect[k - 1] = expect.get(k - 1, 0) + v
        assert rc == {k: v for k, v in expect.items() if v}


def test_is_quasi_iso():
    C = circle_complex()
    assert is_quasi_iso(identity_map(C))
    assert not is_quasi_iso(zero_map(C, C))


def test_dual_complex_involution():
    rng = random.Random(5)
    for _ in range(10):
        FC = random_filtered_complex(rng, max_gens=14)
        C = FC.complex
        D = dual_complex(C)
        DD = dual_complex(D)
        r = C.cohomology_ranks()
        rd = D.cohomology_ranks()
        assert rd == {-k: v for k, v in r.items()}
        assert DD.cohomology_ranks() == r
    circ = circle_complex()
    assert dual_complex(circ).cohomology_ranks() == {0: 1, -1: 1}


def test_dual_of_point():
    D = dual_complex(point_complex())
    assert D.cohomology_ranks() == {0: 1}


def test_chain_map_verify():
    C = acyclic_pair()
    f = identity_map(C)
    assert f.verify()
    bad = ChainMap(C, C, {"x": {"x": 1}, "y": {}})
    with pytest.raises(AssertionError):
        bad.verify()


def test_filtration_violation_rejected():
    C = acyclic_pair()
    with pytest.raises(ValueError):
        FilteredComplex(C, {"x": 2.0, "y": 1.0})


def test_barcode_csv_roundtrip():
    bc = Barcode([(0, 1.0, INF), (1, 0.5, 2.0)])
    rows = bc.to_csv_rows()
    assert rows[0] == ("degree", "birth", "death")
    assert any(r[2] == "inf" for r in rows[1:])


def test_barcode_over_rationals():
    from gfsheaf.linalg import QQ
    C = ChainComplex(["m1", "m2", "s"], {"m1": 0, "m2": 0, "s": 1},
                     {"m1": {"s": 1}, "m2": {"s": -1}}, QQ)
    FC = FilteredComplex(C, {"m1": 0.0, "m2": 0.3, "s": 1.0})
    assert FC.barcode().bars == ((0, 0.0, INF), (0, 0.3, 1.0))


def test_window_consistency_over_rationals():
    rng = random.Random(99991)
    from gfsheaf.linalg import QQ
    for _ in range(10):
        FC = random_filtered_complex(rng, field=QQ, max_gens=16)
        bc = FC.barcode()
        for lam in sorted({FC.action[g] + 1e-9 for g in FC.complex.gens}):
            assert cohomology_ranks(FC.window(-INF, lam)) == bc.ranks_at(lam)
