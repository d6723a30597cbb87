#!/usr/bin/env python

import os
import random
import unittest

from rodtopology import intlin, plumbing, roddiagram
from rodtopology.plumbing import Bundle, PlumbingError
from generators import image, random_chain, random_unimodular, time_budget

DATA = os.path.join(os.path.dirname(__file__), "data")

E1, E2, E3 = (1, 0, 0), (0, 1, 0), (0, 0, 1)


def load(name):
    with open(os.path.join(DATA, name), encoding="utf-8") as f:
        return roddiagram.parse(f.read())


class TestBundles(unittest.TestCase):
    def test_triple_to_bundle(self):
        bundle = plumbing.triple_to_bundle(E1, E2, (2, 3, 5))
        self.assertEqual(bundle, Bundle(q=2, r=3, p=5, n=3))
        self.assertEqual(bundle.label, "L(5,2) e3")
        self.assertEqual(bundle.base, roddiagram.LENS)
        self.assertEqual(plumbing.triple_to_bundle(E2, (2, 3, 5), (-3, 9, -11)).label, "L(7,3) e2")

    def test_sphere_and_product_bases(self):
        self.assertEqual(plumbing.triple_to_bundle(E1, E2, E3), Bundle(q=0, r=0, p=1, n=3))
        self.assertEqual(plumbing.triple_to_bundle(E1, E2, E3).label, "S³ e0")
        dependent = plumbing.triple_to_bundle(E1, E2, (1, 4, 0))
        self.assertEqual(dependent, Bundle(q=1, r=4, p=0, n=3))
        self.assertEqual(dependent.base_label, "S¹×S²")

    def test_dependent_triple_absorbs_sign(self):
        self.assertEqual(plumbing.triple_to_bundle(E1, E2, (-1, 2, 0)), Bundle(q=1, r=-2, p=0, n=3))

    def test_bundle_errors(self):
        with self.assertRaisesRegex(PlumbingError, "n >= 3"):
            plumbing.triple_to_bundle((1, 0), (0, 1), (1, 1))
        with self.assertRaisesRegex(PlumbingError, "inadmissible"):
            plumbing.triple_to_bundle(E2, (2, 1, 0), E3)

    def test_bundle_to_dict(self):
        self.assertEqual(
            Bundle(q=2, r=3, p=5, n=4).to_dict(),
            {"base": "Lens", "p": 5, "q": 2, "r": 3, "euler": 3, "torus_factor": 1, "label": "L(5,2) e3"},
        )


class TestPlumbingVectors(unittest.TestCase):
    def test_plumbing_vector(self):
        self.assertEqual(plumbing.plumbing_vector(E2, (2, 3, 5), (-3, 9, -11), 3, 2, 7), (-1, 0, -3))

    def test_plumbing_vector_dependent(self):
        self.assertEqual(plumbing.plumbing_vector(E1, E2, (1, 4, 0), 1, 4, 0), (0, 0, 0))
        with self.assertRaises(PlumbingError):
            plumbing.plumbing_vector(E1, E2, (1, 4, 1), 1, 4, 0)

    def test_plumbing_vector_not_divisible(self):
        with self.assertRaisesRegex(PlumbingError, "not divisible"):
            plumbing.plumbing_vector(E1, E2, (2, 3, 4), 2, 3, 5)

    def test_plumbing_to_rods(self):
        bundles = [Bundle(2, 3, 5, 3), Bundle(3, 2, 7, 3)]
        self.assertEqual(
            plumbing.plumbing_to_rods(bundles, [(1, 0, 2)]),
            [E1, E2, (2, 3, 5), (11, 9, 24)],
        )
        self.assertEqual(
            plumbing.plumbing_to_rods(bundles, [(-1, 0, -3)]),
            [E1, E2, (2, 3, 5), (-3, 9, -11)],
        )

    def test_relations_report_first_failure(self):
        bundles = [Bundle(2, 3, 5, 3), Bundle(3, 2, 7, 3)]
        failure = plumbing.first_failure(plumbing.verify_plumbing_relations(bundles, [(2, 0, 4)]))
        self.assertEqual((failure.relation, failure.index), ("primitivity", 2))

        checks = plumbing.verify_plumbing_relations(bundles, [(0, 0, 1)])
        failure = plumbing.first_failure(checks)
        self.assertEqual((failure.relation, failure.index), ("admissibility", 2))
        self.assertEqual(failure.detail, "Det_2 = 2")
        self.assertFalse(plumbing.relations_ok(checks))
        with self.assertRaisesRegex(PlumbingError, "admissibility relation fails at index 2"):
            plumbing.plumbing_to_rods(bundles, [(0, 0, 1)])

    def test_relations_report_every_outcome(self):
        bundles = [Bundle(2, 3, 5, 3), Bundle(3, 2, 7, 3)]
        checks = plumbing.verify_plumbing_relations(bundles, [(1, 0, 2)])
        self.assertTrue(plumbing.relations_ok(checks))
        kinds = {c.relation for c in checks}
        self.assertEqual(kinds, {"primitivity", "admissibility", "triple", "zeros", "pivot", "hermite"})

    def test_pivot_range(self):
        checks = plumbing.verify_plumbing_relations([Bundle(7, 3, 5, 3)], [])
        failure = plumbing.first_failure(checks)
        self.assertEqual(failure.relation, "pivot")

    def test_argument_errors(self):
        with self.assertRaisesRegex(PlumbingError, "plumbing vectors"):
            plumbing.verify_plumbing_relations([Bundle(2, 3, 5, 3), Bundle(3, 2, 7, 3)], [])
        with self.assertRaisesRegex(PlumbingError, "at least one bundle"):
            plumbing.verify_plumbing_relations([], [])
        with self.assertRaisesRegex(PlumbingError, "torus rank"):
            plumbing.verify_plumbing_relations([Bundle(2, 3, 5, 3), Bundle(3, 2, 7, 4)], [(1, 0, 2)])


class TestDecomposeComponent(unittest.TestCase):
    def test_known_chain(self):
        result = plumbing.decompose_component([E1, E2, (2, 3, 5), (-3, 9, -11)])
        self.assertEqual(result.bundles, (Bundle(2, 3, 5, 3), Bundle(3, 2, 7, 3)))
        self.assertEqual(result.plumbing_vectors, ((-1, 0, -3),))
        self.assertEqual(result.to_dict()["plumbing_vectors"], {"2": [-1, 0, -3]})
        self.assertEqual(result.to_dict()["signs"], [1, 1, 1, 1])

    def test_corner_sign(self):
        self.assertEqual(plumbing.corner_sign(E1, E2), 1)
        self.assertEqual(plumbing.corner_sign(E2, E1), -1)
        self.assertEqual(plumbing.corner_sign(E1, E3), 1)
        self.assertEqual(plumbing.corner_sign((0, 1, 0), (0, 0, -1)), -1)
        self.assertEqual(plumbing.corner_sign((1, 2, 0), (2, 4, 0)), 0)

    def test_negative_first_corner_is_flipped(self):
        result = plumbing.decompose_component([E2, E1, (1, 2, 3)])
        self.assertEqual(result.signs, (1, -1, 1))
        self.assertEqual(result.rods_hnf, (E1, E2, (2, 2, 3)))
        self.assertEqual(result.bundles, (Bundle(2, 2, 3, 3),))
        self.assertEqual(plumbing.triple_to_bundle(E2, E1, (1, 2, 3)), Bundle(2, 1, 3, 3))
        self.assertEqual(plumbing.decompose_component([E2, (-1, 0, 0), (1, 2, 3)]).signs, (1, 1, 1))

    def test_dependent_triple_sign_is_reported(self):
        result = plumbing.decompose_component([E1, E2, (-1, 2, 0), (0, 0, 1)])
        self.assertEqual(result.signs, (1, 1, -1, 1))
        self.assertEqual(result.bundles[0], Bundle(1, -2, 0, 3))

    def test_component_errors(self):
        with self.assertRaisesRegex(PlumbingError, "at least 3 rods"):
            plumbing.decompose_component([E1, E2])
        with self.assertRaisesRegex(PlumbingError, "structures 2 and 3"):
            plumbing.decompose_component([E1, E2, (2, 1, 0), E3])

    def test_roundtrip_random_chains(self):
        rng = random.Random(1234)
        with time_budget(120):
            for case in range(1000):
                n = 3 if case % 2 else 4
                chain = random_chain(rng, n, rng.randint(3, 6))
                result = plumbing.decompose_component(chain)
                checks = plumbing.verify_plumbing_relations(result.bundles, list(result.plumbing_vectors))
                self.assertTrue(plumbing.relations_ok(checks), plumbing.first_failure(checks))
                rods = plumbing.plumbing_to_rods(result.bundles, list(result.plumbing_vectors))
                self.assertEqual(rods, list(result.rods_hnf))

    def test_decomposing_generated_rods_recovers_the_data(self):
        rng = random.Random(57)
        with time_budget(120):
            for case in range(500):
                n = 3 if case % 2 else 4
                source = plumbing.decompose_component(random_chain(rng, n, rng.randint(3, 6)))
                rods = plumbing.plumbing_to_rods(source.bundles, list(source.plumbing_vectors))
                again = plumbing.decompose_component(rods)
                self.assertEqual(again.bundles, source.bundles)
                self.assertEqual(again.plumbing_vectors, source.plumbing_vectors)
                self.assertEqual(again.signs, (1,) * len(rods))

    def test_unimodular_image_keeps_the_decomposition(self):
        # the first-corner sign is read off a minor, so only maps keeping it are comparable
        rng = random.Random(61)
        compared = 0
        with time_budget(120):
            for case in range(600):
                n = 3 if case % 2 else 4
                chain = random_chain(rng, n, rng.randint(3, 6))
                Q = random_unimodular(rng, n)
                moved = [image(Q, w) for w in chain]
                result = plumbing.decompose_component(moved)
                checks = plumbing.verify_plumbing_relations(result.bundles, list(result.plumbing_vectors))
                self.assertTrue(plumbing.relations_ok(checks), plumbing.first_failure(checks))
                if plumbing.corner_sign(*moved[:2]) != plumbing.corner_sign(*chain[:2]):
                    continue
                expected = plumbing.decompose_component(chain)
                self.assertEqual(result.bundles, expected.bundles)
                self.assertEqual(result.plumbing_vectors, expected.plumbing_vectors)
                self.assertEqual(result.rods_hnf, expected.rods_hnf)
                compared += 1
        self.assertGreater(compared, 100)

    def test_input_sign_of_second_structure_is_irrelevant(self):
        rng = random.Random(67)
        with time_budget(60):
            for case in range(300):
                chain = random_chain(rng, 3 if case % 2 else 4, rng.randint(3, 6))
                flipped = [chain[0], tuple(-x for x in chain[1])] + chain[2:]
                a = plumbing.decompose_component(chain)
                b = plumbing.decompose_component(flipped)
                self.assertEqual((a.bundles, a.plumbing_vectors, a.rods_hnf), (b.bundles, b.plumbing_vectors, b.rods_hnf))
                self.assertEqual(a.signs[1], -b.signs[1])

    def test_plumbing_vectors_complete_primitive_sets(self):
        rng = random.Random(99)
        with time_budget(120):
            for case in range(1000):
                n = 3 if case % 2 else 4
                chain = random_chain(rng, n, rng.randint(4, 6))
                result = plumbing.decompose_component(chain)
                rods = result.rods_hnf
                for i, (bundle, vector) in enumerate(zip(result.bundles[1:], result.plumbing_vectors)):
                    if bundle.p == 0:
                        self.assertFalse(any(vector))
                    else:
                        self.assertEqual(intlin.span_divisor([rods[i + 1], rods[i + 2], vector]), 1)


class TestDecomposition(unittest.TestCase):
    def test_pieces(self):
        decomposition = plumbing.doc_decomposition(load("three_horizons.json"))
        self.assertEqual((decomposition.J, decomposition.N1, decomposition.N2), (1, 1, 1))
        kinds = [(p.kind, p.source_rod_indices) for p in decomposition.pieces]
        self.assertEqual(
            kinds,
            [
                (plumbing.TORIC_PLUMBING, (0, 1, 2, 3)),
                (plumbing.CORNER_BALL, (5, 6)),
                (plumbing.CYLINDER, (8,)),
                (plumbing.END, (10,)),
            ],
        )
        self.assertEqual(decomposition.pieces[0].label, "L(5,2) e1 ∪ L(2,1) e0")
        self.assertEqual(decomposition.pieces[0].plumbing.plumbing_vectors, ((1, 0, 2),))
        self.assertEqual(decomposition.pieces[1].label, "B⁴×S¹")
        self.assertEqual(decomposition.pieces[2].label, "[0,1]×D²×T²")
        self.assertEqual(decomposition.pieces[3].label, "R₊×S³×S¹")

    def test_to_dict_counts(self):
        report = plumbing.doc_decomposition(load("equivalent_left.json")).to_dict()
        self.assertEqual(report["counts"], {"J": 1, "N1": 0, "N2": 0})
        self.assertEqual(report["pieces"][-1]["kind"], plumbing.END)
        self.assertEqual(report["pieces"][-1]["source_rod_indices"], [0])

    def test_axis_components(self):
        self.assertEqual(plumbing.axis_components(load("three_horizons.json")), [[0, 1, 2, 3], [5, 6], [8], [10]])

    def test_decomposition_errors(self):
        with self.assertRaisesRegex(PlumbingError, "n >= 3"):
            plumbing.doc_decomposition(load("counterexample.json"))
        with self.assertRaisesRegex(PlumbingError, "half-plane"):
            plumbing.doc_decomposition(load("s5.json"))
        inadmissible = roddiagram.from_dict(
            {
                "n": 3,
                "shape": "half_plane",
                "rods": [
                    {"kind": "axis", "v": [1, 0, 0]},
                    {"kind": "axis", "v": [1, 2, 0]},
                    {"kind": "horizon"},
                    {"kind": "axis", "v": [0, 0, 1]},
                ],
            }
        )
        with self.assertRaisesRegex(PlumbingError, "inadmissible corner"):
            plumbing.doc_decomposition(inadmissible)


if __name__ == "__main__":
    unittest.main()
