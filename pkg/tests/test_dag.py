import itertools
import json
import math

import numpy as np
import pytest
from scipy import stats

from polyaurn import catalog
from polyaurn.dag import (
    LabelledDag,
    ancestry,
    check_events,
    depth_one_probability,
    event_probability,
    events_csv,
    exact_coupling_distribution,
    grow,
    n1_of,
    urn_from_labels,
)
from polyaurn.errors import NodeOutOfRange, TooLarge
from polyaurn.urn import as_law, exact_distribution, total_variation


def structure(n, overrides, m=2):
    """DAG on 0..n whose node v has parents (v-1, 0) unless overridden."""
    parents = np.array([overrides.get(v, (v - 1, 0)[:m]) for v in range(1, n + 1)])
    return LabelledDag(m, parents)


class TestGrow:
    def test_structure(self):
        dag = grow(catalog.tensor("lms_ex2"), [0.5, 0.5], 500, seed=1)
        assert dag.parents.shape == (500, 2) and dag.labels.shape == (500, 2)
        assert dag.parents_of(1) == (0, 0)
        for v in range(1, 501):
            assert all(0 <= p < v for p in dag.parents_of(v))
        assert set(np.unique(dag.labels)) <= {0, 1}

    def test_parents_uniform(self):
        dag = grow(catalog.tensor("all_ones"), [0.5, 0.5], 4000, seed=2, labelled=False)
        assert dag.labels is None
        # parent / v is uniform on [0, 1) up to discretization
        v = np.arange(1, 4001)[:, None]
        u = (dag.parents + 0.5) / v
        assert stats.kstest(u[1000:].ravel(), "uniform").pvalue > 1e-3

    def test_all_ones_labels_uniform(self):
        dag = grow(catalog.tensor("all_ones"), [0.2, 0.8], 20_000, seed=3)
        inherited = dag.labels[dag.parents > 0]
        counts = np.bincount(inherited, minlength=2)
        assert stats.chisquare(counts).pvalue > 1e-3

    def test_root_labels_follow_pi(self):
        dag = grow(catalog.tensor("all_ones"), [0.2, 0.8], 20_000, seed=4)
        from_root = dag.labels[dag.parents == 0]
        counts = np.bincount(from_root, minlength=2)
        expected = np.array([0.2, 0.8]) * counts.sum()
        assert stats.chisquare(counts, expected).pvalue > 1e-3

    def test_seeded(self):
        a = grow(catalog.tensor("asym_sqrt2"), [0.5, 0.5], 50, seed=5)
        b = grow(catalog.tensor("asym_sqrt2"), [0.5, 0.5], 50, seed=5)
        assert a.dumps() == b.dumps()

    def test_json_labels_one_based(self):
        dag = grow(catalog.tensor("asym_sqrt2"), [0.5, 0.5], 10, seed=6)
        obj = json.loads(dag.dumps())
        assert obj["m"] == 2 and len(obj["parents"]) == 10
        assert np.array_equal(np.array(obj["labels"]) - 1, dag.labels)

    def test_bad_pi(self):
        with pytest.raises(ValueError):
            grow(catalog.tensor("asym_sqrt2"), [0.7, 0.7], 5)


class TestUrnFromLabels:
    def test_hand_example(self):
        dag = LabelledDag(2, np.array([[0, 0], [1, 0]]), np.array([[0, 1], [1, 1]]), np.array([0.5, 0.5]))
        path = urn_from_labels(dag, catalog.tensor("asym_sqrt2"))
        got = [s.counts.tolist() for s in path]
        assert got == [[1.5, 1.5], [3.5, 2.5], [4.5, 4.5]]

    def test_balance(self):
        R = catalog.tensor("chang_zhang")
        dag = grow(R, [0.3, 0.7], 40, seed=7)
        for k, s in enumerate(urn_from_labels(dag, R)):
            assert s.total == pytest.approx(R.sigma * (k + 1))

    def test_structure_only(self):
        dag = grow(catalog.tensor("all_ones"), [0.5, 0.5], 3, labelled=False)
        with pytest.raises(ValueError):
            urn_from_labels(dag, catalog.tensor("all_ones"))


class TestCoupling:
    @pytest.mark.parametrize("name", ["asym_sqrt2", "lms_ex2", "polya_identity", "li_ng", "asym_sqrt11"])
    @pytest.mark.parametrize("pi", [(0.5, 0.5), (0.3, 0.7)])
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_equal_in_law(self, name, pi, n):
        R = catalog.tensor(name)
        urn = as_law(exact_distribution(R, R.sigma * np.array(pi), n))
        dag = exact_coupling_distribution(R, pi, n)
        assert total_variation(urn, dag) <= 1e-10

    def test_m3(self):
        R = catalog.tensor("chang_zhang")
        urn = as_law(exact_distribution(R, R.sigma * np.array([0.4, 0.6]), 2))
        dag = exact_coupling_distribution(R, [0.4, 0.6], 2)
        assert total_variation(urn, dag) <= 1e-10

    def test_wrong_initial_mass_breaks_coupling(self):
        # an urn started at pi (mass 1) is a different process when sigma != 1
        R = catalog.tensor("lms_ex2")
        pi = np.array([0.3, 0.7])
        n = 2
        urn = as_law(exact_distribution(R, pi, n))
        dag = exact_coupling_distribution(R, pi, n)
        shift = (R.sigma - 1) * pi
        shifted = {
            tuple(np.round(np.array(k) - shift, 9).tolist()): p for k, p in dag.items()
        }
        assert total_variation(urn, shifted) > 1e-3

    def test_too_large(self):
        with pytest.raises(TooLarge):
            exact_coupling_distribution(catalog.tensor("all_ones"), [0.5, 0.5], 8)


class TestEvents:
    def test_n1(self):
        assert [n1_of(n) for n in (1, 2, 3, 1000)] == [0, 0, 2, 144]
        assert n1_of(100_000) == math.floor(100_000 / math.log(100_000))

    def test_repeated_parent(self):
        dag = structure(1, {})
        rep = check_events(ancestry(dag, 1), 1)
        assert not rep.e_n_holds and not rep.f_n_holds

    def test_complete_binary_tree(self):
        # n1(100) = 21; the depth-2 genealogy of 100 is a tree of 7 distinct
        # nodes >= 21 whose parents all fall below 21
        over = {100: (90, 80), 90: (70, 60), 80: (50, 40)}
        over.update({v: (1, 2) for v in (70, 60, 50, 40)})
        sub = ancestry(structure(100, over), 100)
        assert sub.n1 == 21
        assert sub.members == frozenset({100, 90, 80, 70, 60, 50, 40})
        assert len(sub.edges) == 6
        assert sub.depth_of[40] == 2
        assert check_events(sub, 2).both
        three = check_events(sub, 3)
        assert three.e_n_holds and not three.f_n_holds

    def test_shared_ancestor(self):
        over = {100: (90, 80), 90: (70, 60), 80: (70, 50)}
        over.update({v: (1, 2) for v in (70, 60, 50)})
        sub = ancestry(structure(100, over), 100)
        rep = check_events(sub, 2)
        assert not rep.e_n_holds and not rep.f_n_holds
        assert check_events(sub, 1).f_n_holds

    def test_ell_zero(self):
        sub = ancestry(structure(1, {}), 1)
        assert check_events(sub, 0).f_n_holds
        with pytest.raises(ValueError):
            check_events(sub, -1)

    def test_out_of_range(self):
        dag = structure(5, {})
        with pytest.raises(NodeOutOfRange):
            ancestry(dag, 6)
        with pytest.raises(NodeOutOfRange):
            dag.parents_of(7)

    def test_depth_one_exact(self):
        est = event_probability(10_000, 2, 1, 4000, seed=1)
        p = depth_one_probability(10_000, 2)
        assert abs(est.f_rate - p) < 4 * math.sqrt(p * (1 - p) / 4000)

    def test_lazy_matches_enumeration(self):
        # exact P(E and F) for n = 5 over every parent configuration
        n, m, ell = 5, 2, 1
        total = 0.0
        configs = [list(itertools.product(range(v), repeat=m)) for v in range(1, n + 1)]
        weight = 1.0 / math.prod(len(c) for c in configs)
        for choice in itertools.product(*configs):
            dag = LabelledDag(m, np.array(choice))
            total += weight * check_events(ancestry(dag, n), ell).both
        est = event_probability(n, m, ell, 20_000, seed=2)
        assert abs(est.estimate - total) < 4 * math.sqrt(total * (1 - total) / 20_000)

    def test_ell_zero_estimate_is_tree_rate(self):
        est = event_probability(1000, 2, 0, 500, seed=3)
        assert est.estimate == est.e_rate and est.f_rate == 1.0

    def test_csv(self):
        rows = [event_probability(n, 2, 2, 50, seed=0) for n in (100, 1000)]
        lines = events_csv(rows).splitlines()
        assert lines[0] == "n,ell,estimate,stderr,replicates"
        assert lines[1].startswith("100,2,") and lines[2].endswith(",50")
