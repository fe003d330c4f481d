import random

import pytest

from starchart import (
    Atom,
    LabelledPrechart,
    PartitionRelation,
    Prechart,
    Seq,
    Star,
    Sum,
    Zero,
    bisimilar,
    bisimilarity,
    canonical_solution,
    chart_of,
    check_bisimulation,
    check_condition,
    collapse,
    connect_through,
    find_pair,
    is_homomorphism,
    kernel_partition,
    relabel,
    rerouting,
    restrict_relation,
    syntactic_witness,
    verify_witness,
)
from starchart.rerouting import Splitting
from gen import fig3_left, fig3_right, isomorphic, random_expr

A = Atom("a")
AA0 = Star(Seq(A, A), Zero())
X1 = Seq(A, AA0)


def two_sinks_chart() -> Prechart:
    # r branches to two bisimilar self-looping sinks
    return Prechart.make(
        ("a",),
        ("r", "w1", "w2"),
        {},
        {"r": {"a": ["w1", "w2"]}, "w1": {"a": ["w1"]}, "w2": {"a": ["w2"]}},
        root="r",
    )


def two_sinks_witness() -> LabelledPrechart:
    X = two_sinks_chart()
    tags = {
        ("r", "a", "w1"): "b",
        ("r", "a", "w2"): "b",
        ("w1", "a", "w1"): "e",
        ("w2", "a", "w2"): "e",
    }
    return LabelledPrechart(X, tags)


def cycle_witness() -> LabelledPrechart:
    X = chart_of(AA0)
    return LabelledPrechart(X, {(AA0, "a", X1): "e", (X1, "a", AA0): "b"})


class TestConnectThrough:
    def test_state_without_incoming_is_just_dropped(self):
        X = two_sinks_chart()
        Y = connect_through(X, "r", "w1")
        assert Y.states == ("w1", "w2")
        assert Y.succ("w1", "a") == ("w1",)

    def test_fig3_rerouting(self):
        X, _ = fig3_left()
        assert bisimilarity(X).related("x1", "x2")
        Y = connect_through(X, "x1", "x2")
        Z = fig3_right()
        assert Y.states == Z.states
        assert Y.transitions == Z.transitions
        assert Y.outputs == Z.outputs

    def test_merging_bisimilar_sinks(self):
        X = two_sinks_chart()
        assert bisimilarity(X).related("w1", "w2")
        Y = connect_through(X, "w1", "w2")
        assert Y.states == ("r", "w2")
        assert Y.succ("r", "a") == ("w2",)
        assert Y.succ("w2", "a") == ("w2",)

    def test_rejects_equal_states_and_unknowns(self):
        X = two_sinks_chart()
        with pytest.raises(ValueError):
            connect_through(X, "w1", "w1")
        with pytest.raises(ValueError):
            connect_through(X, "nope", "w1")

    def test_root_follows_the_merge(self):
        X = chart_of(AA0)
        Y = connect_through(X, AA0, X1)
        assert Y.root == X1


class TestRerouting:
    def test_identity_splitting_changes_nothing(self):
        X = two_sinks_chart()
        s = Splitting.merging(X, {})
        Y = rerouting(X, s)
        assert Y.states == X.states and Y.transitions == X.transitions

    def test_matches_connect_through_on_random_charts(self):
        rng = random.Random(83)
        done = 0
        while done < 100:
            e = random_expr(rng, depth=4)
            X = chart_of(e)
            if len(X.states) < 2:
                continue
            done += 1
            x1, x2 = rng.sample(X.states, 2)
            s = Splitting.merging(X, {x1: x2})
            Y1 = connect_through(X, x1, x2)
            Y2 = rerouting(X, s)
            assert Y1.states == Y2.states
            assert Y1.transitions == Y2.transitions
            assert Y1.outputs == Y2.outputs
            assert Y1.root == Y2.root

    def test_merging_bisimilar_sinks_preserves_bisimilarity(self):
        X = two_sinks_chart()
        R = bisimilarity(X)
        s = Splitting.merging(X, {"w2": "w1"})
        U = rerouting(X, s)
        assert len(U.states) == len(X.states) - 1
        assert check_bisimulation(X, U, restrict_relation(R, U.states)) == (True, None)

    def test_invalid_splitting_rejected(self):
        X = two_sinks_chart()
        with pytest.raises(ValueError):
            Splitting(("r", "w1"), {"r": "r", "w1": "w1", "w2": "w2"})


class TestCheckCondition:
    def test_c1_for_the_sink_pair(self):
        assert check_condition(two_sinks_witness(), "w1", "w2") == "C1"

    def test_c2_for_the_cycle_pair(self):
        assert check_condition(cycle_witness(), AA0, X1) == "C2"

    def test_none_for_the_reversed_cycle_pair(self):
        assert check_condition(cycle_witness(), X1, AA0) is None

    def test_distinct_pair_required(self):
        with pytest.raises(ValueError):
            check_condition(cycle_witness(), AA0, AA0)


class TestFindPair:
    def test_identity_relation_gives_none(self):
        L = cycle_witness()
        assert find_pair(L, PartitionRelation.identity(L.base.states)) is None

    def test_total_relation_on_the_cycle(self):
        L = cycle_witness()
        R = PartitionRelation.total(L.base.states)
        assert find_pair(L, R) == (AA0, X1, "C2")

    def test_sink_merge_pair_is_c1(self):
        L = two_sinks_witness()
        R = PartitionRelation.from_pairs(L.base.states, [("w1", "w2")])
        w1, w2, condition = find_pair(L, R)
        assert {w1, w2} == {"w1", "w2"} and condition == "C1"

    def test_non_bisimulation_rejected(self):
        L = two_sinks_witness()
        bad = PartitionRelation.from_pairs(L.base.states, [("r", "w1")])
        with pytest.raises(ValueError):
            find_pair(L, bad)


class TestRelabel:
    def test_c2_merge_of_the_cycle(self):
        L = cycle_witness()
        result = relabel(L, AA0, X1, "C2")
        assert result.base.states == (X1,)
        assert result.tags == {(X1, "a", X1): "e"}
        assert verify_witness(result) == (True, None)

    def test_c1_merge_of_the_sinks(self):
        L = two_sinks_witness()
        result = relabel(L, "w1", "w2", "C1")
        assert result.base.states == ("r", "w2")
        assert result.tags == {("r", "a", "w2"): "b", ("w2", "a", "w2"): "e"}
        assert verify_witness(result) == (True, None)

    def test_demotion_is_a_no_op_when_return_paths_survive(self):
        # merging one duplicated branch of a lasso keeps every tag
        X = Prechart.make(
            ("a",),
            ("r", "u", "v"),
            {},
            {"r": {"a": ["u", "v"]}, "u": {"a": ["u"]}, "v": {"a": ["v"]}},
            root="r",
        )
        L = LabelledPrechart(
            X,
            {
                ("r", "a", "u"): "b",
                ("r", "a", "v"): "b",
                ("u", "a", "u"): "e",
                ("v", "a", "v"): "e",
            },
        )
        result = relabel(L, "u", "v", check_condition(L, "u", "v"))
        assert result.tags == {("r", "a", "v"): "b", ("v", "a", "v"): "e"}

    def test_wrong_condition_rejected(self):
        with pytest.raises(ValueError):
            relabel(cycle_witness(), AA0, X1, "C1")


class TestCollapse:
    def test_already_minimal_chart_is_unchanged(self):
        e = Star(A, Sum(Atom("b"), Zero()))
        L = syntactic_witness(chart_of(e, ("a", "b")))
        assert bisimilarity(L.base).is_identity
        result, projection = collapse(L)
        assert result.tags == L.tags
        assert projection == {x: x for x in L.base.states}

    def test_cycle_collapses_to_the_entry_self_loop(self):
        L = syntactic_witness(chart_of(AA0))
        result, projection = collapse(L)
        assert len(result.base.states) == 1
        (state,) = result.base.states
        assert result.tags == {(state, "a", state): "e"}
        assert projection[AA0] == projection[X1] == state
        s = canonical_solution(result)
        assert bisimilar(s.assign[state], AA0)

    def test_duplicated_sum_collapses_like_the_original(self):
        rng = random.Random(89)
        for _ in range(25):
            e = random_expr(rng, depth=3)
            L1, _ = collapse(syntactic_witness(chart_of(Sum(e, e), ("a", "b", "c"))))
            L2, _ = collapse(syntactic_witness(chart_of(e, ("a", "b", "c"))))
            first = Prechart.make(
                L1.base.alphabet, L1.base.states, L1.base.outputs, L1.base.transitions
            )
            second = Prechart.make(
                L2.base.alphabet, L2.base.states, L2.base.outputs, L2.base.transitions
            )
            assert isomorphic(first, second)

    def test_projection_is_a_homomorphism_with_bisimilarity_kernel(self):
        rng = random.Random(97)
        for _ in range(25):
            e = random_expr(rng, depth=3)
            L = syntactic_witness(chart_of(e))
            R = bisimilarity(L.base)
            result, projection = collapse(L)
            assert bisimilarity(result.base).is_identity
            assert verify_witness(result) == (True, None)
            assert is_homomorphism(projection, L.base, result.base) == (True, None)
            assert kernel_partition(projection, L.base.states).same_partition(R)


class TestRestrictRelation:
    def test_identity_restriction_is_the_identity_graph(self):
        X = two_sinks_chart()
        R = PartitionRelation.identity(X.states)
        pairs = restrict_relation(R, X.states)
        assert sorted(pairs) == sorted((x, x) for x in X.states)
        assert check_bisimulation(X, X, pairs) == (True, None)

    def test_total_relation_on_the_merged_cycle(self):
        X = chart_of(AA0)
        R = PartitionRelation.total(X.states)
        U = connect_through(X, AA0, X1)
        pairs = restrict_relation(R, U.states)
        assert set(pairs) == {(AA0, X1), (X1, X1)}
        assert check_bisimulation(X, U, pairs) == (True, None)

    def test_random_reroutings_with_kernel_inside_bisimilarity(self):
        rng = random.Random(101)
        done = 0
        while done < 100:
            e = random_expr(rng, depth=3)
            X, _, _ = __import__("starchart").coproduct(
                chart_of(e, ("a", "b", "c")), chart_of(e, ("a", "b", "c"))
            )
            R = bisimilarity(X)
            blocks = [b for b in R.blocks if len(b) > 1]
            if not blocks:
                continue
            done += 1
            merges = {}
            for block in blocks:
                if rng.random() < 0.8:
                    survivor = block[0]
                    for other in block[1:]:
                        if rng.random() < 0.7:
                            merges[other] = survivor
            s = Splitting.merging(X, merges)
            U = rerouting(X, s)
            assert check_bisimulation(X, U, restrict_relation(R, U.states)) == (True, None)
