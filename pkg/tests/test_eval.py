from __future__ import annotations

import json

import pytest

from triplerank.evaluate import MetricError, hits_at, mrr, run_evaluation
from triplerank.graph import (
    Graph,
    SplitBundle,
    Triple,
    load_graph,
    load_query_blocks,
)
from triplerank.neighbors import CachedEmbedder, HashEmbedder
from triplerank.pipeline import PipelineContext
from triplerank.scoring import ConstantScorer, OracleScorer, RandomScorer, ScoringError

from test_scoring import make_block


def test_mrr_examples():
    assert mrr([1, 2, 4]) == pytest.approx((1 + 0.5 + 0.25) / 3)
    assert mrr([1, 1, 1]) == 1.0
    assert mrr([50]) == pytest.approx(0.02)
    with pytest.raises(MetricError):
        mrr([])
    with pytest.raises(ValueError):
        mrr([0, 2])


def test_hits_examples():
    assert hits_at([1, 2, 4], 1) == pytest.approx(1 / 3)
    assert hits_at([1, 2, 4], 4) == 1.0
    assert hits_at([2, 2], 1) == 0.0
    with pytest.raises(MetricError):
        hits_at([], 1)
    with pytest.raises(ValueError):
        hits_at([1], 0)


def make_bundle(n_blocks=5):
    blocks = [make_block(positive=Triple(f"h{i}", "rel", f"t{i}")) for i in range(n_blocks)]
    return SplitBundle(train=Graph([]), test=Graph([]), queries=blocks)


def make_ctx(bundle, scorer):
    return PipelineContext(
        evidence=bundle.test,
        scorer=scorer,
        embedder=CachedEmbedder(HashEmbedder()),
    )


def test_oracle_scorer_gives_perfect_report():
    bundle = make_bundle()
    truth = {b.positive for b in bundle.queries}
    report = run_evaluation(bundle, "FULL", make_ctx(bundle, OracleScorer(truth)))
    assert report.mrr == 1.0
    assert report.hits1 == 1.0
    assert [r.rank for r in report.results] == [1] * 5
    assert not report.partial


def test_constant_scorer_hits_tie_floor():
    bundle = make_bundle()
    report = run_evaluation(bundle, "FULL", make_ctx(bundle, ConstantScorer(0.5)))
    assert report.mrr == pytest.approx(0.02, abs=1e-12)
    assert report.hits1 == 0.0
    assert all(r.rank == 50 for r in report.results)


def test_aggregates_recompute_exactly():
    bundle = make_bundle(8)
    report = run_evaluation(bundle, "TAR", make_ctx(bundle, RandomScorer(3)))
    re_mrr, re_hits = report.recompute_aggregates()
    assert report.mrr == re_mrr
    assert report.hits1 == re_hits
    assert len(report.results) == 8
    assert all(1 <= r.rank <= 50 for r in report.results)


def test_empty_bundle_is_an_error():
    bundle = SplitBundle(train=Graph([]), test=Graph([]), queries=[])
    with pytest.raises(MetricError):
        run_evaluation(bundle, "FULL", make_ctx(bundle, ConstantScorer()))


def test_report_json_excludes_timing_and_is_canonical():
    bundle = make_bundle(3)
    report = run_evaluation(
        bundle, "TAR", make_ctx(bundle, RandomScorer(0)), fingerprint="fp123"
    )
    payload = json.loads(report.to_json())
    assert "timing" not in payload
    assert payload["fingerprint"] == "fp123"
    with_timing = json.loads(report.to_json(include_timing=True))
    assert "seconds_total" in with_timing["timing"]
    assert "MRR" in report.to_table()


def test_resume_produces_identical_report(tmp_path):
    bundle = make_bundle(6)
    ctx = make_ctx(bundle, RandomScorer(5))
    kwargs = dict(fingerprint="resume-test", cache_dir=tmp_path, concurrency=2)
    first = run_evaluation(bundle, "TAR", ctx, **kwargs)

    # simulate an interrupted run: keep only half the checkpointed ranks
    rank_file = tmp_path / "resume-test" / "ranks.jsonl"
    lines = rank_file.read_text().splitlines()
    assert len(lines) == 6
    rank_file.write_text("\n".join(lines[:3]) + "\n")

    resumed = run_evaluation(bundle, "TAR", ctx, **kwargs)
    assert resumed.to_json() == first.to_json()

    # fully cached rerun is also byte-identical
    rerun = run_evaluation(bundle, "TAR", ctx, **kwargs)
    assert rerun.to_json() == first.to_json()


def test_failed_blocks_marked_partial():
    bundle = make_bundle(4)

    class ExplodingScorer(ConstantScorer):
        def score_yes(self, prompt):
            if prompt.query.head == "h2":
                raise ScoringError("endpoint down")
            return 0.9 if prompt.query.tail.startswith("t") else 0.1

    report = run_evaluation(bundle, "TAR", make_ctx(bundle, ExplodingScorer()))
    assert report.partial
    assert report.failed == ["q00002"]
    assert len(report.results) == 3


def test_evidence_graph_selection(toy_split):
    train = load_graph(toy_split["train"])
    test = load_graph(toy_split["test"])
    blocks = load_query_blocks(toy_split["queries"])
    bundle = SplitBundle(train=train, test=test, queries=blocks)
    assert bundle.evidence_graph("inductive") is test
    assert bundle.evidence_graph("transductive") is train
    with pytest.raises(ValueError):
        bundle.evidence_graph("nonsense")
    no_test = SplitBundle(train=train, test=None, queries=blocks)
    with pytest.raises(ValueError):
        no_test.evidence_graph("inductive")
