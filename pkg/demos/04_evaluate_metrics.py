"""
Evaluating a parsing run
========================

Four metrics, two axes: grouping (did logs that share a template land in
the same cluster?) and templates (did we recover the right template
text?), each at log granularity (GA, PA) and group granularity (FGA, FTA).

This demo runs the full pipeline on the synthetic fixture, then scores
the predictions against ground truth, and also shows how a deliberately
broken prediction drags each metric down differently.
"""

from logsift import (
    CentroidIndex,
    ClusterParser,
    EncoderWeights,
    HashingProvider,
    IngestConfig,
    MockCompletionClient,
    Pipeline,
    evaluate,
)
from logsift.synthetic import generate_corpus

provider = HashingProvider(dim=512)
weights = EncoderWeights.identity_init(provider.dim)
parser = ClusterParser(client=MockCompletionClient())
pipeline = Pipeline(provider, weights, CentroidIndex(), parser,
                    IngestConfig())

corpus = generate_corpus(n_templates=10, logs_per_template=100, seed=7)
assignments = [pipeline.ingest(r) for r in corpus.records]

predicted = [parser.store.template_for(a.cluster_id) for a in assignments]
truth = [corpus.template_texts[t] for t in corpus.template_ids]

report = evaluate(predicted, truth)
print("perfect run:")
print(report.to_table())

# now sabotage the run: corrupt one template's text and split one group
broken = list(predicted)
for i, t in enumerate(broken):
    if t == predicted[0]:
        broken[i] = predicted[0] + " oops"        # wrong text, same group
broken_groups = [a.cluster_id for a in assignments]
for i in range(50):
    broken_groups[i] = 9999                       # split half of cluster 0

report = evaluate(broken, truth, predicted_groups=broken_groups)
print("\nsabotaged run (one template text corrupted, one group split):")
print(report.to_table())
