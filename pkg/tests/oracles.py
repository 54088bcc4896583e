"""Independent reference implementations used to verify the library:
pure-Python scalar loops for the numeric kernels, exhaustive bipartite
matching for the scorer, an all-pairs nesting scan, and central finite
differences for gradients. Nothing here may call into the code under test."""

import math

import numpy as np


# ---------------------------------------------------------------------------
# Scalar-loop numeric kernels


def softmax_oracle(values):
    m = max(values)
    exps = [math.exp(v - m) for v in values]
    total = sum(exps)
    return [e / total for e in exps]


def activation_oracle(name, x):
    if name == "gelu":
        return x * 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))
    if name == "tanh":
        return math.tanh(x)
    if name == "relu":
        return max(x, 0.0)
    if name == "identity":
        return x
    raise ValueError(name)


def pool_oracle(vectors, alignment, layer_weights, scorer_weight, scorer_bias):
    """vectors: (L, S, D) array; alignment: per-token subword index lists;
    scorer is a linear map (D,) weight + scalar bias shared across layers."""
    n_layers, _, dim = vectors.shape
    layer_mix = softmax_oracle(list(layer_weights))
    out = np.zeros((len(alignment), dim))
    for t, subwords in enumerate(alignment):
        for layer in range(n_layers):
            scores = []
            for s in subwords:
                score = scorer_bias
                for d in range(dim):
                    score += scorer_weight[d] * vectors[layer, s, d]
                scores.append(score)
            attention = softmax_oracle(scores)
            for weight, s in zip(attention, subwords):
                for d in range(dim):
                    out[t, d] += layer_mix[layer] * weight * vectors[layer, s, d]
    return out


def bilinear_oracle(x1, x2, u):
    n1, d1 = x1.shape
    n2, d2 = x2.shape
    channels = u.shape[1]
    out = np.zeros((n1, channels, n2))
    for i in range(n1):
        for k in range(channels):
            for j in range(n2):
                total = 0.0
                for d in range(d1):
                    for e in range(d2):
                        total += x1[i, d] * u[d, k, e] * x2[j, e]
                out[i, k, j] = total
    return out


def biaffine_oracle(x1, x2, u, w, b):
    n1, d1 = x1.shape
    n2, d2 = x2.shape
    channels = u.shape[1]
    out = bilinear_oracle(x1, x2, u)
    for i in range(n1):
        for k in range(channels):
            for j in range(n2):
                linear = b[k]
                for d in range(d1):
                    linear += w[k, d] * x1[i, d]
                for e in range(d2):
                    linear += w[k, d1 + e] * x2[j, e]
                out[i, k, j] += linear
    return out


def fnn_oracle(x, weight, bias, activation):
    n, d_in = x.shape
    d_out = weight.shape[0]
    out = np.zeros((n, d_out))
    for i in range(n):
        for o in range(d_out):
            total = bias[o]
            for d in range(d_in):
                total += weight[o, d] * x[i, d]
            out[i, o] = activation_oracle(activation, total)
    return out


# ---------------------------------------------------------------------------
# Exhaustive one-to-one matching (scorer oracle)


def max_matching(preds, golds, match_fn):
    """Size of a maximum one-to-one matching, by exhaustive search."""
    best = 0

    def recurse(i, used, count):
        nonlocal best
        best = max(best, count)
        if i == len(preds) or count + (len(preds) - i) <= best:
            return
        recurse(i + 1, used, count)
        for j in range(len(golds)):
            if j not in used and match_fn(preds[i], golds[j]):
                used.add(j)
                recurse(i + 1, used, count + 1)
                used.remove(j)

    recurse(0, set(), 0)
    return best


def brute_force_counts(pred_sentence, gold_sentence):
    """(gold, predicted, matched) per scoring category, matching the metric
    definitions directly: exact offsets/type keys, arguments conditioned on
    the predicted event type matching some reference event type."""

    def spans(sentence):
        return {e.id: (e.span.start, e.span.end) for e in sentence.entities}

    def entity_items(s):
        return [(e.span.start, e.span.end, e.entity_type) for e in s.entities]

    def relation_items(s):
        sp = spans(s)
        return [(r.relation_type, sp[r.arg1], sp[r.arg2]) for r in s.relations]

    def trigger_items(s):
        return [((ev.trigger_span.start, ev.trigger_span.end), ev.event_type) for ev in s.events]

    def argument_items(s):
        sp = spans(s)
        return [(ev.event_type, sp[ent], role) for ev in s.events for ent, role in ev.arguments]

    gold_types = {etype for _, etype in trigger_items(gold_sentence)}
    results = {}

    def run(name, preds, golds, match_fn):
        results[name] = (len(golds), len(preds), max_matching(preds, golds, match_fn))

    run("entity", entity_items(pred_sentence), entity_items(gold_sentence), lambda p, g: p == g)
    run("relation", relation_items(pred_sentence), relation_items(gold_sentence), lambda p, g: p == g)
    run("trigger_id", trigger_items(pred_sentence), trigger_items(gold_sentence),
        lambda p, g: p[0] == g[0])
    run("trigger_cls", trigger_items(pred_sentence), trigger_items(gold_sentence),
        lambda p, g: p == g)
    run("argument_id", argument_items(pred_sentence), argument_items(gold_sentence),
        lambda p, g: p[1] == g[1] and p[0] in gold_types)
    run("argument_cls", argument_items(pred_sentence), argument_items(gold_sentence),
        lambda p, g: p[1] == g[1] and p[2] == g[2] and p[0] in gold_types)
    return results


# ---------------------------------------------------------------------------
# All-pairs nesting scan


def nesting_scan(corpus):
    """O(n^2) per-sentence overlap scan; returns (trg_trg, ent_ent, trg_ent,
    nested_sents, all_sents)."""

    def overlap(a, b):
        return len(set(range(a.start, a.end)) & set(range(b.start, b.end))) >= 1

    trg_trg = ent_ent = trg_ent = nested = 0
    for sentence in corpus.sentences:
        triggers = [ev.trigger_span for ev in sentence.events]
        entities = [e.span for e in sentence.entities]
        found = 0
        for i in range(len(triggers)):
            for j in range(i + 1, len(triggers)):
                if overlap(triggers[i], triggers[j]):
                    trg_trg += 1
                    found += 1
        for i in range(len(entities)):
            for j in range(i + 1, len(entities)):
                if overlap(entities[i], entities[j]):
                    ent_ent += 1
                    found += 1
        for t in triggers:
            for e in entities:
                if overlap(t, e):
                    trg_ent += 1
                    found += 1
        if found:
            nested += 1
    return trg_trg, ent_ent, trg_ent, nested, len(corpus.sentences)


# ---------------------------------------------------------------------------
# Finite differences


def relative_error(a, b, floor=1e-12):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = max(np.linalg.norm(a), np.linalg.norm(b), floor)
    return np.linalg.norm(a - b) / denom


def central_difference(f, tensor, indices=None, h=1e-6):
    """Finite-difference gradient of scalar-valued f() w.r.t. entries of a
    torch tensor modified in place; returns {index: derivative}."""
    import torch

    flat = tensor.detach().reshape(-1)
    if indices is None:
        indices = range(flat.numel())
    grads = {}
    for index in indices:
        original = flat[index].item()
        step = h * max(1.0, abs(original))
        with torch.no_grad():
            flat[index] = original + step
            up = float(f())
            flat[index] = original - step
            down = float(f())
            flat[index] = original
        grads[index] = (up - down) / (2.0 * step)
    return grads
