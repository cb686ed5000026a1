#pragma once

#include <span>
#include <vector>

#include "relatt/error.hpp"
#include "relatt/kg/graph.hpp"
#include "relatt/kg/negatives.hpp"
#include "relatt/num/tape.hpp"

namespace relatt {

// g(h, r, t) = h^T M_r t with diagonal M_r. Each term is evaluated as
// diag * (h * t) so swapping h and t gives the bitwise-identical result.
inline double distmult_score(std::span<const double> h, std::span<const double> diag,
                             std::span<const double> t) {
    if (h.size() != diag.size() || h.size() != t.size())
        throw ContractError("distmult_score: vector length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) s += diag[i] * (h[i] * t[i]);
    return s;
}

// Scores a triple batch on the tape: gather head/tail embedding rows and the
// relation diagonals, take the three-way elementwise product, reduce rows.
// Inverse-relation diagonal rows exist but scoring always uses the original
// relation index carried by the triple.
inline ValueId score_triples(Tape& tape, ValueId embeddings, ValueId distmult_diag,
                             std::span<const Triple> triples) {
    if (triples.empty()) throw ContractError("score_triples: empty batch");
    std::vector<int> heads, rels, tails;
    heads.reserve(triples.size());
    rels.reserve(triples.size());
    tails.reserve(triples.size());
    for (const Triple& t : triples) {
        heads.push_back(t.head);
        rels.push_back(t.rel);
        tails.push_back(t.tail);
    }
    ValueId h = tape.gather_rows(embeddings, std::move(heads));
    ValueId d = tape.gather_rows(distmult_diag, std::move(rels));
    ValueId t = tape.gather_rows(embeddings, std::move(tails));
    return tape.row_sum(tape.mul(d, tape.mul(h, t)));
}

// Mean binary cross-entropy of sigmoid(scores) against {0,1} labels, in the
// numerically stable log-sum-exp form.
inline ValueId bce_loss(Tape& tape, ValueId scores, const std::vector<double>& labels) {
    return tape.bce_with_logits(scores, Tensor::vector(labels));
}

// Plain (tape-free) version for evaluation paths and tests.
inline double bce_loss(std::span<const double> scores, std::span<const double> labels) {
    if (scores.empty()) throw ContractError("bce_loss: empty batch");
    if (scores.size() != labels.size()) throw ContractError("bce_loss: length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        total += Tape::softplus(scores[i]) - labels[i] * scores[i];
    return total / static_cast<double>(scores.size());
}

}  // namespace relatt
