#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "synthcse/autodiff/graph.hpp"
#include "synthcse/encoder/encoder.hpp"

namespace synthcse::contrastive {

using autodiff::Graph;
using autodiff::NodeId;

// Supervised SimCSE objective over [M x d] anchor, positive and hard-negative
// embeddings. For each anchor i the softmax runs over all M positives and all
// M negatives of the batch (j = i included), with cosine similarity scaled by
// 1/temperature; the loss is the batch mean of -log p(positive_i | anchor_i).
NodeId supervised_loss(Graph& graph, NodeId anchors, NodeId positives, NodeId negatives, double temperature);

// Same objective with the hard-negative term removed: the softmax runs over
// the M positives only.
NodeId unsupervised_loss(Graph& graph, NodeId anchors, NodeId positives, double temperature);

// Unsupervised SimCSE on raw sentences: each sentence is encoded twice under
// two dropout masks derived from seed, and the second view is the positive of
// the first. Requires at least two sentences and dropout_keep < 1.
NodeId unsupervised_loss(Graph& graph, encoder::EncoderGraph& model, std::span<const encoder::TokenizedText> sentences,
                         encoder::Pooling pooling, double temperature, std::uint64_t seed);

// Worst finite-difference relative error of supervised_loss over `trials`
// random [M x d] triples with standard-normal entries. At very low
// temperatures the softmax saturates and gradients fall below the relative
// error floor, so checks use moderate temperatures.
double supervised_loss_grad_error(std::size_t trials, std::uint64_t seed, double temperature, std::size_t m = 3,
                                  std::size_t d = 4, double eps = 1e-5);

}  // namespace synthcse::contrastive
