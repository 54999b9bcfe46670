#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "hint/corpus.hpp"
#include "hint/decision.hpp"
#include "hint/matching.hpp"
#include "hint/sgru.hpp"

namespace hint {

/// Which interaction channels feed the recurrent layer.
enum class ChannelMode { kBoth, kCosOnly, kXorOnly };

// Stable names used in configuration files, CLI flags, and checkpoints.
std::string to_name(Variant v);                      // id | ad | hd
Variant variant_from_name(const std::string& name);
std::string to_name(ChannelMode c);                  // both | cos | xor
ChannelMode channel_mode_from_name(const std::string& name);
std::string to_name(AdPool p);                       // union | concat
AdPool ad_pool_from_name(const std::string& name);
std::string to_name(ScanOrder o);                    // row-major | wavefront
ScanOrder scan_order_from_name(const std::string& name);

struct ModelConfig {
  Variant variant = Variant::kHybrid;
  ChannelMode channels = ChannelMode::kBoth;
  bool tensor_input = true;  // cell input [x, y, m]; false: [m] only
  bool share_direction_params = false;
  AdPool ad_pool = AdPool::kUnion;
  int k = 10;           // pool size
  int sgru_dim = 2;     // recurrent layer width
  int lstm_dim = 6;     // decision LSTM width
  int emb_dim = 50;
  bool comp_bias = true;
  int scorer_hidden = 0;  // 0 = affine scorer
  ScanOrder scan = ScanOrder::kRowMajor;

  int in_dim() const { return tensor_input ? 3 : 1; }
  int num_channels() const { return channels == ChannelMode::kBoth ? 2 : 1; }
  /// Passage signal width: one block per (direction, channel).
  int signal_dim() const { return num_channels() * 2 * sgru_dim; }

  DecisionConfig decision() const { return {variant, ad_pool, k}; }
};

/// All trainable parameters. Word embeddings are inputs, not parameters;
/// they stay fixed during training. Members a configuration does not use
/// are left zero-size and never appear in collect_tensors.
struct HintParams {
  CompressionParams comp;
  SpatialGruParams sgru_cos_fwd, sgru_cos_rev;
  SpatialGruParams sgru_xor_fwd, sgru_xor_rev;
  DecisionParams decision;
};

/// Gradients mirror the parameter layout exactly.
using HintGrads = HintParams;

/// Flat named view of every trainable tensor, in a fixed order shared by
/// initialization, the optimizer, and checkpoints. `data` points into the
/// owning HintParams (column-major for matrices).
struct NamedTensor {
  std::string name;
  double* data = nullptr;
  long size = 0;
  long rows = 0, cols = 0;
};

/// Zero parameters with the shapes the configuration calls for.
HintParams allocate_params(const ModelConfig& config);

/// Uniform draws from (-0.1, 0.1), one deterministic stream per tensor
/// keyed by (seed, tensor name); then the LSTM forget biases are set to 1
/// so gates start open.
HintParams init_params(const ModelConfig& config, std::uint64_t seed);

std::vector<NamedTensor> collect_tensors(HintParams& params,
                                         const ModelConfig& config);

long param_count(const ModelConfig& config);

/// Signal block layout: forward-direction blocks for every active channel,
/// then reverse-direction blocks, channels in (cos, xor) order. Each block
/// is sgru_dim wide.
int signal_block_offset(const ModelConfig& config, int channel_index,
                        bool reverse_dir);

/// Everything the backward pass needs for one scored document.
struct DocScoreCache {
  std::vector<MatchTensor> tensors;      // per passage
  std::vector<MatchTensor> tensors_rev;  // reversed views
  // Per passage, per active channel (cos first when both are on).
  std::vector<std::vector<SgruCache>> sgru_fwd, sgru_rev;
  Eigen::MatrixXd signals;  // signal_dim x T
  DecisionCache decision;
};

/// Scores one document against a query. Returns nullopt when the document
/// has no passages or the query is empty (such documents cannot be ranked).
/// `precomputed` optionally supplies the parameter-independent interaction
/// matrices, one per passage, to avoid recomputing them across steps.
std::optional<double> score_document(
    const std::vector<int>& query_tokens, const std::vector<Passage>& passages,
    const EmbeddingTable& emb, const ModelConfig& config, const HintParams& params,
    DocScoreCache* cache = nullptr,
    const std::vector<MatchMatrices>* precomputed = nullptr);

/// Accumulates d(dscore * score)/d(params) into `grads`. `cache` must come
/// from the score_document call being differentiated.
void score_backprop(const std::vector<int>& query_tokens,
                    const std::vector<Passage>& passages, const EmbeddingTable& emb,
                    const ModelConfig& config, const HintParams& params,
                    const DocScoreCache& cache, double dscore, HintGrads& grads);

}  // namespace hint
