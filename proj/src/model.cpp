#include "hint/model.hpp"

#include <stdexcept>

namespace hint {

namespace {

std::vector<Channel> active_channels(const ModelConfig& config) {
  switch (config.channels) {
    case ChannelMode::kBoth:
      return {Channel::kCos, Channel::kXor};
    case ChannelMode::kCosOnly:
      return {Channel::kCos};
    case ChannelMode::kXorOnly:
      return {Channel::kXor};
  }
  return {};
}

const char* channel_tag(Channel c) { return c == Channel::kCos ? "cos" : "xor"; }

const SpatialGruParams& sgru_for(const HintParams& p, const ModelConfig& config,
                                 Channel ch, bool reverse_dir) {
  bool use_fwd = !reverse_dir || config.share_direction_params;
  if (ch == Channel::kCos) return use_fwd ? p.sgru_cos_fwd : p.sgru_cos_rev;
  return use_fwd ? p.sgru_xor_fwd : p.sgru_xor_rev;
}

SpatialGruParams& sgru_slot(HintParams& p, const ModelConfig& config, Channel ch,
                            bool reverse_dir) {
  bool use_fwd = !reverse_dir || config.share_direction_params;
  if (ch == Channel::kCos) return use_fwd ? p.sgru_cos_fwd : p.sgru_cos_rev;
  return use_fwd ? p.sgru_xor_fwd : p.sgru_xor_rev;
}

void collect_sgru(std::vector<NamedTensor>& out, SpatialGruParams& p,
                  const std::string& prefix) {
  auto add_m = [&](const char* n, Eigen::MatrixXd& m) {
    out.push_back({prefix + n, m.data(), m.size(), m.rows(), m.cols()});
  };
  auto add_v = [&](const char* n, Eigen::VectorXd& v) {
    out.push_back({prefix + n, v.data(), v.size(), v.size(), 1});
  };
  add_m("Wr_l", p.Wr_l);
  add_m("Wr_t", p.Wr_t);
  add_m("Wr_d", p.Wr_d);
  add_v("br_l", p.br_l);
  add_v("br_t", p.br_t);
  add_v("br_d", p.br_d);
  add_m("Wz_i", p.Wz_i);
  add_m("Wz_l", p.Wz_l);
  add_m("Wz_t", p.Wz_t);
  add_m("Wz_d", p.Wz_d);
  add_v("bz_i", p.bz_i);
  add_v("bz_l", p.bz_l);
  add_v("bz_t", p.bz_t);
  add_v("bz_d", p.bz_d);
  add_m("W", p.W);
  add_m("U", p.U);
  add_v("b", p.b);
}

void collect_lstm(std::vector<NamedTensor>& out, LstmParams& p,
                  const std::string& prefix) {
  auto add_m = [&](const char* n, Eigen::MatrixXd& m) {
    out.push_back({prefix + n, m.data(), m.size(), m.rows(), m.cols()});
  };
  auto add_v = [&](const char* n, Eigen::VectorXd& v) {
    out.push_back({prefix + n, v.data(), v.size(), v.size(), 1});
  };
  add_m("W_i", p.W_i);
  add_m("U_i", p.U_i);
  add_v("b_i", p.b_i);
  add_m("W_f", p.W_f);
  add_m("U_f", p.U_f);
  add_v("b_f", p.b_f);
  add_m("W_c", p.W_c);
  add_m("U_c", p.U_c);
  add_v("b_c", p.b_c);
  add_m("W_o", p.W_o);
  add_m("U_o", p.U_o);
  add_v("b_o", p.b_o);
}

}  // namespace

std::string to_name(Variant v) {
  switch (v) {
    case Variant::kIndependent: return "id";
    case Variant::kAccumulative: return "ad";
    case Variant::kHybrid: return "hd";
  }
  return "hd";
}

Variant variant_from_name(const std::string& name) {
  if (name == "id") return Variant::kIndependent;
  if (name == "ad") return Variant::kAccumulative;
  if (name == "hd") return Variant::kHybrid;
  throw std::invalid_argument("unknown variant '" + name + "' (want id|ad|hd)");
}

std::string to_name(ChannelMode c) {
  switch (c) {
    case ChannelMode::kBoth: return "both";
    case ChannelMode::kCosOnly: return "cos";
    case ChannelMode::kXorOnly: return "xor";
  }
  return "both";
}

ChannelMode channel_mode_from_name(const std::string& name) {
  if (name == "both") return ChannelMode::kBoth;
  if (name == "cos") return ChannelMode::kCosOnly;
  if (name == "xor") return ChannelMode::kXorOnly;
  throw std::invalid_argument("unknown channel mode '" + name +
                              "' (want both|cos|xor)");
}

std::string to_name(AdPool p) {
  return p == AdPool::kConcat ? "concat" : "union";
}

AdPool ad_pool_from_name(const std::string& name) {
  if (name == "union") return AdPool::kUnion;
  if (name == "concat") return AdPool::kConcat;
  throw std::invalid_argument("unknown pool layout '" + name +
                              "' (want union|concat)");
}

std::string to_name(ScanOrder o) {
  return o == ScanOrder::kWavefront ? "wavefront" : "row-major";
}

ScanOrder scan_order_from_name(const std::string& name) {
  if (name == "row-major") return ScanOrder::kRowMajor;
  if (name == "wavefront") return ScanOrder::kWavefront;
  throw std::invalid_argument("unknown scan order '" + name +
                              "' (want row-major|wavefront)");
}

int signal_block_offset(const ModelConfig& config, int channel_index,
                        bool reverse_dir) {
  const int nch = config.num_channels();
  return ((reverse_dir ? nch : 0) + channel_index) * config.sgru_dim;
}

HintParams allocate_params(const ModelConfig& config) {
  if (config.sgru_dim < 1 || config.lstm_dim < 1 || config.k < 1 ||
      config.emb_dim < 1)
    throw std::invalid_argument("model dimensions must be positive");
  HintParams p;
  p.comp.W_s = Eigen::VectorXd::Zero(config.emb_dim);
  p.comp.b_s = 0.0;
  p.comp.bias = config.comp_bias;

  const bool has_cos = config.channels != ChannelMode::kXorOnly;
  const bool has_xor = config.channels != ChannelMode::kCosOnly;
  auto zero_sgru = [&] {
    return SpatialGruParams::zeros(config.sgru_dim, config.in_dim());
  };
  if (has_cos) {
    p.sgru_cos_fwd = zero_sgru();
    if (!config.share_direction_params) p.sgru_cos_rev = zero_sgru();
  }
  if (has_xor) {
    p.sgru_xor_fwd = zero_sgru();
    if (!config.share_direction_params) p.sgru_xor_rev = zero_sgru();
  }

  if (config.variant != Variant::kIndependent) {
    p.decision.fwd = LstmParams::zeros(config.lstm_dim, config.signal_dim());
    p.decision.rev = LstmParams::zeros(config.lstm_dim, config.signal_dim());
  }
  if (config.variant == Variant::kHybrid) {
    p.decision.hybrid.W_v =
        Eigen::MatrixXd::Zero(config.lstm_dim, config.signal_dim());
    p.decision.hybrid.b_v = Eigen::VectorXd::Zero(config.lstm_dim);
  }

  const int n = scorer_input_dim(config.decision(), config.signal_dim(),
                                 config.lstm_dim);
  p.decision.scorer.hidden = config.scorer_hidden;
  if (config.scorer_hidden == 0) {
    p.decision.scorer.w = Eigen::VectorXd::Zero(n);
    p.decision.scorer.b = 0.0;
  } else {
    p.decision.scorer.W1 = Eigen::MatrixXd::Zero(config.scorer_hidden, n);
    p.decision.scorer.b1 = Eigen::VectorXd::Zero(config.scorer_hidden);
    p.decision.scorer.w2 = Eigen::VectorXd::Zero(config.scorer_hidden);
    p.decision.scorer.b2 = 0.0;
  }
  return p;
}

std::vector<NamedTensor> collect_tensors(HintParams& params,
                                         const ModelConfig& config) {
  std::vector<NamedTensor> out;
  if (config.tensor_input) {
    out.push_back({"comp.W_s", params.comp.W_s.data(), params.comp.W_s.size(),
                   params.comp.W_s.size(), 1});
    if (config.comp_bias) out.push_back({"comp.b_s", &params.comp.b_s, 1, 1, 1});
  }

  for (Channel ch : active_channels(config)) {
    std::string base = std::string("sgru.") + channel_tag(ch) + ".";
    if (config.share_direction_params) {
      collect_sgru(out, sgru_slot(params, config, ch, false), base + "shared.");
    } else {
      collect_sgru(out, sgru_slot(params, config, ch, false), base + "fwd.");
      collect_sgru(out, sgru_slot(params, config, ch, true), base + "rev.");
    }
  }

  if (config.variant != Variant::kIndependent) {
    collect_lstm(out, params.decision.fwd, "lstm.fwd.");
    collect_lstm(out, params.decision.rev, "lstm.rev.");
  }
  if (config.variant == Variant::kHybrid) {
    auto& h = params.decision.hybrid;
    out.push_back({"hybrid.W_v", h.W_v.data(), h.W_v.size(), h.W_v.rows(),
                   h.W_v.cols()});
    out.push_back({"hybrid.b_v", h.b_v.data(), h.b_v.size(), h.b_v.size(), 1});
  }

  auto& sc = params.decision.scorer;
  if (sc.hidden == 0) {
    out.push_back({"scorer.w", sc.w.data(), sc.w.size(), sc.w.size(), 1});
    out.push_back({"scorer.b", &sc.b, 1, 1, 1});
  } else {
    out.push_back({"scorer.W1", sc.W1.data(), sc.W1.size(), sc.W1.rows(),
                   sc.W1.cols()});
    out.push_back({"scorer.b1", sc.b1.data(), sc.b1.size(), sc.b1.size(), 1});
    out.push_back({"scorer.w2", sc.w2.data(), sc.w2.size(), sc.w2.size(), 1});
    out.push_back({"scorer.b2", &sc.b2, 1, 1, 1});
  }
  return out;
}

HintParams init_params(const ModelConfig& config, std::uint64_t seed) {
  HintParams params = allocate_params(config);
  for (NamedTensor& t : collect_tensors(params, config)) {
    Rng rng = Rng(seed).split(t.name);
    for (long i = 0; i < t.size; ++i) t.data[i] = rng.uniform(-0.1, 0.1);
  }
  if (config.variant != Variant::kIndependent) {
    params.decision.fwd.b_f.setConstant(1.0);
    params.decision.rev.b_f.setConstant(1.0);
  }
  return params;
}

long param_count(const ModelConfig& config) {
  HintParams params = allocate_params(config);
  long total = 0;
  for (const NamedTensor& t : collect_tensors(params, config)) total += t.size;
  return total;
}

std::optional<double> score_document(
    const std::vector<int>& query_tokens, const std::vector<Passage>& passages,
    const EmbeddingTable& emb, const ModelConfig& config, const HintParams& params,
    DocScoreCache* cache, const std::vector<MatchMatrices>* precomputed) {
  if (query_tokens.empty() || passages.empty()) return std::nullopt;
  if (precomputed && precomputed->size() != passages.size())
    throw std::invalid_argument("precomputed matrices do not match passages");

  const int T = static_cast<int>(passages.size());
  const auto channels = active_channels(config);
  Eigen::MatrixXd signals(config.signal_dim(), T);

  if (cache) {
    cache->tensors.clear();
    cache->tensors_rev.clear();
    cache->sgru_fwd.assign(T, std::vector<SgruCache>(channels.size()));
    cache->sgru_rev.assign(T, std::vector<SgruCache>(channels.size()));
  }

  for (int t = 0; t < T; ++t) {
    const Passage& pas = passages[t];
    MatchTensor tensor =
        precomputed
            ? assemble_tensor((*precomputed)[t], query_tokens, pas.tokens,
                              pas.mask, emb, params.comp)
            : build_match_tensor(query_tokens, pas.tokens, pas.mask, emb,
                                 params.comp);
    MatchTensor trev = reversed(tensor);

    for (std::size_t ci = 0; ci < channels.size(); ++ci) {
      Eigen::VectorXd fwd = sgru_forward(
          tensor, channels[ci], config.tensor_input,
          sgru_for(params, config, channels[ci], false), config.scan,
          cache ? &cache->sgru_fwd[t][ci] : nullptr);
      Eigen::VectorXd rev = sgru_forward(
          trev, channels[ci], config.tensor_input,
          sgru_for(params, config, channels[ci], true), config.scan,
          cache ? &cache->sgru_rev[t][ci] : nullptr);
      signals.col(t).segment(
          signal_block_offset(config, static_cast<int>(ci), false),
          config.sgru_dim) = fwd;
      signals.col(t).segment(
          signal_block_offset(config, static_cast<int>(ci), true),
          config.sgru_dim) = rev;
    }
    if (cache) {
      cache->tensors.push_back(std::move(tensor));
      cache->tensors_rev.push_back(std::move(trev));
    }
  }

  double score = score_decision(signals, config.decision(), params.decision,
                                cache ? &cache->decision : nullptr);
  if (cache) cache->signals = std::move(signals);
  return score;
}

void score_backprop(const std::vector<int>& query_tokens,
                    const std::vector<Passage>& passages, const EmbeddingTable& emb,
                    const ModelConfig& config, const HintParams& params,
                    const DocScoreCache& cache, double dscore, HintGrads& grads) {
  const int T = static_cast<int>(passages.size());
  if (T == 0 || dscore == 0.0) return;
  const auto channels = active_channels(config);

  Eigen::MatrixXd dsignals =
      Eigen::MatrixXd::Zero(config.signal_dim(), T);
  decision_backward(cache.signals, config.decision(), params.decision,
                    cache.decision, dscore, grads.decision, dsignals);

  CompressionGrads cgrads(emb.dim());
  for (int t = 0; t < T; ++t) {
    const MatchTensor& tensor = cache.tensors[t];
    const MatchTensor& trev = cache.tensors_rev[t];
    const int m = tensor.rows(), l = tensor.cols();
    Eigen::VectorXd dx_f = Eigen::VectorXd::Zero(m), dy_f = Eigen::VectorXd::Zero(l);
    Eigen::VectorXd dx_r = Eigen::VectorXd::Zero(m), dy_r = Eigen::VectorXd::Zero(l);

    for (std::size_t ci = 0; ci < channels.size(); ++ci) {
      Eigen::VectorXd de_f = dsignals.col(t).segment(
          signal_block_offset(config, static_cast<int>(ci), false),
          config.sgru_dim);
      Eigen::VectorXd de_r = dsignals.col(t).segment(
          signal_block_offset(config, static_cast<int>(ci), true),
          config.sgru_dim);
      sgru_backward(tensor, channels[ci], config.tensor_input,
                    sgru_for(params, config, channels[ci], false),
                    cache.sgru_fwd[t][ci], de_f,
                    sgru_slot(grads, config, channels[ci], false), dx_f, dy_f);
      sgru_backward(trev, channels[ci], config.tensor_input,
                    sgru_for(params, config, channels[ci], true),
                    cache.sgru_rev[t][ci], de_r,
                    sgru_slot(grads, config, channels[ci], true), dx_r, dy_r);
    }

    if (config.tensor_input) {
      const int rm = tensor.real_rows, rc = tensor.real_cols;
      Eigen::VectorXd dx = dx_f, dy = dy_f;
      for (int i = 0; i < rm; ++i) dx(i) += dx_r(rm - 1 - i);
      for (int j = 0; j < rc; ++j) dy(j) += dy_r(rc - 1 - j);
      accumulate_compression_grads(query_tokens, passages[t].tokens, dx, dy, rc,
                                   emb, params.comp, cgrads);
    }
  }

  if (config.tensor_input) {
    grads.comp.W_s += cgrads.dW_s;
    if (config.comp_bias) grads.comp.b_s += cgrads.db_s;
  }
}

}  // namespace hint
