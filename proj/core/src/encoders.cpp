#include "strsynth/encoders.hpp"

#include <algorithm>

namespace strsynth {

const char* encoder_variant_name(EncoderVariant v) {
  switch (v) {
    case EncoderVariant::Lstm: return "lstm";
    case EncoderVariant::Cc: return "cc";
    case EncoderVariant::DiffusedCc: return "diffused_cc";
    case EncoderVariant::LstmSumCc: return "lstm_sum_cc";
    case EncoderVariant::AugmentedDiffusedCc: return "aug_diffused_cc";
  }
  return "?";
}

std::optional<EncoderVariant> encoder_variant_from_name(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(EncoderVariant::AugmentedDiffusedCc); ++i) {
    auto v = static_cast<EncoderVariant>(i);
    if (name == encoder_variant_name(v)) return v;
  }
  return std::nullopt;
}

int EncoderConfig::per_pair_dim() const {
  switch (variant) {
    case EncoderVariant::Lstm: return 4 * H * T;
    case EncoderVariant::Cc: return 2 * (T - 1);
    case EncoderVariant::DiffusedCc: return 2 * (T - 1) * T;
    case EncoderVariant::LstmSumCc: return 2 * H * 2 * (T - 1);
    case EncoderVariant::AugmentedDiffusedCc: return 4 * H + T * (T - 1);
  }
  return 0;
}

int EncoderConfig::io_dim() const { return n_pairs * per_pair_dim(); }

IoEncoder::IoEncoder(EncoderConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.T < 2 || cfg_.H < 1 || cfg_.E < 1 || cfg_.n_pairs < 1) {
    throw std::invalid_argument("encoder sizes must be positive (and T >= 2)");
  }
  if (cfg_.charset.empty()) throw std::invalid_argument("encoder charset is empty");
  char_id_.assign(256, -1);
  for (size_t i = 0; i < cfg_.charset.size(); ++i) {
    char_id_[static_cast<unsigned char>(cfg_.charset[i])] = static_cast<int>(i);
  }
}

void IoEncoder::init(ParamStore& store, Rng& rng) const {
  size_t vocab = cfg_.charset.size();
  store.define("enc.embed", {vocab, static_cast<size_t>(cfg_.E)});
  init_xavier(store, "enc.embed", vocab, cfg_.E, rng);
  define_bilstm(store, "enc.in", cfg_.E, cfg_.H, cfg_.lstm_layers, rng);
  define_bilstm(store, "enc.out", cfg_.E, cfg_.H, cfg_.lstm_layers, rng);
  if (cfg_.variant == EncoderVariant::LstmSumCc) {
    define_bilstm(store, "enc.align", 4 * cfg_.H, cfg_.H, 1, rng);
  }
  if (cfg_.variant == EncoderVariant::AugmentedDiffusedCc) {
    size_t in_dim = static_cast<size_t>(cfg_.T - 1 + cfg_.E);
    define_bilstm(store, "enc.aug.in", in_dim, cfg_.H, 1, rng);
    define_bilstm(store, "enc.aug.out", in_dim, cfg_.H, 1, rng);
  }
}

IoEncoder::Embedded IoEncoder::embed_string(Tape& tape, ParamStore& store,
                                            const std::string& s) const {
  if (static_cast<int>(s.size()) > cfg_.T) {
    throw StringTooLong("string of length " + std::to_string(s.size()) + " exceeds T=" +
                        std::to_string(cfg_.T));
  }
  std::vector<int> ids;
  ids.reserve(s.size());
  for (char c : s) {
    int id = char_id_[static_cast<unsigned char>(c)];
    if (id < 0) throw UnknownChar(std::string("character not in charset: '") + c + "'");
    ids.push_back(id);
  }
  Embedded out;
  out.len = static_cast<int>(s.size());
  out.rows.reserve(cfg_.T);
  if (!ids.empty()) {
    Tensor table = store.use(tape, "enc.embed");
    Tensor rows = tape.embedding_lookup(table, ids);
    for (int t = 0; t < out.len; ++t) out.rows.push_back(tape.row(rows, t));
  }
  for (int t = out.len; t < cfg_.T; ++t) {
    out.rows.push_back(tape.zeros({static_cast<size_t>(cfg_.E)}));
  }
  return out;
}

std::vector<Tensor> IoEncoder::feature_block(Tape& tape, ParamStore& store,
                                             const std::string& s, bool output_stream) const {
  Embedded emb = embed_string(tape, store, s);
  std::vector<Tensor> live(emb.rows.begin(), emb.rows.begin() + emb.len);
  std::vector<Tensor> states = bilstm_run(tape, store, output_stream ? "enc.out" : "enc.in",
                                          live, cfg_.H, cfg_.lstm_layers);
  // Zero rows at padding keep masked positions exactly out of the
  // correlation features.
  std::vector<Tensor> block;
  block.reserve(cfg_.T);
  for (int t = 0; t < emb.len; ++t) block.push_back(states[t]);
  for (int t = emb.len; t < cfg_.T; ++t) {
    block.push_back(tape.zeros({static_cast<size_t>(2 * cfg_.H)}));
  }
  return block;
}

Tensor IoEncoder::lstm_encode_pair(Tape& tape, ParamStore& store, const Example& pair) const {
  std::vector<Tensor> in_block = feature_block(tape, store, pair.input, false);
  std::vector<Tensor> out_block = feature_block(tape, store, pair.output, true);
  std::vector<Tensor> all = std::move(in_block);
  all.insert(all.end(), out_block.begin(), out_block.end());
  return tape.concat(all);  // 2HT + 2HT = 4HT
}

Tensor IoEncoder::correlation_matrix(Tape& tape, std::span<const Tensor> in_block,
                                     std::span<const Tensor> out_block) const {
  Tensor in_mat = tape.stack_rows(in_block);                      // {T, 2H}
  Tensor out_mat = tape.transpose(tape.stack_rows(out_block));    // {2H, T}
  return tape.matmul(in_mat, out_mat);                            // corr[t][u]
}

namespace {

// The 2(T-1) relative alignments: shifts -(T-1) .. T-2, zero shift included.
// For shift s, input position t overlaps output position t - s.
struct Alignment {
  int shift;
  int t_begin, t_end;  // overlapping input positions [t_begin, t_end)
};

std::vector<Alignment> alignments(int T) {
  std::vector<Alignment> out;
  out.reserve(2 * (T - 1));
  for (int s = -(T - 1); s <= T - 2; ++s) {
    int begin = std::max(0, s);
    int end = std::min(T, T + s);
    out.push_back({s, begin, end});
  }
  return out;
}

}  // namespace

Tensor IoEncoder::cc_encode(Tape& tape, ParamStore& store, const Example& pair) const {
  std::vector<Tensor> in_block = feature_block(tape, store, pair.input, false);
  std::vector<Tensor> out_block = feature_block(tape, store, pair.output, true);
  Tensor corr = tape.reshape(correlation_matrix(tape, in_block, out_block),
                             {static_cast<size_t>(cfg_.T * cfg_.T)});
  std::vector<Tensor> feats;
  for (const Alignment& a : alignments(cfg_.T)) {
    std::vector<int> idx;
    for (int t = a.t_begin; t < a.t_end; ++t) idx.push_back(t * cfg_.T + (t - a.shift));
    feats.push_back(tape.sum(tape.gather(corr, std::move(idx))));
  }
  return tape.concat(feats);
}

Tensor IoEncoder::diffused_cc(Tape& tape, ParamStore& store, const Example& pair) const {
  std::vector<Tensor> in_block = feature_block(tape, store, pair.input, false);
  std::vector<Tensor> out_block = feature_block(tape, store, pair.output, true);
  Tensor corr = tape.reshape(correlation_matrix(tape, in_block, out_block),
                             {static_cast<size_t>(cfg_.T * cfg_.T)});
  std::vector<Tensor> feats;
  for (const Alignment& a : alignments(cfg_.T)) {
    std::vector<int> idx;
    for (int t = a.t_begin; t < a.t_end; ++t) idx.push_back(t * cfg_.T + (t - a.shift));
    int pad = cfg_.T - static_cast<int>(idx.size());
    feats.push_back(tape.gather(corr, std::move(idx)));
    if (pad > 0) feats.push_back(tape.zeros({static_cast<size_t>(pad)}));
  }
  return tape.concat(feats);  // 2(T-1) alignments x T slots
}

Tensor IoEncoder::lstm_sum_cc(Tape& tape, ParamStore& store, const Example& pair) const {
  std::vector<Tensor> in_block = feature_block(tape, store, pair.input, false);
  std::vector<Tensor> out_block = feature_block(tape, store, pair.output, true);
  std::vector<Tensor> feats;
  for (const Alignment& a : alignments(cfg_.T)) {
    std::vector<Tensor> seq;
    for (int t = a.t_begin; t < a.t_end; ++t) {
      Tensor pairvec[] = {in_block[t], out_block[t - a.shift]};
      seq.push_back(tape.concat(pairvec));
    }
    feats.push_back(bilstm_final(tape, store, "enc.align", seq, cfg_.H, 1));
  }
  return tape.concat(feats);  // 2H per alignment
}

Tensor IoEncoder::augmented_diffused_cc(Tape& tape, ParamStore& store,
                                        const Example& pair) const {
  Embedded in_emb = embed_string(tape, store, pair.input);
  Embedded out_emb = embed_string(tape, store, pair.output);
  std::vector<Tensor> in_block = feature_block(tape, store, pair.input, false);
  std::vector<Tensor> out_block = feature_block(tape, store, pair.output, true);
  Tensor corr = tape.reshape(correlation_matrix(tape, in_block, out_block),
                             {static_cast<size_t>(cfg_.T * cfg_.T)});
  int T = cfg_.T;

  // Off-diagonal correlations, T*(T-1) of them. Per input position t the
  // dots against every output position u != t, combined with the character
  // embedding at t; symmetrically for the output stream.
  std::vector<Tensor> corr_feats;
  std::vector<Tensor> in_seq, out_seq;
  for (int t = 0; t < T; ++t) {
    std::vector<int> idx;
    for (int u = 0; u < T; ++u) {
      if (u != t) idx.push_back(t * T + u);
    }
    Tensor per_pos = tape.gather(corr, std::move(idx));  // {T-1}
    corr_feats.push_back(per_pos);
    Tensor combined[] = {per_pos, in_emb.rows[t]};
    in_seq.push_back(tape.concat(combined));
  }
  for (int u = 0; u < T; ++u) {
    std::vector<int> idx;
    for (int t = 0; t < T; ++t) {
      if (t != u) idx.push_back(t * T + u);
    }
    Tensor per_pos = tape.gather(corr, std::move(idx));
    Tensor combined[] = {per_pos, out_emb.rows[u]};
    out_seq.push_back(tape.concat(combined));
  }
  Tensor in_vec = bilstm_final(tape, store, "enc.aug.in", in_seq, cfg_.H, 1);    // {2H}
  Tensor out_vec = bilstm_final(tape, store, "enc.aug.out", out_seq, cfg_.H, 1);  // {2H}
  std::vector<Tensor> all;
  all.push_back(in_vec);
  all.push_back(out_vec);
  all.insert(all.end(), corr_feats.begin(), corr_feats.end());
  return tape.concat(all);  // 4H + T(T-1)
}

Tensor IoEncoder::encode_pair(Tape& tape, ParamStore& store, const Example& pair) const {
  switch (cfg_.variant) {
    case EncoderVariant::Lstm: return lstm_encode_pair(tape, store, pair);
    case EncoderVariant::Cc: return cc_encode(tape, store, pair);
    case EncoderVariant::DiffusedCc: return diffused_cc(tape, store, pair);
    case EncoderVariant::LstmSumCc: return lstm_sum_cc(tape, store, pair);
    case EncoderVariant::AugmentedDiffusedCc: return augmented_diffused_cc(tape, store, pair);
  }
  throw std::logic_error("unreachable encoder variant");
}

Tensor IoEncoder::encode_io_set(Tape& tape, ParamStore& store,
                                const std::vector<Example>& examples) const {
  if (examples.empty()) throw std::invalid_argument("encode_io_set: no examples");
  if (static_cast<int>(examples.size()) > cfg_.n_pairs) {
    throw TooManyPairs("task has " + std::to_string(examples.size()) + " pairs, config allows " +
                       std::to_string(cfg_.n_pairs));
  }
  std::vector<Tensor> encs;
  for (int i = 0; i < cfg_.n_pairs; ++i) {
    const Example& e = examples[std::min<size_t>(i, examples.size() - 1)];
    encs.push_back(encode_pair(tape, store, e));
  }
  return tape.concat(encs);
}

}  // namespace strsynth
