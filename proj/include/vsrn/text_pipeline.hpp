#pragma once

// Caption side of the model: vocabulary, GRU sentence encoder into the joint
// space, and the attention decoder scored by teacher-forced log-likelihood.

#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vsrn/errors.hpp"
#include "vsrn/global_reasoning.hpp"
#include "vsrn/region_reasoning.hpp"
#include "vsrn/rng.hpp"
#include "vsrn/tensor.hpp"

namespace vsrn {

using TokenId = std::uint32_t;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;

class Vocabulary {
 public:
  Vocabulary() {
    for (const char* t : {"<pad>", "<bos>", "<eos>", "<unk>"}) add(t);
  }

  // Returns the id of `token`, inserting it if new.
  TokenId add(const std::string& token) {
    if (auto it = ids_.find(token); it != ids_.end()) return it->second;
    const auto id = static_cast<TokenId>(tokens_.size());
    tokens_.push_back(token);
    ids_.emplace(token, id);
    return id;
  }

  TokenId id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnk : it->second;
  }

  const std::string& token(TokenId id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Lowercases and splits on whitespace and punctuation.
  static std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    for (char ch : text) {
      const auto c = static_cast<unsigned char>(ch);
      if (std::isspace(c) || std::ispunct(c)) {
        if (!current.empty()) out.push_back(std::move(current));
        current.clear();
      } else {
        current.push_back(static_cast<char>(std::tolower(c)));
      }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
  }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

// Caption as word ids; the BOS/EOS sentinels are implicit.
struct TokenSequence {
  std::vector<TokenId> ids;

  std::size_t length() const { return ids.size(); }
  bool operator==(const TokenSequence&) const = default;
};

inline TokenSequence encode_text(const Vocabulary& vocab, std::string_view text) {
  TokenSequence seq;
  for (const auto& tok : Vocabulary::tokenize(text)) seq.ids.push_back(vocab.id(tok));
  return seq;
}

struct TextEncoderParams {
  Tensor embedding;       // |vocab| x word_dim
  GruCellParams encoder;  // word_dim -> D
  GruCellParams decoder;  // word_dim + D -> D
  Tensor w_out;           // D x |vocab|
  Tensor b_out;           // |vocab|

  std::size_t vocab_size() const { return embedding.dim(0); }
  std::size_t word_dim() const { return embedding.dim(1); }
  std::size_t joint_dim() const { return encoder.state_dim(); }

  static TextEncoderParams init(std::size_t vocab_size, std::size_t word_dim,
                                std::size_t joint_dim, Rng& rng) {
    TextEncoderParams p;
    std::vector<double> emb(vocab_size * word_dim);
    for (double& x : emb) x = rng.uniform(-0.1, 0.1);
    p.embedding = Tensor::parameter({vocab_size, word_dim}, std::move(emb));
    p.encoder = GruCellParams::init(word_dim, joint_dim, rng);
    p.decoder = GruCellParams::init(word_dim + joint_dim, joint_dim, rng);
    const double bound = 1.0 / std::sqrt(static_cast<double>(joint_dim));
    std::vector<double> out(joint_dim * vocab_size);
    for (double& x : out) x = rng.uniform(-bound, bound);
    p.w_out = Tensor::parameter({joint_dim, vocab_size}, std::move(out));
    p.b_out = Tensor::zeros({vocab_size}, true);
    return p;
  }
};

namespace detail {

inline TokenId clamp_token(TokenId id, std::size_t vocab_size) {
  return id < vocab_size ? id : kUnk;
}

}  // namespace detail

// Final hidden state of the encoder GRU run left to right from zero.
inline Tensor encode_caption(const TokenSequence& tokens, const TextEncoderParams& p) {
  if (tokens.ids.empty()) throw InputError("encode_caption: empty token sequence");
  Tensor m = Tensor::zeros({p.joint_dim()});
  for (TokenId id : tokens.ids) {
    const Tensor x = row(p.embedding, detail::clamp_token(id, p.vocab_size()));
    m = gru_cell(x, m, p.encoder).memory;
  }
  return m;
}

// Per-step diagnostics collected by generation_loss when requested.
struct GenerationTrace {
  std::vector<std::vector<double>> attention;  // one softmax row per step
  std::vector<double> step_nll;
};

// Teacher-forced negative log-likelihood of `target` followed by EOS. The
// decoder starts from a zero state; at each step it reads the previous token
// (BOS first) concatenated with a dot-product attention context over V*.
inline Tensor generation_loss(const EmbeddedRegions& v_star, const TokenSequence& target,
                              const TextEncoderParams& p, GenerationTrace* trace = nullptr) {
  if (target.ids.empty()) throw InputError("generation_loss: empty target");
  if (v_star.dim() != p.joint_dim()) {
    throw ShapeError("generation_loss: region width " + std::to_string(v_star.dim()) +
                     " differs from joint dimension " + std::to_string(p.joint_dim()));
  }
  const std::size_t vocab = p.vocab_size();
  std::vector<TokenId> inputs{kBos};
  std::vector<TokenId> outputs;
  for (TokenId id : target.ids) {
    const TokenId t = detail::clamp_token(id, vocab);
    inputs.push_back(t);
    outputs.push_back(t);
  }
  outputs.push_back(kEos);

  Tensor h = Tensor::zeros({p.joint_dim()});
  Tensor loss;
  for (std::size_t t = 0; t < outputs.size(); ++t) {
    const Tensor weights = row_softmax(matmul(v_star.rows, h));
    const Tensor context = matmul(weights, v_star.rows);
    const Tensor x = concat(row(p.embedding, inputs[t]), context);
    h = gru_cell(x, h, p.decoder).memory;
    const Tensor logits = add_bias(matmul(h, p.w_out), p.b_out);
    const Tensor nll = cross_entropy(logits, outputs[t]);
    if (trace) {
      trace->attention.emplace_back(weights.values().begin(), weights.values().end());
      trace->step_nll.push_back(nll.item());
    }
    loss = loss.defined() ? add(loss, nll) : nll;
  }
  return loss;
}

}  // namespace vsrn
