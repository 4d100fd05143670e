#pragma once

// Synthetic paired corpus: each item is a bag of noisy concept prototypes
// (the "image") and a caption naming the same concepts in random order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vsrn/errors.hpp"
#include "vsrn/harness/binary_io.hpp"
#include "vsrn/region_reasoning.hpp"
#include "vsrn/rng.hpp"
#include "vsrn/text_pipeline.hpp"

namespace vsrn {

enum class Split : std::uint8_t { train = 0, val = 1, test = 2 };

inline Split parse_split(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw ParameterError("unknown split '" + name + "'");
}

struct CorpusItem {
  RegionSet regions;
  TokenSequence caption;
  Split split = Split::train;

  bool operator==(const CorpusItem&) const = default;
};

struct SyntheticCorpus {
  Vocabulary vocab;
  std::vector<CorpusItem> items;
  std::uint32_t canvas_width = 64;
  std::uint32_t canvas_height = 64;

  std::size_t feature_dim() const {
    return items.empty() ? 0 : items.front().regions.feature_dim;
  }

  std::vector<std::size_t> indices(Split split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < items.size(); ++i)
      if (items[i].split == split) out.push_back(i);
    return out;
  }

  bool operator==(const SyntheticCorpus& o) const {
    return vocab == o.vocab && items == o.items && canvas_width == o.canvas_width &&
           canvas_height == o.canvas_height;
  }
};

struct CorpusOptions {
  std::size_t n_items = 80;
  std::size_t n_concepts = 24;
  std::size_t k_regions = 6;
  std::size_t feature_dim = 16;
  std::size_t concepts_per_item = 3;
  std::size_t n_val = 16;
  std::size_t n_test = 0;
  double noise = 0.1;
  std::uint32_t canvas = 64;
  std::uint64_t seed = 0;
};

inline std::string concept_name(std::size_t index) {
  static const char* const kWords[] = {
      "dog",    "cat",   "tree",  "car",    "ball",   "man",    "woman", "child",
      "horse",  "boat",  "sky",   "grass",  "house",  "table",  "chair", "bird",
      "train",  "bike",  "road",  "water",  "plate",  "pizza",  "kite",  "phone",
      "clock",  "bench", "sheep", "cow",    "bus",    "truck",  "snow",  "beach",
      "window", "door",  "lamp",  "flower", "fence",  "bridge", "cloud", "hat"};
  constexpr std::size_t n = sizeof(kWords) / sizeof(kWords[0]);
  if (index < n) return kWords[index];
  return "concept" + std::to_string(index);
}

// Number of distinct concept subsets of the given size.
inline double subset_count(std::size_t n, std::size_t s) {
  double c = 1.0;
  for (std::size_t i = 0; i < s; ++i) c = c * static_cast<double>(n - i) / static_cast<double>(i + 1);
  return c;
}

// Items are laid out train, then val, then test. When enough subsets exist
// every item gets a distinct concept set, so no two captions are
// permutations of each other.
inline SyntheticCorpus generate_synthetic_corpus(const CorpusOptions& opt) {
  if (opt.n_items == 0 || opt.n_concepts < 2 || opt.k_regions == 0 || opt.feature_dim == 0 ||
      opt.concepts_per_item == 0 || opt.concepts_per_item > opt.n_concepts ||
      opt.n_val + opt.n_test > opt.n_items || opt.canvas < 2 || !(opt.noise >= 0.0)) {
    throw ParameterError("generate_synthetic_corpus: degenerate parameters");
  }
  Rng rng(opt.seed);
  const std::size_t f = opt.feature_dim;
  std::vector<std::vector<double>> prototypes(opt.n_concepts, std::vector<double>(f));
  for (auto& p : prototypes)
    for (double& x : p) x = rng.normal();

  const std::size_t s = opt.concepts_per_item;
  const bool unique = subset_count(opt.n_concepts, s) >= static_cast<double>(opt.n_items);
  std::set<std::vector<std::size_t>> used;

  SyntheticCorpus corpus;
  corpus.canvas_width = corpus.canvas_height = opt.canvas;
  std::vector<std::string> texts;
  const std::size_t n_train = opt.n_items - opt.n_val - opt.n_test;
  for (std::size_t item = 0; item < opt.n_items; ++item) {
    std::vector<std::size_t> chosen;
    while (true) {
      std::vector<std::size_t> pool(opt.n_concepts);
      for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
      for (std::size_t i = 0; i < s; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
      chosen.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(s));
      auto key = chosen;
      std::sort(key.begin(), key.end());
      if (!unique || used.insert(key).second) break;
    }

    CorpusItem ci;
    ci.split = item < n_train ? Split::train : item < n_train + opt.n_val ? Split::val : Split::test;
    RegionSet& rs = ci.regions;
    rs.feature_dim = f;
    for (std::size_t r = 0; r < opt.k_regions; ++r) {
      const auto& proto = prototypes[chosen[r % s]];
      for (std::size_t j = 0; j < f; ++j) rs.features.push_back(proto[j] + opt.noise * rng.normal());
      const double w = 1.0 + static_cast<double>(rng.below(opt.canvas / 2));
      const double h = 1.0 + static_cast<double>(rng.below(opt.canvas / 2));
      const double x = static_cast<double>(rng.below(opt.canvas - static_cast<std::uint32_t>(w) + 1));
      const double y = static_cast<double>(rng.below(opt.canvas - static_cast<std::uint32_t>(h) + 1));
      rs.boxes.push_back({x, y, w, h});
      rs.confidences.push_back(rng.uniform(0.3, 1.0));
    }

    auto words = chosen;
    rng.shuffle(words);
    std::string text;
    for (std::size_t w : words) text += (text.empty() ? "" : " ") + concept_name(w);
    texts.push_back(text);
    corpus.items.push_back(std::move(ci));
  }
  for (std::size_t i = 0; i < corpus.items.size(); ++i) {
    if (corpus.items[i].split != Split::train) continue;
    for (const auto& tok : Vocabulary::tokenize(texts[i])) corpus.vocab.add(tok);
  }
  for (std::size_t i = 0; i < corpus.items.size(); ++i) {
    corpus.items[i].caption = encode_text(corpus.vocab, texts[i]);
  }
  return corpus;
}

// Defaults: one fifth of the items held out for validation, no test split.
inline SyntheticCorpus generate_synthetic_corpus(std::size_t n_items, std::size_t n_concepts,
                                                 std::size_t k_regions, std::size_t feature_dim,
                                                 std::uint64_t seed) {
  CorpusOptions opt;
  opt.n_items = n_items;
  opt.n_concepts = n_concepts;
  opt.k_regions = k_regions;
  opt.feature_dim = feature_dim;
  opt.concepts_per_item = std::min<std::size_t>({3, n_concepts, k_regions});
  opt.n_val = n_items / 5;
  opt.n_test = 0;
  opt.seed = seed;
  return generate_synthetic_corpus(opt);
}

// ---------------------------------------------------------------------------
// Persistence: binary corpus file plus a "<path>.vocab" sidecar holding one
// token per line in id order.
// ---------------------------------------------------------------------------

inline constexpr char kCorpusMagic[4] = {'V', 'S', 'R', 'C'};
inline constexpr std::uint32_t kCorpusVersion = 1;

inline std::string encode_corpus(const SyntheticCorpus& corpus) {
  io::ByteWriter w;
  w.raw(std::string_view(kCorpusMagic, 4));
  w.u32(kCorpusVersion);
  w.u32(corpus.canvas_width);
  w.u32(corpus.canvas_height);
  w.u32(static_cast<std::uint32_t>(corpus.feature_dim()));
  w.u32(static_cast<std::uint32_t>(corpus.items.size()));
  for (const auto& item : corpus.items) {
    w.u8(static_cast<std::uint8_t>(item.split));
    const auto& rs = item.regions;
    w.u32(static_cast<std::uint32_t>(rs.size()));
    for (double v : rs.features) w.f64(v);
    for (const auto& b : rs.boxes) {
      w.f64(b.x);
      w.f64(b.y);
      w.f64(b.width);
      w.f64(b.height);
    }
    for (double c : rs.confidences) w.f64(c);
    w.u32(static_cast<std::uint32_t>(item.caption.ids.size()));
    for (TokenId id : item.caption.ids) w.u32(id);
  }
  w.seal();
  return w.bytes();
}

inline std::string encode_vocabulary(const Vocabulary& vocab) {
  std::string out;
  for (const auto& tok : vocab.tokens()) out += tok + "\n";
  return out;
}

inline Vocabulary decode_vocabulary(std::string_view text) {
  Vocabulary vocab;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t id = 0;
  while (std::getline(in, line)) {
    if (id < 4) {
      if (line != vocab.token(static_cast<TokenId>(id))) {
        throw FormatError("vocabulary: reserved token mismatch at id " + std::to_string(id));
      }
    } else if (vocab.add(line) != id) {
      throw FormatError("vocabulary: duplicate token '" + line + "'");
    }
    ++id;
  }
  if (id < 4) throw FormatError("vocabulary: missing reserved tokens");
  return vocab;
}

inline SyntheticCorpus decode_corpus(std::string_view bytes, Vocabulary vocab) {
  if (bytes.size() < 8 || bytes.substr(0, 4) != std::string_view(kCorpusMagic, 4)) {
    throw FormatError("corpus: bad magic");
  }
  io::ByteReader header(bytes.substr(4, 4));
  if (header.u32() != kCorpusVersion) throw FormatError("corpus: unsupported version");
  io::ByteReader r(io::checked_payload(bytes));
  r.take(8);
  SyntheticCorpus corpus;
  corpus.vocab = std::move(vocab);
  corpus.canvas_width = r.u32();
  corpus.canvas_height = r.u32();
  const std::uint32_t f = r.u32();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    CorpusItem item;
    const std::uint8_t split = r.u8();
    if (split > 2) throw CorruptionError("corpus: bad split tag");
    item.split = static_cast<Split>(split);
    const std::uint32_t k = r.u32();
    item.regions.feature_dim = f;
    item.regions.features.resize(std::size_t{k} * f);
    for (double& v : item.regions.features) v = r.f64();
    item.regions.boxes.resize(k);
    for (auto& b : item.regions.boxes) {
      b.x = r.f64();
      b.y = r.f64();
      b.width = r.f64();
      b.height = r.f64();
    }
    item.regions.confidences.resize(k);
    for (double& c : item.regions.confidences) c = r.f64();
    item.caption.ids.resize(r.u32());
    for (TokenId& id : item.caption.ids) {
      id = r.u32();
      if (id >= corpus.vocab.size()) throw CorruptionError("corpus: token id outside vocabulary");
    }
    item.regions.validate();
    corpus.items.push_back(std::move(item));
  }
  if (r.remaining() != 0) throw CorruptionError("corpus: trailing bytes");
  return corpus;
}

inline void save_corpus(const SyntheticCorpus& corpus, const std::string& path) {
  io::write_file(path, encode_corpus(corpus));
  io::write_file(path + ".vocab", encode_vocabulary(corpus.vocab));
}

inline SyntheticCorpus load_corpus(const std::string& path) {
  Vocabulary vocab = decode_vocabulary(io::read_file(path + ".vocab"));
  return decode_corpus(io::read_file(path), std::move(vocab));
}

}  // namespace vsrn
