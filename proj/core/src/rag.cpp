// SPDX-License-Identifier: Apache-2.0
#include "revopt/rag.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "revopt/log.hpp"

namespace revopt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kIndexMagic = "revopt-index";

bool supported_extension(const fs::path& p) {
  const auto ext = to_lower_ascii(p.extension().string());
  return ext == ".txt" || ext == ".md" || ext == ".markdown";
}

bool chunk_key_less(const Chunk& a, const Chunk& b) {
  return std::tie(a.doc_id, a.ordinal) < std::tie(b.doc_id, b.ordinal);
}

// Ranks (1-based) of every entry under `scores`, descending, ties by chunk key.
std::vector<std::size_t> ranks_by(const std::vector<IndexEntry>& entries,
                                  const std::vector<double>& scores) {
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return chunk_key_less(entries[a].chunk, entries[b].chunk);
  });
  std::vector<std::size_t> rank(entries.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;
  return rank;
}

}  // namespace

IngestResult ingest_documents(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw NotFoundError(fmt::format("document directory not found: {}", dir.string()));
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  IngestResult result;
  auto warn = [&](std::string msg) {
    logger()->warn("{}", msg);
    result.warnings.push_back(std::move(msg));
  };
  for (const auto& file : files) {
    const std::string rel = fs::relative(file, dir).generic_string();
    if (!supported_extension(file)) {
      warn(fmt::format("skipping unsupported file: {}", rel));
      continue;
    }
    std::ifstream in(file, std::ios::binary);
    if (!in) {
      warn(fmt::format("skipping unreadable file: {}", rel));
      continue;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    if (text.find('\0') != std::string::npos) {
      warn(fmt::format("skipping binary file: {}", rel));
      continue;
    }
    if (trim(text).empty()) {
      warn(fmt::format("skipping empty file: {}", rel));
      continue;
    }
    result.documents.push_back(Document{rel, file.generic_string(), std::move(text)});
  }
  if (result.documents.empty()) {
    warn(fmt::format("no documents ingested from {}", dir.string()));
  }
  return result;
}

std::vector<Chunk> segment(const Document& doc, SegmentOptions options,
                           const Tokenizer& tokenizer) {
  if (options.chunk_size < 1) throw PreconditionError("chunk_size must be >= 1");
  if (options.overlap >= options.chunk_size) {
    throw PreconditionError("chunk overlap must be smaller than chunk_size");
  }
  const auto tokens = tokenizer.tokenize(doc.text);
  std::vector<Chunk> chunks;
  const std::size_t stride = options.chunk_size - options.overlap;
  for (std::size_t start = 0; start < tokens.size(); start += stride) {
    const std::size_t end = std::min(tokens.size(), start + options.chunk_size);
    const std::size_t from = tokens[start].offset;
    const std::size_t to = tokens[end - 1].offset + tokens[end - 1].length;
    chunks.push_back(Chunk{doc.id, doc.source_path, chunks.size(), doc.text.substr(from, to - from),
                           end - start});
    if (end == tokens.size()) break;
  }
  return chunks;
}

VectorIndex::VectorIndex(std::string embedder_id, std::vector<IndexEntry> entries, Bm25Params bm25)
    : embedder_id_(std::move(embedder_id)), entries_(std::move(entries)), bm25_(bm25) {
  std::size_t total = 0;
  for (const auto& e : entries_) {
    if (dimension_ == 0) dimension_ = e.embedding.dimension();
    if (e.embedding.dimension() != dimension_) {
      throw ConsistencyError(fmt::format("index entry {}#{} has dimension {}, expected {}",
                                         e.chunk.doc_id, e.chunk.ordinal,
                                         e.embedding.dimension(), dimension_));
    }
    for (const auto& [term, _] : e.term_frequencies) ++doc_freq_[term];
    total += e.length;
  }
  avg_length_ = entries_.empty() ? 0.0 : static_cast<double>(total) / entries_.size();
}

std::size_t VectorIndex::document_frequency(const std::string& term) const {
  const auto it = doc_freq_.find(term);
  return it == doc_freq_.end() ? 0 : it->second;
}

double VectorIndex::bm25_score(std::size_t i, const std::vector<std::string>& query_terms) const {
  const auto& entry = entries_.at(i);
  const double n = static_cast<double>(entries_.size());
  const double norm_len = avg_length_ > 0.0 ? entry.length / avg_length_ : 1.0;
  const std::set<std::string> unique(query_terms.begin(), query_terms.end());
  double score = 0.0;
  for (const auto& term : unique) {
    const auto it = entry.term_frequencies.find(term);
    if (it == entry.term_frequencies.end()) continue;
    const double df = static_cast<double>(document_frequency(term));
    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    const double tf = it->second;
    score += idf * tf * (bm25_.k1 + 1.0) / (tf + bm25_.k1 * (1.0 - bm25_.b + bm25_.b * norm_len));
  }
  return score;
}

bool VectorIndex::operator==(const VectorIndex& other) const {
  return embedder_id_ == other.embedder_id_ && entries_ == other.entries_ &&
         bm25_.k1 == other.bm25_.k1 && bm25_.b == other.bm25_.b;
}

void VectorIndex::save(const fs::path& path) const {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write index file {}", tmp.string()));
    out << kIndexMagic << ' ' << kFormatVersion << '\n';
    out << json{{"embedder", embedder_id_},
                {"dimension", dimension_},
                {"count", entries_.size()},
                {"k1", bm25_.k1},
                {"b", bm25_.b}}
               .dump()
        << '\n';
    for (const auto& e : entries_) {
      out << json{{"doc_id", e.chunk.doc_id},
                  {"source_path", e.chunk.source_path},
                  {"ordinal", e.chunk.ordinal},
                  {"text", e.chunk.text},
                  {"token_count", e.chunk.token_count},
                  {"length", e.length},
                  {"embedding", e.embedding.values},
                  {"tf", e.term_frequencies}}
                 .dump()
          << '\n';
    }
    if (!out.flush()) throw Error(fmt::format("failed writing index file {}", tmp.string()));
  }
  fs::rename(tmp, path);
}

VectorIndex VectorIndex::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError(fmt::format("index file not found: {}", path.string()));
  std::string line;
  std::getline(in, line);
  std::istringstream magic(line);
  std::string tag;
  int version = 0;
  magic >> tag >> version;
  if (tag != kIndexMagic) throw FormatError(fmt::format("{}: not an index file", path.string()));
  if (version != kFormatVersion) {
    throw FormatError(fmt::format("{}: index format version {} unsupported (expected {}); rebuild",
                                  path.string(), version, kFormatVersion));
  }
  try {
    std::getline(in, line);
    const json header = json::parse(line);
    const auto count = header.at("count").get<std::size_t>();
    Bm25Params bm25{header.at("k1").get<double>(), header.at("b").get<double>()};
    std::vector<IndexEntry> entries;
    entries.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      if (!std::getline(in, line)) {
        throw FormatError(fmt::format("{}: truncated after {} of {} entries", path.string(), i,
                                      count));
      }
      const json j = json::parse(line);
      IndexEntry e;
      e.chunk.doc_id = j.at("doc_id").get<std::string>();
      e.chunk.source_path = j.at("source_path").get<std::string>();
      e.chunk.ordinal = j.at("ordinal").get<std::size_t>();
      e.chunk.text = j.at("text").get<std::string>();
      e.chunk.token_count = j.at("token_count").get<std::size_t>();
      e.length = j.at("length").get<std::size_t>();
      e.embedding.values = j.at("embedding").get<std::vector<double>>();
      e.term_frequencies = j.at("tf").get<std::map<std::string, int>>();
      entries.push_back(std::move(e));
    }
    VectorIndex index(header.at("embedder").get<std::string>(), std::move(entries), bm25);
    if (index.dimension() != header.at("dimension").get<std::size_t>()) {
      throw FormatError(fmt::format("{}: header dimension disagrees with entries", path.string()));
    }
    return index;
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("{}: malformed index: {}", path.string(), e.what()));
  }
}

VectorIndex build_index(const std::vector<Chunk>& chunks, Embedder& embedder, Bm25Params bm25,
                        std::size_t batch_size) {
  if (batch_size == 0) throw PreconditionError("batch_size must be positive");
  std::vector<IndexEntry> entries;
  entries.reserve(chunks.size());
  std::size_t dimension = 0;
  for (std::size_t start = 0; start < chunks.size(); start += batch_size) {
    const std::size_t end = std::min(chunks.size(), start + batch_size);
    std::vector<std::string> texts;
    for (std::size_t i = start; i < end; ++i) texts.push_back(chunks[i].text);
    auto vectors = embedder.embed(texts);
    if (vectors.size() != texts.size()) {
      throw ConsistencyError(fmt::format("embedder returned {} vectors for {} chunks",
                                         vectors.size(), texts.size()));
    }
    for (std::size_t i = start; i < end; ++i) {
      auto& vec = vectors[i - start];
      if (dimension == 0) dimension = vec.dimension();
      if (vec.dimension() != dimension || dimension == 0) {
        throw ConsistencyError(fmt::format("embedding dimension changed from {} to {} at chunk {}",
                                           dimension, vec.dimension(), i));
      }
      IndexEntry e;
      e.chunk = chunks[i];
      e.embedding = std::move(vec);
      for (auto& term : word_terms(chunks[i].text)) {
        ++e.term_frequencies[term];
        ++e.length;
      }
      entries.push_back(std::move(e));
    }
  }
  return VectorIndex(embedder.id(), std::move(entries), bm25);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension()) {
    throw ConsistencyError(fmt::format("cosine of vectors with dimensions {} and {}",
                                       a.dimension(), b.dimension()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::string render_context(const std::vector<RetrievalHit>& hits) {
  std::string out;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (i > 0) out += "\n---\n";
    out += fmt::format("[{}]\n{}", hits[i].chunk.source_path, hits[i].chunk.text);
  }
  return out;
}

RetrievedContext retrieve(const VectorIndex& index, Embedder& embedder, std::string_view query,
                          std::size_t k) {
  if (k < 1) throw PreconditionError("retrieve: k must be >= 1");
  RetrievedContext ctx;
  if (index.empty()) return ctx;
  if (trim(query).empty()) throw PreconditionError("retrieve: empty query");

  const std::string q(query);
  auto qvec = embedder.embed(std::span<const std::string>(&q, 1));
  if (qvec.size() != 1 || qvec.front().dimension() != index.dimension()) {
    throw ConsistencyError(fmt::format("query embedding dimension does not match index ({})",
                                       index.dimension()));
  }
  const auto terms = word_terms(query);
  const auto& entries = index.entries();
  std::vector<double> cos(entries.size()), kw(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    cos[i] = cosine_similarity(qvec.front(), entries[i].embedding);
    kw[i] = index.bm25_score(i, terms);
  }
  const auto rank_v = ranks_by(entries, cos);
  const auto rank_k = ranks_by(entries, kw);

  std::vector<RetrievalHit> all;
  all.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    RetrievalHit h;
    h.chunk = entries[i].chunk;
    h.cosine = cos[i];
    h.bm25 = kw[i];
    h.rank_vector = rank_v[i];
    h.rank_keyword = rank_k[i];
    h.fused_score = 1.0 / static_cast<double>(kRrfConstant + rank_v[i]) +
                    1.0 / static_cast<double>(kRrfConstant + rank_k[i]);
    all.push_back(std::move(h));
  }
  const std::size_t take = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(),
                    [](const RetrievalHit& a, const RetrievalHit& b) {
                      if (a.fused_score != b.fused_score) return a.fused_score > b.fused_score;
                      return chunk_key_less(a.chunk, b.chunk);
                    });
  all.resize(take);
  ctx.hits = std::move(all);
  ctx.rendered = render_context(ctx.hits);
  return ctx;
}

}  // namespace revopt
