// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "revopt/llm.hpp"
#include "revopt/text.hpp"

namespace revopt {

struct Document {
  /// Path relative to the ingested directory, '/'-separated.
  std::string id;
  std::string source_path;
  std::string text;
};

struct IngestResult {
  std::vector<Document> documents;
  std::vector<std::string> warnings;
};

/// Loads every `.txt`/`.md` file under `dir` (recursively), ordered by path.
/// Unsupported, binary, empty or unreadable files are skipped with a warning.
IngestResult ingest_documents(const std::filesystem::path& dir);

struct Chunk {
  std::string doc_id;
  std::string source_path;
  std::size_t ordinal = 0;
  /// Source text from the first to the last token of the chunk.
  std::string text;
  std::size_t token_count = 0;

  bool operator==(const Chunk&) const = default;
};

struct SegmentOptions {
  std::size_t chunk_size = 500;
  /// Tokens repeated from the end of the previous chunk.
  std::size_t overlap = 0;
};

/// Greedy fixed-size segmentation on token boundaries; the last chunk may be
/// short. A document without tokens yields no chunks.
std::vector<Chunk> segment(const Document& doc, SegmentOptions options = {},
                           const Tokenizer& tokenizer = WordPunctTokenizer{});

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct IndexEntry {
  Chunk chunk;
  EmbeddingVector embedding;
  std::map<std::string, int> term_frequencies;
  std::size_t length = 0;  ///< total term count

  bool operator==(const IndexEntry&) const = default;
};

/// Immutable once built; safe for concurrent readers.
class VectorIndex {
 public:
  static constexpr int kFormatVersion = 1;

  VectorIndex() = default;
  VectorIndex(std::string embedder_id, std::vector<IndexEntry> entries, Bm25Params bm25 = {});

  const std::vector<IndexEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t dimension() const { return dimension_; }
  const std::string& embedder_id() const { return embedder_id_; }
  const Bm25Params& bm25() const { return bm25_; }

  std::size_t document_frequency(const std::string& term) const;
  double average_length() const { return avg_length_; }

  /// BM25 of entry `i` for the given query terms (duplicates ignored).
  double bm25_score(std::size_t i, const std::vector<std::string>& query_terms) const;

  /// Writes atomically (temp file + rename): a failed save leaves no file.
  void save(const std::filesystem::path& path) const;
  static VectorIndex load(const std::filesystem::path& path);

  bool operator==(const VectorIndex& other) const;

 private:
  std::string embedder_id_;
  std::vector<IndexEntry> entries_;
  Bm25Params bm25_;
  std::size_t dimension_ = 0;
  std::map<std::string, std::size_t> doc_freq_;
  double avg_length_ = 0.0;
};

/// Embeds every chunk (in batches) and computes term statistics. Throws
/// ConsistencyError when the embedder's dimension is not uniform.
VectorIndex build_index(const std::vector<Chunk>& chunks, Embedder& embedder,
                        Bm25Params bm25 = {}, std::size_t batch_size = 64);

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

inline constexpr int kRrfConstant = 60;

struct RetrievalHit {
  Chunk chunk;
  double fused_score = 0.0;
  double cosine = 0.0;
  double bm25 = 0.0;
  std::size_t rank_vector = 0;
  std::size_t rank_keyword = 0;
};

struct RetrievedContext {
  std::vector<RetrievalHit> hits;
  std::string rendered;
};

/// Hybrid retrieval: every chunk gets 1/(60 + rank_vector) + 1/(60 + rank_keyword)
/// where ranks (1-based, ties by (doc_id, ordinal)) order by embedding cosine
/// and by BM25. Returns the k best, fused score descending with the same
/// tie-break. An empty index yields no hits and an empty rendered string.
RetrievedContext retrieve(const VectorIndex& index, Embedder& embedder, std::string_view query,
                          std::size_t k = 4);

/// Each hit as "[source_path]\ntext", joined by a "---" separator line.
std::string render_context(const std::vector<RetrievalHit>& hits);

}  // namespace revopt
