/**
 * gmdalign
 *
 * This code is released under the
 * Apache License Version 2.0 http://www.apache.org/licenses/.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "gmdalign/errors.hpp"

namespace gmdalign {

// ---- byte-order helpers (all on-disk integers/reals are little-endian) ----

namespace detail {

inline void put_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32le(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
         std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

inline std::uint64_t get_u64le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline float get_f32le(const unsigned char* p) {
  const std::uint32_t bits = get_u32le(p);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

inline void put_f32le(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32le(out, bits);
}

inline void put_f64le(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64le(out, bits);
}

inline double get_f64le(const unsigned char* p) {
  const std::uint64_t bits = get_u64le(p);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on " + path);
  return bytes;
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failed on " + path);
}

}  // namespace detail

// ---- calendar date ---------------------------------------------------------

// Naive calendar date; no time zone. Alignment only ever compares dates for
// equality or order.
struct Date {
  int year = 0;
  int month = 0;
  int day = 0;
  auto operator<=>(const Date&) const = default;
};

inline bool is_valid_date(int y, int m, int d) {
  if (m < 1 || m > 12 || d < 1) return false;
  static constexpr int kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int limit = kDays[m - 1];
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  if (m == 2 && leap) limit = 29;
  return d <= limit;
}

inline std::optional<Date> parse_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  for (int i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (s[i] < '0' || s[i] > '9') return std::nullopt;
  const int y = std::stoi(s.substr(0, 4));
  const int m = std::stoi(s.substr(5, 2));
  const int d = std::stoi(s.substr(8, 2));
  if (!is_valid_date(y, m, d)) return std::nullopt;
  return Date{y, m, d};
}

inline std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

// ---- embedding matrix -------------------------------------------------------

// Row-major float32 storage; all numeric work downstream promotes to double.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(int dim, std::vector<float> data)
      : dim_(dim), data_(std::move(data)) {
    if (dim_ <= 0) throw ValidationError("embedding dim must be positive");
    if (data_.size() % static_cast<std::size_t>(dim_) != 0)
      throw ValidationError("embedding data size is not a multiple of dim");
  }

  int dim() const noexcept { return dim_; }
  std::size_t rows() const noexcept {
    return dim_ > 0 ? data_.size() / static_cast<std::size_t>(dim_) : 0;
  }

  Eigen::Map<const Eigen::VectorXf> row(std::size_t i) const {
    return {data_.data() + i * static_cast<std::size_t>(dim_),
            static_cast<Eigen::Index>(dim_)};
  }

  Eigen::VectorXd row_d(std::size_t i) const {
    return row(i).cast<double>();
  }

  const std::vector<float>& data() const noexcept { return data_; }

 private:
  int dim_ = 0;
  std::vector<float> data_;
};

// ---- documents --------------------------------------------------------------

struct SentenceRef {
  std::int64_t emb_row = 0;
  int token_count = 1;       // |i| in the sentence-length weighting
  int occurrence_count = 1;  // count(i), usually 1
  std::string content_key;   // empty when the exporter did not provide one
};

// Key used for document-frequency counting. Falls back to row identity when
// the manifest carries no content hash.
inline std::string sentence_key(const SentenceRef& s) {
  if (!s.content_key.empty()) return "k:" + s.content_key;
  return "r:" + std::to_string(s.emb_row);
}

struct Document {
  std::string doc_id;
  std::string lang;
  std::optional<Date> date;
  std::vector<SentenceRef> sentences;
};

struct GoldAlignment {
  std::set<std::pair<std::string, std::string>> pairs;
};

struct ParallelPairSet {
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
};

// ---- embedding matrix file --------------------------------------------------
// magic "GMDA" | u32 version=1 | u32 dim | u64 rows | rows*dim float32, all LE.

inline constexpr char kEmbeddingMagic[4] = {'G', 'M', 'D', 'A'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;

inline void write_embedding_matrix(const EmbeddingMatrix& m, const std::string& path) {
  std::string out;
  out.reserve(20 + m.data().size() * 4);
  out.append(kEmbeddingMagic, 4);
  detail::put_u32le(out, kEmbeddingVersion);
  detail::put_u32le(out, static_cast<std::uint32_t>(m.dim()));
  detail::put_u64le(out, static_cast<std::uint64_t>(m.rows()));
  for (float f : m.data()) detail::put_f32le(out, f);
  detail::write_file_bytes(path, out);
}

inline EmbeddingMatrix read_embedding_matrix(const std::string& path) {
  const std::string bytes = detail::read_file_bytes(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kEmbeddingMagic, 4) != 0)
    throw BadMagicError(path + ": bad magic at byte 0 (expected GMDA)");
  if (bytes.size() < 20)
    throw TruncatedFileError(path + ": header truncated at byte " +
                             std::to_string(bytes.size()));
  const std::uint32_t version = detail::get_u32le(p + 4);
  if (version != kEmbeddingVersion)
    throw BadHeaderError(path + ": unsupported version " + std::to_string(version));
  const std::uint32_t dim = detail::get_u32le(p + 8);
  const std::uint64_t rows = detail::get_u64le(p + 12);
  if (dim == 0) throw BadHeaderError(path + ": dim is zero");
  const std::uint64_t want = 20 + rows * dim * 4;
  if (bytes.size() < want) {
    const std::uint64_t have_rows = (bytes.size() - 20) / (4 * dim);
    throw TruncatedFileError(path + ": declares " + std::to_string(rows) +
                             " rows but holds " + std::to_string(have_rows) +
                             " (file ends at byte " + std::to_string(bytes.size()) + ")");
  }
  std::vector<float> data(rows * dim);
  for (std::uint64_t i = 0; i < rows * dim; ++i) {
    data[i] = detail::get_f32le(p + 20 + i * 4);
    if (!std::isfinite(data[i]))
      throw NonFiniteValueError(path + ": non-finite value in row " +
                                std::to_string(i / dim) + " at byte " +
                                std::to_string(20 + i * 4));
  }
  return EmbeddingMatrix(static_cast<int>(dim), std::move(data));
}

// ---- manifest (JSON Lines) ---------------------------------------------------

inline std::vector<Document> read_manifest(const std::string& path,
                                           const EmbeddingMatrix& emb) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<Document> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw ParseError(path, lineno, "not a JSON object");
    Document doc;
    try {
      doc.doc_id = j.at("doc_id").get<std::string>();
      doc.lang = j.value("lang", std::string{});
      if (j.contains("date")) {
        const auto ds = j.at("date").get<std::string>();
        doc.date = parse_date(ds);
        if (!doc.date)
          throw ParseError(path, lineno, "bad date '" + ds + "' (want YYYY-MM-DD)");
      }
      for (const auto& sj : j.at("sentences")) {
        SentenceRef s;
        s.emb_row = sj.at("emb_row").get<std::int64_t>();
        s.token_count = sj.at("token_count").get<int>();
        s.occurrence_count = sj.value("occurrence_count", 1);
        s.content_key = sj.value("content_key", std::string{});
        if (s.token_count < 1)
          throw ParseError(path, lineno, "token_count < 1 in " + doc.doc_id);
        if (s.occurrence_count < 1)
          throw ParseError(path, lineno, "occurrence_count < 1 in " + doc.doc_id);
        if (s.emb_row < 0 || static_cast<std::uint64_t>(s.emb_row) >= emb.rows())
          throw RowOutOfBoundsError(path + ":" + std::to_string(lineno) +
                                    ": emb_row " + std::to_string(s.emb_row) +
                                    " out of bounds for " + std::to_string(emb.rows()) +
                                    " rows (doc " + doc.doc_id + ")");
        doc.sentences.push_back(std::move(s));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path, lineno, e.what());
    }
    if (doc.sentences.empty())
      throw EmptyDocumentError(path + ":" + std::to_string(lineno) +
                               ": document " + doc.doc_id + " has no sentences");
    docs.push_back(std::move(doc));
  }
  if (in.bad()) throw IoError("read failed on " + path);
  return docs;
}

inline void write_manifest(const std::vector<Document>& docs, const std::string& path) {
  std::string out;
  for (const auto& d : docs) {
    nlohmann::json j;
    j["doc_id"] = d.doc_id;
    j["lang"] = d.lang;
    if (d.date) j["date"] = format_date(*d.date);
    auto& arr = j["sentences"] = nlohmann::json::array();
    for (const auto& s : d.sentences) {
      nlohmann::json sj;
      sj["emb_row"] = s.emb_row;
      sj["token_count"] = s.token_count;
      if (s.occurrence_count != 1) sj["occurrence_count"] = s.occurrence_count;
      if (!s.content_key.empty()) sj["content_key"] = s.content_key;
      arr.push_back(std::move(sj));
    }
    out += j.dump();
    out += '\n';
  }
  detail::write_file_bytes(path, out);
}

// ---- TSV files ----------------------------------------------------------------

namespace detail {

// Splits a TSV payload into fields per line, skipping comments and blanks.
template <typename Fn>
void for_each_tsv_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    fn(lineno, fields);
  }
  if (in.bad()) throw IoError("read failed on " + path);
}

inline std::int64_t parse_i64(const std::string& path, std::size_t lineno,
                              const std::string& s) {
  try {
    std::size_t used = 0;
    const std::int64_t v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(path, lineno, "not an integer: '" + s + "'");
  }
}

}  // namespace detail

inline GoldAlignment read_gold(const std::string& path) {
  GoldAlignment gold;
  detail::for_each_tsv_line(path, [&](std::size_t lineno,
                                      const std::vector<std::string>& f) {
    if (f.size() != 2)
      throw ParseError(path, lineno, "expected 2 tab-separated fields, got " +
                                         std::to_string(f.size()));
    if (f[0].empty() || f[1].empty())
      throw ParseError(path, lineno, "empty doc id");
    if (!gold.pairs.emplace(f[0], f[1]).second)
      throw DuplicatePairError(path + ":" + std::to_string(lineno) +
                               ": duplicate gold pair " + f[0] + "\t" + f[1]);
  });
  return gold;
}

inline void write_gold(const GoldAlignment& gold, const std::string& path) {
  std::string out;
  for (const auto& [s, t] : gold.pairs) {
    out += s;
    out += '\t';
    out += t;
    out += '\n';
  }
  detail::write_file_bytes(path, out);
}

inline ParallelPairSet read_pairs(const std::string& path) {
  ParallelPairSet set;
  detail::for_each_tsv_line(path, [&](std::size_t lineno,
                                      const std::vector<std::string>& f) {
    if (f.size() != 2)
      throw ParseError(path, lineno, "expected 2 tab-separated fields, got " +
                                         std::to_string(f.size()));
    const auto src = detail::parse_i64(path, lineno, f[0]);
    const auto tgt = detail::parse_i64(path, lineno, f[1]);
    if (src < 0 || tgt < 0)
      throw ParseError(path, lineno, "negative row index");
    set.pairs.emplace_back(src, tgt);
  });
  if (set.pairs.empty())
    throw ParseError(path, 0, "no parallel pairs in file");
  return set;
}

inline void write_pairs(const ParallelPairSet& set, const std::string& path) {
  std::string out;
  for (const auto& [s, t] : set.pairs) {
    out += std::to_string(s);
    out += '\t';
    out += std::to_string(t);
    out += '\n';
  }
  detail::write_file_bytes(path, out);
}

}  // namespace gmdalign
